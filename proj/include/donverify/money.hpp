#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace donverify {

/// Signed amount in minor currency units. All sums are exact; overflow throws.
class Money {
public:
    using rep = std::int64_t;

    constexpr Money() = default;
    constexpr explicit Money(rep minor) : minor_(minor) {}

    [[nodiscard]] constexpr rep minor() const { return minor_; }

    friend constexpr auto operator<=>(Money, Money) = default;

    Money& operator+=(Money other) {
        if (__builtin_add_overflow(minor_, other.minor_, &minor_)) {
            throw std::overflow_error("money addition overflow");
        }
        return *this;
    }
    Money& operator-=(Money other) {
        if (__builtin_sub_overflow(minor_, other.minor_, &minor_)) {
            throw std::overflow_error("money subtraction overflow");
        }
        return *this;
    }
    friend Money operator+(Money a, Money b) { return a += b; }
    friend Money operator-(Money a, Money b) { return a -= b; }
    friend Money operator-(Money a) { return Money{} - a; }

    [[nodiscard]] constexpr bool is_negative() const { return minor_ < 0; }

    [[nodiscard]] double to_double() const { return static_cast<double>(minor_); }

private:
    rep minor_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Money m) { return os << m.minor(); }

/// Parses a decimal currency string ("12", "-3.50") into minor units, given
/// the number of fractional digits one major unit carries. Rejects anything
/// finer than one minor unit.
Money parse_money(std::string_view text, int minor_digits);

/// Inverse of parse_money: renders minor units as a decimal string.
std::string format_money(Money m, int minor_digits);

}  // namespace donverify
