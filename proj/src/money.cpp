#include "donverify/money.hpp"

#include <charconv>

namespace donverify {

namespace {

[[noreturn]] void bad_amount(std::string_view text, const char* why) {
    throw std::invalid_argument("invalid amount '" + std::string(text) + "': " + why);
}

}  // namespace

Money parse_money(std::string_view text, int minor_digits) {
    if (minor_digits < 0 || minor_digits > 9) {
        throw std::invalid_argument("minor_digits must be in [0, 9]");
    }
    std::string_view rest = text;
    bool negative = false;
    if (!rest.empty() && (rest.front() == '-' || rest.front() == '+')) {
        negative = rest.front() == '-';
        rest.remove_prefix(1);
    }
    const auto dot = rest.find('.');
    std::string_view whole = rest.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
    if (whole.empty() && frac.empty()) bad_amount(text, "no digits");
    if (dot != std::string_view::npos && frac.empty()) bad_amount(text, "trailing decimal point");

    // Trailing zeros beyond the minor unit are harmless; anything else is not representable.
    while (frac.size() > static_cast<std::size_t>(minor_digits) && frac.back() == '0') frac.remove_suffix(1);
    if (frac.size() > static_cast<std::size_t>(minor_digits)) bad_amount(text, "finer than one minor unit");

    std::string digits(whole);
    digits.append(frac);
    digits.append(static_cast<std::size_t>(minor_digits) - frac.size(), '0');
    if (digits.empty()) digits = "0";
    for (char c : digits) {
        if (c < '0' || c > '9') bad_amount(text, "not a decimal number");
    }

    Money::rep value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) bad_amount(text, "out of range");
    return Money{negative ? -value : value};
}

std::string format_money(Money m, int minor_digits) {
    const bool negative = m.is_negative();
    // Work in unsigned space so INT64_MIN renders correctly.
    auto magnitude = negative ? ~static_cast<std::uint64_t>(m.minor()) + 1 : static_cast<std::uint64_t>(m.minor());
    std::string digits = std::to_string(magnitude);
    if (minor_digits > 0) {
        if (digits.size() <= static_cast<std::size_t>(minor_digits)) {
            digits.insert(0, static_cast<std::size_t>(minor_digits) + 1 - digits.size(), '0');
        }
        digits.insert(digits.size() - static_cast<std::size_t>(minor_digits), ".");
    }
    return negative ? "-" + digits : digits;
}

}  // namespace donverify
