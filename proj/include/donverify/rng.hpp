#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace donverify {

// Randomness contract
// -------------------
// Every random decision in the library is a pure function of a 64-bit seed.
// Substreams are keyed: derive_seed(seed, key) mixes the pair with SplitMix64,
// and the donor key is the FNV-1a hash of the donor id. Streams themselves are
// std::mt19937_64, whose output sequence is fixed by the standard; the
// conversions to integers and doubles below avoid the implementation-defined
// std:: distributions so results are identical across standard libraries.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
    return splitmix64(splitmix64(seed) ^ key);
}

/// Maps 64 random bits to a double uniform on [0, 1) with 53-bit resolution.
constexpr double unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return unit_interval(engine_()); }

    /// Uniform integer in [lo, hi], inclusive; unbiased via rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
        if (span == ~std::uint64_t{0}) return static_cast<std::int64_t>(engine_());
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % range);
    }

    std::size_t index(std::size_t size) {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(size) - 1));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace donverify
