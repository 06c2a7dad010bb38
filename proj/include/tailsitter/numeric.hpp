#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <system_error>

#include "tailsitter/error.hpp"

namespace tailsitter {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar two_pi = Scalar(2) * pi;
    if (angle > -pi && angle <= pi) {
        return angle;
    }
    Scalar wrapped = angle - two_pi * std::ceil((angle - pi) / two_pi);
    // ceil() can land one period off when angle-pi is within an ulp of a multiple of 2pi
    if (wrapped <= -pi) {
        wrapped += two_pi;
    } else if (wrapped > pi) {
        wrapped -= two_pi;
    }
    return wrapped;
}

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double value) {
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) {
        throw Error(ErrorKind::format, "cannot format value");
    }
    return std::string(buffer, end);
}

/// Strict full-field parse; surrounding whitespace is tolerated.
inline bool parse_double(std::string_view text, double &out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (text.empty()) {
        return false;
    }
    // from_chars rejects a leading '+', accept it for hand-written files
    if (text.front() == '+') {
        text.remove_prefix(1);
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

inline bool parse_integer(std::string_view text, long long &out) {
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) {
        text.remove_suffix(1);
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size();
}

// The standard distributions are implementation-defined; these two draws are
// not, so generated artifacts match across standard libraries.

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double uniform_unit(std::mt19937_64 &rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_between(std::mt19937_64 &rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_index(std::mt19937_64 &rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) {
        draw = rng();
    }
    return draw % bound;
}

/// Fisher-Yates with uniform_index.
template <typename RandomIt>
void deterministic_shuffle(RandomIt first, RandomIt last, std::mt19937_64 &rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = uniform_index(rng, i);
        using std::swap;
        swap(first[i - 1], first[j]);
    }
}

inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

} // namespace tailsitter
