#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxplace {

// Absolute tolerance used by every geometric predicate in the library.
inline constexpr double kGeomEps = 1e-9;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An object, asset or anchor id that does not resolve.
struct UnknownIdError : Error {
    explicit UnknownIdError(const std::string& id)
        : Error("unknown id '" + id + "'"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

struct SceneError : Error {
    using Error::Error;
};

struct SpecError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// [0, 360)
inline double wrap360(double deg) {
    double w = std::fmod(deg, 360.0);
    if (w < 0.0) w += 360.0;
    if (w >= 360.0) w -= 360.0;
    return w;
}

// [-180, 180)
inline double wrap180(double deg) {
    double w = wrap360(deg + 180.0) - 180.0;
    return w;
}

inline std::string fixed(double v, int precision) {
    if (v == 0.0) v = 0.0;  // drop negative zero
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s(buf);
    // "-0.000" after rounding tiny negatives
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

// Deterministic 64-bit generator with a platform-independent real mapping.
// std::uniform_real_distribution is implementation-defined, so it is avoided
// wherever results have to be bit-reproducible.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    SplitMix64 g(a ^ (b * 0xD1B54A32D192ED03ull));
    g.next();
    return g.next();
}

}  // namespace ctxplace
