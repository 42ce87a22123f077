#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowmix {

// Error taxonomy mapped to CLI exit codes: usage/config -> 1, input -> 2, numeric -> 3.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error("dimension error: " + msg) {}
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error("input error: " + msg) {}
};
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};
struct StateError : std::runtime_error {
    explicit StateError(const std::string& msg) : std::runtime_error("state error: " + msg) {}
};

// Deterministic splittable RNG. splitmix64 both mixes the seed and derives
// substreams, so every consumer gets an independent stream from one master seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    std::uint64_t randint(std::uint64_t n) { return next_u64() % n; }

    // Box-Muller; one value per call keeps the stream layout simple and reproducible.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = u01();
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Independent substream keyed by `key`; order of split() calls does not matter.
    Rng split(std::uint64_t key) const { return Rng(mix(state_ ^ mix(key + 0x632be59bd9b4e019ULL))); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace flowmix
