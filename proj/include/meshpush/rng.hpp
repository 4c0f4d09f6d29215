// rng.hpp — seeded random values built directly on mt19937_64 output so that
// streams are identical across standard libraries (the distribution adapters
// in <random> are implementation-defined).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "meshpush/core.hpp"

namespace meshpush {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Derives independent stream seeds from a user seed and a salt.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one fresh draw per call keeps the stream position simple.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1], log-safe
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Vec3 normal_vec3() {
        double x = normal(), y = normal(), z = normal();
        return {x, y, z};
    }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(gen_() % static_cast<uint64_t>(n));
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace meshpush
