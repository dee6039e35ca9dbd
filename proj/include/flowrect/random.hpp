#ifndef FLOWRECT_RANDOM_HPP
#define FLOWRECT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "flowrect/tensor.hpp"

namespace flowrect {

// Deterministic generation contract
// ---------------------------------
// Every random draw comes from std::mt19937_64 (bit-exact per the C++
// standard), seeded through splitmix64 of (user seed XOR FNV-1a of a purpose
// string). Each (module, purpose) pair owns its own stream, so adding a new
// consumer never perturbs an existing one. Distributions are implemented
// explicitly below instead of via std::*_distribution, whose output is
// implementation-defined.

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char ch : s) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed of the stream identified by (seed, purpose).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view purpose) {
    return splitmix64(seed ^ fnv1a64(purpose));
}

// Stateful wrapper with explicitly specified uniform/normal conversions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    Rng(std::uint64_t seed, std::string_view purpose) : gen_(stream_seed(seed, purpose)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0,1): top 53 bits scaled by 2^-53.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]: never returns 0, safe under log().
    double uniform01_open_low() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Unbiased integer in [0, n) by rejection sampling.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi_inclusive) {
        return lo + static_cast<std::int64_t>(uniform_int(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    // Standard normal via the Box-Muller transform; draws pairs of uniforms.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// i.i.d. N(0,1) tensor; same (shape, seed) always yields identical bits.
template <typename Scalar = float>
Tensor4<Scalar> gaussian_tensor(Shape4 shape, std::uint64_t seed) {
    shape.validate();
    Tensor4<Scalar> out(shape);
    Rng rng(seed);
    for (std::int64_t i = 0; i < out.size(); ++i)
        out.data()[i] = static_cast<Scalar>(rng.normal());
    return out;
}

inline NoiseTensor gaussian_noise(Shape4 shape, std::uint64_t seed) {
    return NoiseTensor{gaussian_tensor<float>(shape, seed), seed};
}

}  // namespace flowrect

#endif
