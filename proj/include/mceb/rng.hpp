#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace mceb::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Splittable seed derivation: each (master, a, b, c) tuple maps to an
// independent stream, so trial results do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

// Seeded stream of uniforms and circularly symmetric complex Gaussians.
// Box-Muller is done by hand so the byte stream depends only on the seed,
// not on the standard library's distribution internals.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    // uniform in (0, 1]
    double uniform_pos() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1p-53;
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1p-53;
    }

    // CN(0, power): E|z|^2 = power, phase-invariant.
    std::complex<double> complex_gaussian(double power = 1.0) {
        const double r = std::sqrt(-power * std::log(uniform_pos()));
        const double phi = 2.0 * M_PI * uniform();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    // real N(0, variance)
    double gaussian(double variance = 1.0) {
        const double r = std::sqrt(-2.0 * variance * std::log(uniform_pos()));
        return r * std::cos(2.0 * M_PI * uniform());
    }

private:
    std::mt19937_64 eng_;
};

} // namespace mceb::rng
