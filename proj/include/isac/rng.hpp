// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <string_view>

namespace isac {

// Counter-based random streams. Every consumer of randomness (channel noise,
// jamming samples, hopping keys, Monte-Carlo draws) opens its own labeled
// stream from the run seed, so experiments stay reproducible when one
// consumer changes how much it draws. Output is platform-independent: no
// std:: distributions, just SplitMix64 and explicit Box-Muller.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::string_view label)
        : state_(splitmix64(seed ^ splitmix64(hash_label(label)))) {}

    std::uint64_t next_u64() {
        counter_ += 1;
        return splitmix64(state_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform in (0, 1]; never returns 0 so log() is safe.
    double uniform() {
        const std::uint64_t u = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(u) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Circularly-symmetric complex Gaussian, unit variance (0.5 per component).
    std::complex<double> cnormal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

    // Unit-modulus phase sample e^{j*phi}, phi ~ U[0, 2pi).
    std::complex<double> cphase() {
        const double phi = 2.0 * M_PI * uniform();
        return {std::cos(phi), std::sin(phi)};
    }

    // Unit-power QPSK symbol.
    std::complex<double> qpsk() {
        static const double s = M_SQRT1_2;
        switch (next_u64() & 3u) {
            case 0: return {s, s};
            case 1: return {s, -s};
            case 2: return {-s, s};
            default: return {-s, -s};
        }
    }

  private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

}  // namespace isac
