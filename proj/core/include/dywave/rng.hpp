#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dywave/tensor.hpp"

namespace dywave {

// Deterministic RNG. mt19937_64 has a standardized output sequence, but the
// std distributions do not, so uniform/normal are generated by hand to keep
// streams identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1) from the top 53 bits
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with a cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is negligible for the ranges used here
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    Tensor normal_tensor(std::vector<std::size_t> shape, double mean = 0.0, double std = 1.0) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = normal(mean, std);
        return t;
    }

    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] = uniform(lo, hi);
        return t;
    }

    // derive an independent stream, e.g. per sample
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dywave
