#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace stcsense {

// SplitMix64 finalizer; used to derive independent substream seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for substream `index` of `master`. Distinct indices give decorrelated engines.
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    static Rng substream(std::uint64_t master, std::uint64_t index) {
        return Rng(substream_seed(master, index));
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
    double normal() { return normal_(eng_); }
    bool bit() { return (eng_() >> 63) != 0; }
    // Circular complex Gaussian with E|z|^2 = power.
    std::complex<double> cnormal(double power);

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace stcsense
