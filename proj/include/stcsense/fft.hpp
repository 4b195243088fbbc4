#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace stcsense::fft {

using cd = std::complex<double>;

// Forward real-to-complex transform of x zero-padded (or truncated) to n points; returns n/2+1
// bins, unnormalized: X[k] = sum_t x[t] e^{-j 2 pi k t / n}.
std::vector<cd> rfft(const std::vector<double>& x, std::size_t n = 0);

// Inverse of rfft for an n-point real signal, including the 1/n factor.
std::vector<double> irfft(const std::vector<cd>& X, std::size_t n);

// Unnormalized forward complex DFT.
std::vector<cd> fft(const std::vector<cd>& x);

std::size_t next_pow2(std::size_t n);

}  // namespace stcsense::fft
