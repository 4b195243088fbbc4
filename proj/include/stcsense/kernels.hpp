#pragma once

#include <cstddef>

// Data-parallel inner loops. Every kernel has a scalar reference and, on x86-64, an AVX2+FMA
// variant; active() picks one at first use from cpuid. STCSENSE_FORCE_SCALAR=1 pins scalar.
namespace stcsense::kernels {

struct VmdUpdateArgs {
    std::size_t n = 0;
    const double* nu = nullptr;    // normalized frequency per bin
    const double* mask = nullptr;  // this mode's spectral mask
    const double* sr = nullptr;    // input spectrum
    const double* si = nullptr;
    const double* lr = nullptr;    // lambda / 2
    const double* li = nullptr;
    double* tr = nullptr;          // running sum of masked modes, updated in place
    double* ti = nullptr;
    double* ur = nullptr;          // this mode, updated in place
    double* ui = nullptr;
    double alpha = 0.0;
    double nu_c = 0.0;             // center frequency, normalized
};

struct VmdUpdateResult {
    double m0 = 0.0;    // sum |mask*u|^2
    double m1 = 0.0;    // sum nu |mask*u|^2
    double diff = 0.0;  // sum |u_new - u_old|^2
    double norm = 0.0;  // sum |u_old|^2
};

struct KernelTable {
    const char* name;
    // (out_re, out_im) = sum_i (ar_i + j ai_i)(br_i + j bi_i)
    void (*cdot)(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n,
                 double* out_re, double* out_im);
    // y_i = sum_t h_t x_{i+t} for i in [0, n); x must hold n + ntaps - 1 samples.
    void (*fir)(const double* h, std::size_t ntaps, const double* xr, const double* xi, std::size_t n,
                double* yr, double* yi);
    // x^T Q x for row-major n x n Q.
    double (*quadform)(const double* Q, const double* x, std::size_t n);
    // One Gauss-Seidel VMD mode update over all bins:
    //   rest = t - mask*u; u = (s - rest + lambda/2) / (1 + 2 alpha (nu - nu_c)^2); t = rest + mask*u
    void (*vmd_update)(const VmdUpdateArgs& a, VmdUpdateResult& r);
};

const KernelTable& scalar_table();
// nullptr when the CPU or the build lacks AVX2/FMA.
const KernelTable* avx2_table();
const KernelTable& active();

}  // namespace stcsense::kernels
