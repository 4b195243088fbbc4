#include "stcsense/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace stcsense::fft {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}

template <class T>
struct FftwBuf {
    T* p;
    explicit FftwBuf(std::size_t n) : p(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))) {
        if (!p) throw std::bad_alloc();
    }
    ~FftwBuf() { fftw_free(p); }
    FftwBuf(const FftwBuf&) = delete;
    FftwBuf& operator=(const FftwBuf&) = delete;
};

struct Plan {
    fftw_plan p = nullptr;
    ~Plan() {
        if (p) {
            std::lock_guard<std::mutex> lk(planner_mutex());
            fftw_destroy_plan(p);
        }
    }
};

}  // namespace

std::vector<cd> rfft(const std::vector<double>& x, std::size_t n) {
    if (n == 0) n = x.size();
    if (n == 0) return {};
    FftwBuf<double> in(n);
    FftwBuf<fftw_complex> out(n / 2 + 1);
    Plan plan;
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan.p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.p, out.p, FFTW_ESTIMATE);
    }
    const std::size_t m = std::min(n, x.size());
    std::memcpy(in.p, x.data(), m * sizeof(double));
    std::fill(in.p + m, in.p + n, 0.0);
    fftw_execute(plan.p);
    std::vector<cd> X(n / 2 + 1);
    for (std::size_t k = 0; k < X.size(); ++k) X[k] = {out.p[k][0], out.p[k][1]};
    return X;
}

std::vector<double> irfft(const std::vector<cd>& X, std::size_t n) {
    if (n == 0) return {};
    if (X.size() != n / 2 + 1) throw std::invalid_argument("irfft: spectrum length must be n/2+1");
    FftwBuf<fftw_complex> in(n / 2 + 1);
    FftwBuf<double> out(n);
    Plan plan;
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan.p = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.p, out.p, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < X.size(); ++k) {
        in.p[k][0] = X[k].real();
        in.p[k][1] = X[k].imag();
    }
    fftw_execute(plan.p);
    std::vector<double> x(n);
    const double s = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = out.p[t] * s;
    return x;
}

std::vector<cd> fft(const std::vector<cd>& x) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    FftwBuf<fftw_complex> in(n);
    FftwBuf<fftw_complex> out(n);
    Plan plan;
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        plan.p = fftw_plan_dft_1d(static_cast<int>(n), in.p, out.p, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (std::size_t t = 0; t < n; ++t) {
        in.p[t][0] = x[t].real();
        in.p[t][1] = x[t].imag();
    }
    fftw_execute(plan.p);
    std::vector<cd> X(n);
    for (std::size_t k = 0; k < n; ++k) X[k] = {out.p[k][0], out.p[k][1]};
    return X;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace stcsense::fft
