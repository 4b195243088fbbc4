#include "stcsense/kernels.hpp"

namespace stcsense::kernels {

namespace {

void cdot_scalar(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n,
                 double* out_re, double* out_im) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        re += ar[i] * br[i] - ai[i] * bi[i];
        im += ar[i] * bi[i] + ai[i] * br[i];
    }
    *out_re = re;
    *out_im = im;
}

void fir_scalar(const double* h, std::size_t ntaps, const double* xr, const double* xi, std::size_t n,
                double* yr, double* yi) {
    for (std::size_t i = 0; i < n; ++i) {
        double ar = 0.0, ai = 0.0;
        for (std::size_t t = 0; t < ntaps; ++t) {
            ar += h[t] * xr[i + t];
            ai += h[t] * xi[i + t];
        }
        yr[i] = ar;
        yi[i] = ai;
    }
}

double quadform_scalar(const double* Q, const double* x, std::size_t n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = Q + i * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        total += x[i] * acc;
    }
    return total;
}

void vmd_update_scalar(const VmdUpdateArgs& a, VmdUpdateResult& r) {
    double m0 = 0.0, m1 = 0.0, diff = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < a.n; ++j) {
        const double m = a.mask[j];
        const double our = a.ur[j], oui = a.ui[j];
        const double rr = a.tr[j] - m * our;
        const double ri = a.ti[j] - m * oui;
        const double d = a.nu[j] - a.nu_c;
        const double den = 1.0 + 2.0 * a.alpha * d * d;
        const double nur = (a.sr[j] - rr + a.lr[j]) / den;
        const double nui = (a.si[j] - ri + a.li[j]) / den;
        const double cr = m * nur, ci = m * nui;
        a.tr[j] = rr + cr;
        a.ti[j] = ri + ci;
        a.ur[j] = nur;
        a.ui[j] = nui;
        const double p = cr * cr + ci * ci;
        m0 += p;
        m1 += a.nu[j] * p;
        const double dr = nur - our, di = nui - oui;
        diff += dr * dr + di * di;
        norm += our * our + oui * oui;
    }
    r.m0 = m0;
    r.m1 = m1;
    r.diff = diff;
    r.norm = norm;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{"scalar", cdot_scalar, fir_scalar, quadform_scalar, vmd_update_scalar};
    return t;
}

}  // namespace stcsense::kernels
