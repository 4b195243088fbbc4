#include "stcsense/kernels.hpp"

#if defined(STCSENSE_HAVE_AVX2)

#include <immintrin.h>

namespace stcsense::kernels {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void cdot_avx2(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n,
               double* out_re, double* out_im) {
    __m256d re = _mm256_setzero_pd(), im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a = _mm256_loadu_pd(ar + i), b = _mm256_loadu_pd(ai + i);
        const __m256d c = _mm256_loadu_pd(br + i), d = _mm256_loadu_pd(bi + i);
        re = _mm256_fmadd_pd(a, c, re);
        re = _mm256_fnmadd_pd(b, d, re);
        im = _mm256_fmadd_pd(a, d, im);
        im = _mm256_fmadd_pd(b, c, im);
    }
    double sr = hsum(re), si = hsum(im);
    for (; i < n; ++i) {
        sr += ar[i] * br[i] - ai[i] * bi[i];
        si += ar[i] * bi[i] + ai[i] * br[i];
    }
    *out_re = sr;
    *out_im = si;
}

void fir_avx2(const double* h, std::size_t ntaps, const double* xr, const double* xi, std::size_t n,
              double* yr, double* yi) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d accr = _mm256_setzero_pd(), acci = _mm256_setzero_pd();
        for (std::size_t t = 0; t < ntaps; ++t) {
            const __m256d ht = _mm256_broadcast_sd(h + t);
            accr = _mm256_fmadd_pd(ht, _mm256_loadu_pd(xr + i + t), accr);
            acci = _mm256_fmadd_pd(ht, _mm256_loadu_pd(xi + i + t), acci);
        }
        _mm256_storeu_pd(yr + i, accr);
        _mm256_storeu_pd(yi + i, acci);
    }
    for (; i < n; ++i) {
        double ar = 0.0, ai = 0.0;
        for (std::size_t t = 0; t < ntaps; ++t) {
            ar += h[t] * xr[i + t];
            ai += h[t] * xi[i + t];
        }
        yr[i] = ar;
        yi[i] = ai;
    }
}

double quadform_avx2(const double* Q, const double* x, std::size_t n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = Q + r * n;
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(x + j), acc);
        double s = hsum(acc);
        for (; j < n; ++j) s += row[j] * x[j];
        total += x[r] * s;
    }
    return total;
}

void vmd_update_avx2(const VmdUpdateArgs& a, VmdUpdateResult& r) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d two_alpha = _mm256_set1_pd(2.0 * a.alpha);
    const __m256d nuc = _mm256_set1_pd(a.nu_c);
    __m256d m0 = _mm256_setzero_pd(), m1 = _mm256_setzero_pd();
    __m256d df = _mm256_setzero_pd(), nm = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= a.n; j += 4) {
        const __m256d m = _mm256_loadu_pd(a.mask + j);
        const __m256d our = _mm256_loadu_pd(a.ur + j), oui = _mm256_loadu_pd(a.ui + j);
        const __m256d rr = _mm256_fnmadd_pd(m, our, _mm256_loadu_pd(a.tr + j));
        const __m256d ri = _mm256_fnmadd_pd(m, oui, _mm256_loadu_pd(a.ti + j));
        const __m256d nu = _mm256_loadu_pd(a.nu + j);
        const __m256d d = _mm256_sub_pd(nu, nuc);
        const __m256d den = _mm256_fmadd_pd(_mm256_mul_pd(two_alpha, d), d, one);
        const __m256d numr = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(a.sr + j), rr), _mm256_loadu_pd(a.lr + j));
        const __m256d numi = _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(a.si + j), ri), _mm256_loadu_pd(a.li + j));
        const __m256d nur = _mm256_div_pd(numr, den);
        const __m256d nui = _mm256_div_pd(numi, den);
        const __m256d cr = _mm256_mul_pd(m, nur), ci = _mm256_mul_pd(m, nui);
        _mm256_storeu_pd(a.tr + j, _mm256_add_pd(rr, cr));
        _mm256_storeu_pd(a.ti + j, _mm256_add_pd(ri, ci));
        _mm256_storeu_pd(a.ur + j, nur);
        _mm256_storeu_pd(a.ui + j, nui);
        const __m256d p = _mm256_fmadd_pd(cr, cr, _mm256_mul_pd(ci, ci));
        m0 = _mm256_add_pd(m0, p);
        m1 = _mm256_fmadd_pd(nu, p, m1);
        const __m256d dr = _mm256_sub_pd(nur, our), di = _mm256_sub_pd(nui, oui);
        df = _mm256_fmadd_pd(dr, dr, _mm256_fmadd_pd(di, di, df));
        nm = _mm256_fmadd_pd(our, our, _mm256_fmadd_pd(oui, oui, nm));
    }
    double s0 = hsum(m0), s1 = hsum(m1), sd = hsum(df), sn = hsum(nm);
    for (; j < a.n; ++j) {
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
        s0 += p;
        s1 += a.nu[j] * p;
        const double dr = nur - our, di = nui - oui;
        sd += dr * dr + di * di;
        sn += our * our + oui * oui;
    }
    r.m0 = s0;
    r.m1 = s1;
    r.diff = sd;
    r.norm = sn;
}

}  // namespace

const KernelTable* avx2_table_impl() {
    static const KernelTable t{"avx2", cdot_avx2, fir_avx2, quadform_avx2, vmd_update_avx2};
    return &t;
}

}  // namespace stcsense::kernels

#else

namespace stcsense::kernels {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace stcsense::kernels

#endif
