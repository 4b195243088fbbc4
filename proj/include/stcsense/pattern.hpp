#pragma once

#include <string>
#include <vector>

#include "stcsense/coding.hpp"
#include "stcsense/geometry.hpp"

namespace stcsense {

// Near-field weight of element (m, n) at point p:
//   w = (z/lambda) (1/(k r) - j) (1/r^2) e^{j k r}
// z is the point's distance from the RIS plane. DomainError when r = 0.
cd greens_weight(const RisGeometry& g, int m, int n, const Vec3& p);
cd greens_weight(double lambda, double k, const Vec3& element, const Vec3& p);

// Fourier coefficient of the unit pulse occupying slot l (1-based) of an L-slot period, under
// x(t) = sum_k c_k e^{+j 2 pi k f0 t}:
//   c_{k,l} = (1/L) e^{-j pi k (2l - 1) / L} Sa(pi k / L)
cd harmonic_coefficient(int k, int l, int L);

inline double sinc_a(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// sum_l Gamma^l_{m,n} c_{k,l} for k in [kmin, kmax].
std::vector<cd> element_spectrum(const StcCoding& c, int m, int n, int kmin, int kmax);

// Numeric oracle: direct-sum DFT of the waveform sampled at s*T0/P, corrected by the exact
// per-sample hold factor e^{-j pi k/P} Sa(pi k/P). P must be a multiple of L and >= 8 max|k|.
std::vector<cd> element_spectrum_dft(const StcCoding& c, int m, int n, int samples_per_period, int kmin, int kmax);

// Per-element spectra for a coding, laid out SoA per harmonic: re[(k-kmin)*E + e].
struct ElementSpectra {
    int kmin = 0, kmax = 0;
    std::size_t E = 0;
    std::vector<double> re, im;

    const double* re_of(int k) const { return re.data() + static_cast<std::size_t>(k - kmin) * E; }
    const double* im_of(int k) const { return im.data() + static_cast<std::size_t>(k - kmin) * E; }
    cd at(int k, std::size_t e) const {
        const std::size_t i = static_cast<std::size_t>(k - kmin) * E + e;
        return {re[i], im[i]};
    }
};

ElementSpectra compute_element_spectra(const StcCoding& c, int kmin, int kmax);

// Illuminated Green's weights A e^{j phi} w for every element at p (SoA).
void illuminated_weights(const RisGeometry& g, const Vec3& p, double* wr, double* wi);

// G_k(p) for k in [spectra.kmin, spectra.kmax].
std::vector<cd> field_at(const RisGeometry& g, const ElementSpectra& s, const Vec3& p);

struct HarmonicPattern {
    int kmin = 0, kmax = 0;
    FieldGrid grid;
    double fc = 0.0, f0 = 0.0;
    std::vector<std::vector<cd>> data;  // data[k - kmin][point]

    const std::vector<cd>& at(int k) const { return data.at(static_cast<std::size_t>(k - kmin)); }
    double frequency(int k) const { return fc + k * f0; }
    std::size_t argmax(int k) const;
};

enum class SumOrder { ElementsThenSlots, SlotsThenElements };

HarmonicPattern near_field_pattern(const StcCoding& c, const RisGeometry& g, const FieldGrid& grid, int kmin,
                                   int kmax, SumOrder order = SumOrder::ElementsThenSlots);

// "pattern_k+3.csv", "pattern_k-1.csv", "pattern_k+0.csv".
std::string pattern_filename(int k);
// One CSV per harmonic: x_m,y_m,z_m,re,im,magnitude_db (20 log10 |G|, -400 for exact zero).
void write_pattern_csv(const std::string& dir, const HarmonicPattern& p);

}  // namespace stcsense
