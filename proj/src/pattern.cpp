#include "stcsense/pattern.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stcsense/error.hpp"
#include "stcsense/kernels.hpp"
#include "stcsense/parallel.hpp"

namespace stcsense {

cd greens_weight(double lambda, double k, const Vec3& element, const Vec3& p) {
    const double r = distance(element, p);
    if (!(r > 0.0)) throw_domain("greens_weight: point coincides with the element (r = 0)");
    const double z = std::abs(p.z - element.z);
    const cd radial(1.0 / (k * r), -1.0);
    return (z / lambda) * radial * (1.0 / (r * r)) * std::polar(1.0, k * r);
}

cd greens_weight(const RisGeometry& g, int m, int n, const Vec3& p) {
    return greens_weight(g.lambda(), g.wavenumber(), g.element(m, n), p);
}

cd harmonic_coefficient(int k, int l, int L) {
    if (L < 1) throw_domain("harmonic_coefficient: L must be >= 1");
    if (l < 1 || l > L) throw_domain("harmonic_coefficient: slot index out of range");
    const double a = kPi * k / L;
    return (1.0 / L) * sinc_a(a) * std::polar(1.0, -a * (2.0 * l - 1.0));
}

std::vector<cd> element_spectrum(const StcCoding& c, int m, int n, int kmin, int kmax) {
    if (kmax < kmin) throw_domain("element_spectrum: empty harmonic range");
    std::vector<cd> out(static_cast<std::size_t>(kmax - kmin + 1));
    for (int k = kmin; k <= kmax; ++k) {
        cd s = 0.0;
        for (int l = 0; l < c.L; ++l) s += c.gamma(m, n, l) * harmonic_coefficient(k, l + 1, c.L);
        out[static_cast<std::size_t>(k - kmin)] = s;
    }
    return out;
}

std::vector<cd> element_spectrum_dft(const StcCoding& c, int m, int n, int P, int kmin, int kmax) {
    if (P <= 0 || P % c.L != 0) throw_domain("element_spectrum_dft: samples_per_period must be a multiple of L");
    const int kabs = std::max(std::abs(kmin), std::abs(kmax));
    if (P < 8 * kabs) throw_domain("element_spectrum_dft: samples_per_period must be >= 8 max|k|");
    const int per_slot = P / c.L;
    std::vector<double> x(static_cast<std::size_t>(P));
    for (int s = 0; s < P; ++s) x[static_cast<std::size_t>(s)] = c.gamma(m, n, s / per_slot);
    std::vector<cd> out(static_cast<std::size_t>(kmax - kmin + 1));
    for (int k = kmin; k <= kmax; ++k) {
        cd acc = 0.0;
        for (int s = 0; s < P; ++s) {
            // reduce the phase index mod P to keep the argument small
            const long long idx = (static_cast<long long>(k) * s) % P;
            acc += x[static_cast<std::size_t>(s)] * std::polar(1.0, -2.0 * kPi * static_cast<double>(idx) / P);
        }
        const double h = kPi * k / P;
        out[static_cast<std::size_t>(k - kmin)] = acc / static_cast<double>(P) * sinc_a(h) * std::polar(1.0, -h);
    }
    return out;
}

ElementSpectra compute_element_spectra(const StcCoding& c, int kmin, int kmax) {
    ElementSpectra s;
    s.kmin = kmin;
    s.kmax = kmax;
    s.E = static_cast<std::size_t>(c.M) * c.N;
    const std::size_t K = static_cast<std::size_t>(kmax - kmin + 1);
    s.re.assign(K * s.E, 0.0);
    s.im.assign(K * s.E, 0.0);
    std::vector<cd> coef(K * c.L);
    for (int k = kmin; k <= kmax; ++k)
        for (int l = 0; l < c.L; ++l)
            coef[static_cast<std::size_t>(k - kmin) * c.L + l] = harmonic_coefficient(k, l + 1, c.L);
    for (int m = 0; m < c.M; ++m)
        for (int n = 0; n < c.N; ++n) {
            const std::size_t e = static_cast<std::size_t>(m) * c.N + n;
            for (std::size_t ki = 0; ki < K; ++ki) {
                cd acc = 0.0;
                for (int l = 0; l < c.L; ++l) acc += c.gamma(m, n, l) * coef[ki * c.L + l];
                s.re[ki * s.E + e] = acc.real();
                s.im[ki * s.E + e] = acc.imag();
            }
        }
    return s;
}

void illuminated_weights(const RisGeometry& g, const Vec3& p, double* wr, double* wi) {
    const double lam = g.lambda(), k = g.wavenumber();
    for (int m = 0; m < g.M; ++m)
        for (int n = 0; n < g.N; ++n) {
            const std::size_t e = static_cast<std::size_t>(m) * g.N + n;
            const cd w = g.illumination(e) * greens_weight(lam, k, g.element(m, n), p);
            wr[e] = w.real();
            wi[e] = w.imag();
        }
}

std::vector<cd> field_at(const RisGeometry& g, const ElementSpectra& s, const Vec3& p) {
    std::vector<double> wr(s.E), wi(s.E);
    illuminated_weights(g, p, wr.data(), wi.data());
    const auto& kt = kernels::active();
    std::vector<cd> out(static_cast<std::size_t>(s.kmax - s.kmin + 1));
    for (int k = s.kmin; k <= s.kmax; ++k) {
        double re, im;
        kt.cdot(wr.data(), wi.data(), s.re_of(k), s.im_of(k), s.E, &re, &im);
        out[static_cast<std::size_t>(k - s.kmin)] = {re, im};
    }
    return out;
}

std::size_t HarmonicPattern::argmax(int k) const {
    const auto& d = at(k);
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (std::norm(d[i]) > std::norm(d[best])) best = i;
    return best;
}

HarmonicPattern near_field_pattern(const StcCoding& c, const RisGeometry& g, const FieldGrid& grid, int kmin,
                                   int kmax, SumOrder order) {
    if (c.M != g.M || c.N != g.N || c.L != g.L) throw_domain("near_field_pattern: coding does not match geometry");
    if (grid.size() == 0) throw_domain("near_field_pattern: empty grid");
    if (kmax < kmin) throw_domain("near_field_pattern: empty harmonic range");
    HarmonicPattern hp;
    hp.kmin = kmin;
    hp.kmax = kmax;
    hp.grid = grid;
    hp.fc = g.fc;
    hp.f0 = g.f0;
    const std::size_t K = static_cast<std::size_t>(kmax - kmin + 1);
    const std::size_t E = g.elements();
    hp.data.assign(K, std::vector<cd>(grid.size()));

    if (order == SumOrder::ElementsThenSlots) {
        const ElementSpectra s = compute_element_spectra(c, kmin, kmax);
        const auto& kt = kernels::active();
        parallel_for(grid.size(), [&](std::size_t pi) {
            std::vector<double> wr(E), wi(E);
            illuminated_weights(g, grid.point(pi), wr.data(), wi.data());
            for (std::size_t ki = 0; ki < K; ++ki) {
                double re, im;
                kt.cdot(wr.data(), wi.data(), s.re.data() + ki * E, s.im.data() + ki * E, E, &re, &im);
                hp.data[ki][pi] = {re, im};
            }
        });
    } else {
        std::vector<cd> coef(K * c.L);
        for (std::size_t ki = 0; ki < K; ++ki)
            for (int l = 0; l < c.L; ++l) coef[ki * c.L + l] = harmonic_coefficient(kmin + static_cast<int>(ki), l + 1, c.L);
        parallel_for(grid.size(), [&](std::size_t pi) {
            std::vector<double> wr(E), wi(E);
            illuminated_weights(g, grid.point(pi), wr.data(), wi.data());
            std::vector<cd> slot(c.L);
            for (int l = 0; l < c.L; ++l) {
                cd acc = 0.0;
                for (int m = 0; m < c.M; ++m)
                    for (int n = 0; n < c.N; ++n) {
                        const std::size_t e = static_cast<std::size_t>(m) * c.N + n;
                        acc += c.gamma(m, n, l) * cd(wr[e], wi[e]);
                    }
                slot[l] = acc;
            }
            for (std::size_t ki = 0; ki < K; ++ki) {
                cd acc = 0.0;
                for (int l = 0; l < c.L; ++l) acc += coef[ki * c.L + l] * slot[l];
                hp.data[ki][pi] = acc;
            }
        });
    }
    return hp;
}

std::string pattern_filename(int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "pattern_k%+d.csv", k);
    return buf;
}

void write_pattern_csv(const std::string& dir, const HarmonicPattern& p) {
    std::filesystem::create_directories(dir);
    for (int k = p.kmin; k <= p.kmax; ++k) {
        const std::string path = (std::filesystem::path(dir) / pattern_filename(k)).string();
        std::ofstream f(path);
        if (!f) throw_config("output", "cannot write " + path);
        f << "x_m,y_m,z_m,re,im,magnitude_db\n";
        f.precision(12);
        const auto& d = p.at(k);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const Vec3 q = p.grid.point(i);
            const double mag = std::abs(d[i]);
            f << q.x << ',' << q.y << ',' << q.z << ',' << d[i].real() << ',' << d[i].imag() << ','
              << (mag > 0.0 ? 20.0 * std::log10(mag) : -400.0) << '\n';
        }
    }
}

}  // namespace stcsense
