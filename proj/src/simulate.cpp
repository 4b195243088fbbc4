#include <algorithm>
#include <cmath>

#include "stcsense/error.hpp"
#include "stcsense/parallel.hpp"
#include "stcsense/pattern.hpp"
#include "stcsense/rng.hpp"
#include "stcsense/scene.hpp"

namespace stcsense {

void SimConfig::validate(double f0) const {
    require(fs > 0.0, "fs", "must be > 0");
    require(duration > 0.0, "duration", "must be > 0");
    require(kmax >= 0, "kmax", "must be >= 0");
    require(fs > 2.0 * (kmax * f0 + 10.0), "fs", "must exceed 2 (kmax f0 + 10 Hz)");
    require(passerby_rate > 0.0, "passerby_rate", "must be > 0");
}

cd rx_factor(const RisGeometry& g, const Vec3& p, const Vec3& rx) {
    const double r = distance(p, rx);
    if (!(r > 0.0)) throw_domain("scatterer coincides with the receiver");
    return std::polar(1.0 / r, g.wavenumber() * r);
}

double reference_path_amplitude(const RisGeometry& g) {
    const StcCoding c = constant_coding(g.M, g.N, g.L);
    const ElementSpectra s = compute_element_spectra(c, 0, 0);
    return std::abs(field_at(g, s, {0.0, 0.0, 1.0})[0]);
}

std::vector<cd> static_leakage(const Scene& s, const StcCoding& c, const RisGeometry& g, int kmax) {
    const ElementSpectra spec = compute_element_spectra(c, -kmax, kmax);
    const double level = std::pow(10.0, s.leakage_db / 20.0) * reference_path_amplitude(g);
    const double k = g.wavenumber();
    std::vector<cd> coupling(g.elements());
    double norm = 0.0;
    for (int m = 0; m < g.M; ++m)
        for (int n = 0; n < g.N; ++n) {
            const std::size_t e = static_cast<std::size_t>(m) * g.N + n;
            const double r = distance(g.element(m, n), s.rx);
            if (!(r > 0.0)) throw_domain("receiver coincides with an RIS element");
            coupling[e] = g.illumination(e) * std::polar(1.0 / r, k * r);
            norm += g.amp[e] / r;
        }
    std::vector<cd> out(static_cast<std::size_t>(2 * kmax + 1));
    for (int kk = -kmax; kk <= kmax; ++kk) {
        cd acc = 0.0;
        for (std::size_t e = 0; e < coupling.size(); ++e) acc += coupling[e] * spec.at(kk, e);
        out[static_cast<std::size_t>(kk + kmax)] = norm > 0.0 ? level * acc / norm : cd(0.0);
    }
    return out;
}

cd path_amplitude(const RisGeometry& g, const StcCoding& c, const Vec3& p, cd refl, const Vec3& rx, int k) {
    const ElementSpectra s = compute_element_spectra(c, k, k);
    return field_at(g, s, p)[0] * refl * rx_factor(g, p, rx);
}

double noise_db_for_snr(double echo_power, double snr_db, double fs, double halfbw) {
    if (!(echo_power > 0.0)) throw_config("snr_db", "reference echo power is zero");
    const double band_fraction = 2.0 * halfbw / fs;
    const double noise = echo_power / (std::pow(10.0, snr_db / 10.0) * band_fraction);
    return 10.0 * std::log10(noise);
}

namespace {

// e^{j 2 pi k f0 t_s} for sample s: periodic table when fs/f0 is an integer.
struct Carriers {
    int kmax = 0;
    std::size_t period = 0;          // 0 when not periodic
    std::vector<cd> table;           // [phase index][k + kmax]
    double fs = 0.0, f0 = 0.0, t0 = 0.0;

    Carriers(int kmax_, double fs_, double f0_, double t0_) : kmax(kmax_), fs(fs_), f0(f0_), t0(t0_) {
        const double ratio = fs / f0;
        const double r = std::round(ratio);
        const double frac_start = t0 * f0 - std::floor(t0 * f0);
        if (std::abs(ratio - r) < 1e-9 * ratio && r >= 1.0) {
            period = static_cast<std::size_t>(r);
            table.resize(period * (2 * kmax + 1));
            for (std::size_t s = 0; s < period; ++s)
                for (int k = -kmax; k <= kmax; ++k) {
                    const double ph = 2.0 * kPi * k * (frac_start + static_cast<double>(s) / r);
                    table[s * (2 * kmax + 1) + (k + kmax)] = std::polar(1.0, ph);
                }
        }
    }

    // Waveform sum_k a_k e^{j 2 pi k f0 t} at sample s.
    cd eval(const cd* a, std::size_t s) const {
        cd acc = 0.0;
        if (period) {
            const cd* row = table.data() + (s % period) * (2 * kmax + 1);
            for (int i = 0; i < 2 * kmax + 1; ++i) acc += a[i] * row[i];
        } else {
            const double t = t0 + static_cast<double>(s) / fs;
            for (int k = -kmax; k <= kmax; ++k) acc += a[k + kmax] * std::polar(1.0, 2.0 * kPi * k * f0 * t);
        }
        return acc;
    }
};

std::vector<cd> simulate_one(const Scene& sc, const StcCoding& c, const RisGeometry& g, const FieldGrid& grid,
                             const SimConfig& cfg) {
    const int K = cfg.kmax;
    const int nk = 2 * K + 1;
    const std::size_t ns = static_cast<std::size_t>(std::llround(cfg.fs * cfg.duration));
    const ElementSpectra spec = compute_element_spectra(c, -K, K);
    const double lam = g.lambda();

    for (const auto& p : sc.persons) grid.nearest(p.position);  // DomainError outside the pattern extent

    // Static part: leakage plus every reflector through its harmonic channel.
    std::vector<cd> stat = static_leakage(sc, c, g, K);
    for (const auto& r : sc.reflectors) {
        const auto G = field_at(g, spec, r.position);
        const cd f = r.reflectivity * rx_factor(g, r.position, sc.rx);
        for (int i = 0; i < nk; ++i) stat[static_cast<std::size_t>(i)] += G[static_cast<std::size_t>(i)] * f;
    }
    std::vector<std::vector<cd>> person_amp;
    for (const auto& p : sc.persons) {
        auto G = field_at(g, spec, p.position);
        const cd f = p.reflectivity * rx_factor(g, p.position, sc.rx);
        for (auto& v : G) v *= f;
        person_amp.push_back(std::move(G));
    }

    const Carriers car(K, cfg.fs, g.f0, cfg.t_offset);
    std::vector<cd> x(ns);
    {
        // one static waveform period when the carrier table is periodic
        std::vector<cd> stat_wave(car.period ? car.period : 0);
        for (std::size_t s = 0; s < stat_wave.size(); ++s) stat_wave[s] = car.eval(stat.data(), s);
        std::vector<std::vector<cd>> pwave(sc.persons.size(), std::vector<cd>(stat_wave.size()));
        for (std::size_t q = 0; q < sc.persons.size(); ++q)
            for (std::size_t s = 0; s < stat_wave.size(); ++s) pwave[q][s] = car.eval(person_amp[q].data(), s);

        parallel_for((ns + 4095) / 4096, [&](std::size_t blk) {
            const std::size_t lo = blk * 4096, hi = std::min(ns, lo + 4096);
            for (std::size_t s = lo; s < hi; ++s) {
                const double t = cfg.t_offset + static_cast<double>(s) / cfg.fs;
                cd v = car.period ? stat_wave[s % car.period] : car.eval(stat.data(), s);
                for (std::size_t q = 0; q < sc.persons.size(); ++q) {
                    const cd w = car.period ? pwave[q][s % car.period] : car.eval(person_amp[q].data(), s);
                    v += w * std::polar(1.0, 4.0 * kPi * chest_displacement(sc.persons[q], t) / lam);
                }
                x[s] = v;
            }
        });
    }

    if (sc.passerby.enabled) {
        const double dt = 1.0 / cfg.passerby_rate;
        const std::size_t nq = static_cast<std::size_t>(std::ceil(cfg.duration / dt)) + 2;
        std::vector<cd> amp(nq * static_cast<std::size_t>(nk));
        parallel_for(nq, [&](std::size_t q) {
            const Vec3 pos = sc.passerby.position(cfg.t_offset + static_cast<double>(q) * dt);
            const auto G = field_at(g, spec, pos);
            const cd f = sc.passerby.reflectivity * rx_factor(g, pos, sc.rx);
            for (int i = 0; i < nk; ++i) amp[q * nk + i] = G[static_cast<std::size_t>(i)] * f;
        });
        std::vector<cd> a(static_cast<std::size_t>(nk));
        for (std::size_t s = 0; s < ns; ++s) {
            const double u = static_cast<double>(s) / cfg.fs / dt;
            const std::size_t q = std::min(static_cast<std::size_t>(u), nq - 2);
            const double fr = u - static_cast<double>(q);
            for (int i = 0; i < nk; ++i) a[i] = (1.0 - fr) * amp[q * nk + i] + fr * amp[(q + 1) * nk + i];
            x[s] += car.eval(a.data(), s);
        }
    }

    const double np = sc.noise_power();
    if (np > 0.0) {
        Rng rng = Rng::substream(sc.seed, cfg.stream_index);
        for (auto& v : x) v += rng.cnormal(np);
    }
    return x;
}

}  // namespace

EchoSet simulate_received(const Scene& s, const StcCoding& c, const RisGeometry& g, const FieldGrid& grid,
                          const SimConfig& cfg) {
    s.validate();
    g.validate();
    cfg.validate(g.f0);
    if (c.M != g.M || c.N != g.N || c.L != g.L) throw_domain("simulate_received: coding does not match geometry");
    EchoSet e;
    e.fs = cfg.fs;
    e.duration = cfg.duration;
    e.fc = g.fc;
    e.f0 = g.f0;
    e.t_start = cfg.t_offset;
    e.seed = s.seed;
    e.streams.push_back(simulate_one(s, c, g, grid, cfg));
    e.direction.push_back(-1);
    return e;
}

EchoSet scan_sequence(const Scene& s, const std::vector<StcCoding>& codings, const RisGeometry& g,
                      const FieldGrid& grid, double dwell, double fs, int kmax) {
    if (codings.empty()) throw_config("codings", "scan needs at least one coding");
    s.validate();
    EchoSet e;
    e.fs = fs;
    e.duration = dwell;
    e.fc = g.fc;
    e.f0 = g.f0;
    e.seed = s.seed;
    for (std::size_t d = 0; d < codings.size(); ++d) {
        SimConfig cfg;
        cfg.fs = fs;
        cfg.duration = dwell;
        cfg.kmax = kmax;
        cfg.t_offset = static_cast<double>(d) * dwell;
        cfg.stream_index = d;
        cfg.validate(g.f0);
        e.streams.push_back(simulate_one(s, codings[d], g, grid, cfg));
        e.direction.push_back(static_cast<int>(d));
    }
    return e;
}

}  // namespace stcsense
