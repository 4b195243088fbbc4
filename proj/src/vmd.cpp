#include "stcsense/vmd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcsense/error.hpp"
#include "stcsense/fft.hpp"
#include "stcsense/kernels.hpp"

namespace stcsense {

const char* to_string(AlphaSign s) { return s == AlphaSign::Printed ? "printed" : "inverse"; }
const char* to_string(Complement c) { return c == Complement::Consistent ? "consistent" : "literal"; }
const char* to_string(InitStrategy s) { return s == InitStrategy::Grouped ? "grouped" : "uniform"; }

AlphaSign parse_alpha_sign(const std::string& s) {
    if (s == "printed") return AlphaSign::Printed;
    if (s == "inverse") return AlphaSign::Inverse;
    throw_config("alpha_sign", "expected printed or inverse, got '" + s + "'");
}

Complement parse_complement(const std::string& s) {
    if (s == "consistent") return Complement::Consistent;
    if (s == "literal") return Complement::Literal;
    throw_config("complement", "expected consistent or literal, got '" + s + "'");
}

InitStrategy parse_init_strategy(const std::string& s) {
    if (s == "grouped") return InitStrategy::Grouped;
    if (s == "uniform") return InitStrategy::Uniform;
    throw_config("init", "expected grouped or uniform, got '" + s + "'");
}

void VmdConfig::validate() const {
    require(I_total >= 2, "I_total", "must be at least 2");
    require(M_resp >= 1 && M_resp < I_total, "M_resp", "must satisfy 1 <= M_resp < I_total");
    require(alpha_int > 0.0 && std::isfinite(alpha_int), "alpha_int", "must be positive");
    require(zeta >= 0.0 && std::isfinite(zeta), "zeta", "must be non-negative");
    require(w_r_resp >= 0.0 && w_r_heart >= 0.0, "w_r", "reference frequencies must be non-negative");
    require(lowpass_hz > 0.0, "lowpass_hz", "must be positive");
    require(band_lo > 0.0 && band_lo < band_hi, "band_lo", "band must satisfy 0 < lo < hi");
    require(lowpass_hz <= band_lo, "lowpass_hz", "must not exceed band_lo");
    require(epsilon >= 0.0, "epsilon", "must be non-negative");
    require(tol_abs > 0.0 && tol_rel > 0.0, "tol_abs", "tolerances must be positive");
    require(iter_max >= 1, "iter_max", "must be at least 1");
    require(mask_rolloff_hz >= 0.0, "mask_rolloff_hz", "must be non-negative");
}

namespace {

// 1 below edge - r/2, 0 above edge + r/2, raised cosine between.
double lowpass_response(double f, double edge, double r) {
    if (r <= 0.0) return f <= edge ? 1.0 : 0.0;
    if (f <= edge - 0.5 * r) return 1.0;
    if (f >= edge + 0.5 * r) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * (f - (edge - 0.5 * r)) / r));
}

double highpass_response(double f, double edge, double r) {
    if (r <= 0.0) return f >= edge ? 1.0 : 0.0;
    return 1.0 - lowpass_response(f, edge, r);
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = 0.5 * (lo + hi);
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

void check_input(const std::vector<double>& s, double fs) {
    if (s.size() < 64) throw_domain("vmd: series length must be at least 64");
    if (!(fs > 0.0) || !std::isfinite(fs)) throw_domain("vmd: sample rate must be positive");
    for (double v : s)
        if (!std::isfinite(v)) throw_domain("vmd: non-finite input sample");
}

struct Grid {
    std::size_t T = 0, head = 0, n_ext = 0, bins = 0;
    std::vector<double> nu, freq_hz, sr, si;
};

Grid analysis_grid(const std::vector<double>& s, double fs) {
    Grid g;
    g.T = s.size();
    g.head = g.T / 2;
    const std::size_t tail = g.T - g.head;
    std::vector<double> ext;
    ext.reserve(2 * g.T);
    for (std::size_t i = 0; i < g.head; ++i) ext.push_back(s[g.head - 1 - i]);
    ext.insert(ext.end(), s.begin(), s.end());
    for (std::size_t i = 0; i < tail; ++i) ext.push_back(s[g.T - 1 - i]);
    g.n_ext = ext.size();
    const auto X = fft::rfft(ext);
    g.bins = X.size();
    g.nu.resize(g.bins);
    g.freq_hz.resize(g.bins);
    g.sr.resize(g.bins);
    g.si.resize(g.bins);
    const double inv = 1.0 / static_cast<double>(g.n_ext);
    for (std::size_t j = 0; j < g.bins; ++j) {
        g.nu[j] = static_cast<double>(j) * inv;
        g.freq_hz[j] = g.nu[j] * fs;
        g.sr[j] = X[j].real() * inv;
        g.si[j] = X[j].imag() * inv;
    }
    return g;
}

std::vector<double> to_time(const Grid& g, const std::vector<cd>& spec) {
    const auto x = fft::irfft(spec, g.n_ext);
    std::vector<double> out(g.T);
    const double scale = static_cast<double>(g.n_ext);
    for (std::size_t t = 0; t < g.T; ++t) out[t] = x[g.head + t] * scale;
    return out;
}

struct Engine {
    int I = 0;
    std::vector<const std::vector<double>*> mask;  // per mode
    std::vector<double> w;                          // Hz
    std::vector<double> alpha;
    double epsilon = 0.0, tol_abs = 0.0, tol_rel = 0.0;
    int iter_max = 1;
    Complement complement = Complement::Consistent;
};

struct EngineState {
    std::vector<std::vector<double>> ur, ui;
    int iterations = 0;
    bool converged = false;
    double crit_abs = 0.0, crit_rel = 0.0;
};

template <class AlphaFn>
EngineState run_admm(const Grid& g, double fs, Engine& e, AlphaFn alpha_of,
                     std::vector<std::vector<double>>* w_trace) {
    const std::size_t n = g.bins;
    const auto& K = kernels::active();
    EngineState st;
    st.ur.assign(e.I, std::vector<double>(n, 0.0));
    st.ui.assign(e.I, std::vector<double>(n, 0.0));
    std::vector<double> tr(n, 0.0), ti(n, 0.0);  // sum of masked modes
    std::vector<double> lr(n, 0.0), li(n, 0.0);  // lambda / 2
    std::vector<double> rawr, rawi, cr, ci;
    const bool literal = e.complement == Complement::Literal;
    if (literal) {
        rawr.assign(n, 0.0);
        rawi.assign(n, 0.0);
        cr.resize(n);
        ci.resize(n);
    }
    e.alpha.assign(e.I, 0.0);
    if (w_trace) w_trace->clear();

    for (int it = 1; it <= e.iter_max; ++it) {
        double sum_diff = 0.0, sum_rel = 0.0;
        for (int i = 0; i < e.I; ++i) {
            const double a = alpha_of(i, e.w[i]);
            e.alpha[i] = a;
            const double* m = e.mask[i]->data();
            kernels::VmdUpdateResult r;
            if (!literal) {
                kernels::VmdUpdateArgs args;
                args.n = n;
                args.nu = g.nu.data();
                args.mask = m;
                args.sr = g.sr.data();
                args.si = g.si.data();
                args.lr = lr.data();
                args.li = li.data();
                args.tr = tr.data();
                args.ti = ti.data();
                args.ur = st.ur[i].data();
                args.ui = st.ui[i].data();
                args.alpha = a;
                args.nu_c = e.w[i] / fs;
                K.vmd_update(args, r);
            } else {
                // complement = f_i * sum_{k != i} u_k
                auto& ur = st.ur[i];
                auto& ui = st.ui[i];
                const double nu_c = e.w[i] / fs;
                for (std::size_t j = 0; j < n; ++j) {
                    const double our = ur[j], oui = ui[j];
                    const double rr = rawr[j] - our, ri = rawi[j] - oui;
                    const double d = g.nu[j] - nu_c;
                    const double den = 1.0 + 2.0 * a * d * d;
                    const double nur = (g.sr[j] - m[j] * rr + lr[j]) / den;
                    const double nui = (g.si[j] - m[j] * ri + li[j]) / den;
                    tr[j] += m[j] * (nur - our);
                    ti[j] += m[j] * (nui - oui);
                    rawr[j] = rr + nur;
                    rawi[j] = ri + nui;
                    ur[j] = nur;
                    ui[j] = nui;
                    const double p = m[j] * m[j] * (nur * nur + nui * nui);
                    r.m0 += p;
                    r.m1 += g.nu[j] * p;
                    const double dr = nur - our, di = nui - oui;
                    r.diff += dr * dr + di * di;
                    r.norm += our * our + oui * oui;
                }
            }
            if (r.m0 > 0.0) e.w[i] = std::clamp(r.m1 / r.m0 * fs, 0.0, 0.5 * fs);
            sum_diff += r.diff;
            if (r.norm > 0.0)
                sum_rel += r.diff / r.norm;
            else if (r.diff > 0.0)
                sum_rel = std::numeric_limits<double>::infinity();
        }
        if (e.epsilon > 0.0) {
            const double h = 0.5 * e.epsilon;
            for (std::size_t j = 0; j < n; ++j) {
                lr[j] += h * (g.sr[j] - tr[j]);
                li[j] += h * (g.si[j] - ti[j]);
            }
        }
        if (w_trace) w_trace->push_back(e.w);
        st.iterations = it;
        st.crit_abs = sum_diff;
        st.crit_rel = sum_rel;
        if (sum_diff < e.tol_abs && sum_rel < e.tol_rel) {
            st.converged = true;
            break;
        }
    }
    return st;
}

ImfSet collect(const Grid& g, double fs, const std::vector<double>& s, const Engine& e, const EngineState& st,
               std::vector<std::vector<cd>>* contributions) {
    ImfSet out;
    out.fs = fs;
    out.w = e.w;
    out.alpha = e.alpha;
    out.iterations = st.iterations;
    out.converged = st.converged;
    out.crit_abs = st.crit_abs;
    out.crit_rel = st.crit_rel;
    out.residual = s;
    for (int i = 0; i < e.I; ++i) {
        const auto& m = *e.mask[i];
        std::vector<cd> c(g.bins);
        for (std::size_t j = 0; j < g.bins; ++j) c[j] = cd(m[j] * st.ur[i][j], m[j] * st.ui[i][j]);
        auto mode = to_time(g, c);
        for (std::size_t t = 0; t < g.T; ++t) out.residual[t] -= mode[t];
        out.modes.push_back(std::move(mode));
        if (contributions) contributions->push_back(std::move(c));
    }
    return out;
}

}  // namespace

SpectralMask make_masks(std::size_t bins, std::size_t n_ext, double fs, const VmdConfig& cfg) {
    SpectralMask mk;
    mk.freq_hz.resize(bins);
    mk.low.resize(bins);
    mk.band.resize(bins);
    const double r = cfg.mask_rolloff_hz;
    for (std::size_t j = 0; j < bins; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(n_ext) * fs;
        mk.freq_hz[j] = f;
        if (!cfg.masks) {
            mk.low[j] = mk.band[j] = 1.0;
            continue;
        }
        mk.low[j] = lowpass_response(f, cfg.lowpass_hz, r);
        mk.band[j] = j == 0 ? 0.0 : highpass_response(f, cfg.band_lo, r) * lowpass_response(f, cfg.band_hi, r);
    }
    return mk;
}

double adaptive_alpha(double w_i, bool resp_group, const VmdConfig& cfg) {
    if (w_i < 0.0) throw_domain("adaptive_alpha: negative center frequency");
    if (cfg.zeta == 0.0) return cfg.alpha_int;
    const double d = w_i - (resp_group ? cfg.w_r_resp : cfg.w_r_heart);
    const double ex = cfg.zeta * d * d;
    return cfg.alpha_int * std::exp(cfg.alpha_sign == AlphaSign::Printed ? -ex : ex);
}

double center_frequency(const std::vector<cd>& spectrum, const std::vector<double>& freq_hz, double previous) {
    if (spectrum.size() != freq_hz.size()) throw_domain("center_frequency: grid size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < spectrum.size(); ++j) {
        const double p = std::norm(spectrum[j]);
        num += freq_hz[j] * p;
        den += p;
    }
    return den > 0.0 ? num / den : previous;
}

std::vector<double> initial_centers(const VmdConfig& cfg) {
    if (cfg.init == InitStrategy::Uniform) return linspace(0.1, 2.5, cfg.I_total);
    auto w = linspace(0.1, std::min(0.6, cfg.lowpass_hz), cfg.M_resp);
    const auto h = linspace(cfg.band_lo, cfg.band_hi, cfg.I_total - cfg.M_resp);
    w.insert(w.end(), h.begin(), h.end());
    return w;
}

ImfSet baseline_vmd(const std::vector<double>& s, double fs, int I_total, double alpha, double epsilon,
                    double tol_abs, double tol_rel, int iter_max, const std::vector<double>& init_w,
                    std::vector<std::vector<double>>* w_trace) {
    check_input(s, fs);
    require(I_total >= 1, "I_total", "must be at least 1");
    require(alpha > 0.0, "alpha", "must be positive");
    require(iter_max >= 1, "iter_max", "must be at least 1");
    require(init_w.empty() || static_cast<int>(init_w.size()) == I_total, "init_w", "size must equal I_total");
    const Grid g = analysis_grid(s, fs);
    const std::vector<double> ones(g.bins, 1.0);
    Engine e;
    e.I = I_total;
    e.mask.assign(I_total, &ones);
    e.w = init_w.empty() ? linspace(0.1, 2.5, I_total) : init_w;
    e.epsilon = epsilon;
    e.tol_abs = tol_abs;
    e.tol_rel = tol_rel;
    e.iter_max = iter_max;
    const auto st = run_admm(g, fs, e, [alpha](int, double) { return alpha; }, w_trace);
    return collect(g, fs, s, e, st, nullptr);
}

VmdResult improved_vmd(const std::vector<double>& s, double fs, const VmdConfig& cfg,
                       std::vector<std::vector<double>>* w_trace) {
    cfg.validate();
    check_input(s, fs);
    const Grid g = analysis_grid(s, fs);
    VmdResult res;
    res.masks = make_masks(g.bins, g.n_ext, fs, cfg);
    Engine e;
    e.I = cfg.I_total;
    for (int i = 0; i < cfg.I_total; ++i) e.mask.push_back(i < cfg.M_resp ? &res.masks.low : &res.masks.band);
    e.w = initial_centers(cfg);
    e.epsilon = cfg.epsilon;
    e.tol_abs = cfg.tol_abs;
    e.tol_rel = cfg.tol_rel;
    e.iter_max = cfg.iter_max;
    e.complement = cfg.complement;
    const int M = cfg.M_resp;
    const auto st = run_admm(
        g, fs, e, [&cfg, M](int i, double w) { return adaptive_alpha(w, i < M, cfg); }, w_trace);
    std::vector<std::vector<cd>> contrib;
    res.imfs = collect(g, fs, s, e, st, &contrib);
    res.s_r.assign(g.T, 0.0);
    res.s_h.assign(g.T, 0.0);
    res.s_r_hat.assign(g.bins, cd(0.0, 0.0));
    res.s_h_hat.assign(g.bins, cd(0.0, 0.0));
    for (int i = 0; i < cfg.I_total; ++i) {
        auto& ts = i < M ? res.s_r : res.s_h;
        auto& fsp = i < M ? res.s_r_hat : res.s_h_hat;
        for (std::size_t t = 0; t < g.T; ++t) ts[t] += res.imfs.modes[i][t];
        for (std::size_t j = 0; j < g.bins; ++j) fsp[j] += contrib[i][j];
    }
    return res;
}

std::vector<double> dominant_mode(const ImfSet& imfs, double lo, double hi) {
    int best = -1;
    double best_e = -1.0;
    for (std::size_t i = 0; i < imfs.modes.size(); ++i) {
        if (imfs.w[i] < lo || imfs.w[i] > hi) continue;
        double en = 0.0;
        for (double v : imfs.modes[i]) en += v * v;
        if (en > best_e) {
            best_e = en;
            best = static_cast<int>(i);
        }
    }
    if (best < 0) return std::vector<double>(imfs.residual.size(), 0.0);
    return imfs.modes[best];
}

}  // namespace stcsense
