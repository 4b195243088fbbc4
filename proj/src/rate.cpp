#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stcsense/error.hpp"
#include "stcsense/fft.hpp"
#include "stcsense/vmd.hpp"

namespace stcsense {

namespace {

double mean_power(const std::vector<double>& x, std::size_t a, std::size_t b) {
    if (b <= a) return 0.0;
    double m = 0.0;
    for (std::size_t i = a; i < b; ++i) m += x[i];
    m /= static_cast<double>(b - a);
    double p = 0.0;
    for (std::size_t i = a; i < b; ++i) p += (x[i] - m) * (x[i] - m);
    return p / static_cast<double>(b - a);
}

RateEstimate estimate_range(const std::vector<double>& x, double fs, double lo, double hi, std::size_t a,
                            std::size_t b, const RateOptions& opt) {
    if (!(lo > 0.0 && hi > lo)) throw_domain("estimate_rate: band must satisfy 0 < lo < hi");
    if (b > x.size() || b < a + 8) throw_domain("estimate_rate: window longer than the series");
    const std::size_t n = b - a;
    RateEstimate est;
    est.window_power = mean_power(x, a, b);
    double m = 0.0;
    for (std::size_t i = a; i < b; ++i) m += x[i];
    m /= static_cast<double>(n);
    std::vector<double> seg(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
        seg[i] = (x[a + i] - m) * w;
    }
    const std::size_t nfft = fft::next_pow2(n * static_cast<std::size_t>(std::max(1, opt.zero_pad)));
    const auto X = fft::rfft(seg, nfft);
    const double df = fs / static_cast<double>(nfft);
    std::vector<double> P(X.size());
    for (std::size_t j = 0; j < X.size(); ++j) P[j] = std::norm(X[j]);
    std::vector<double> inband;
    std::size_t peak = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < P.size(); ++j) {
        const double f = static_cast<double>(j) * df;
        if (f < lo || f > hi) continue;
        inband.push_back(P[j]);
        if (P[j] > best) {
            best = P[j];
            peak = j;
        }
    }
    if (inband.empty()) throw_domain("estimate_rate: band contains no spectral bin");
    std::nth_element(inband.begin(), inband.begin() + inband.size() / 2, inband.end());
    est.median_power = inband[inband.size() / 2];
    est.peak_power = best;
    double f = static_cast<double>(peak) * df;
    if (peak > 0 && peak + 1 < P.size() && best > 0.0) {
        const double la = std::log(P[peak - 1] + 1e-300), lb = std::log(P[peak] + 1e-300),
                     lc = std::log(P[peak + 1] + 1e-300);
        const double den = la - 2.0 * lb + lc;
        if (den < 0.0) f += std::clamp(0.5 * (la - lc) / den, -0.5, 0.5) * df;
    }
    est.freq_hz = std::clamp(f, lo, hi);
    est.per_minute = 60.0 * est.freq_hz;
    est.prominence_db = est.median_power > 0.0 ? 10.0 * std::log10(best / est.median_power)
                                               : (best > 0.0 ? 400.0 : 0.0);
    est.valid = best > 0.0 && est.prominence_db >= opt.prominence_db;
    if (opt.ref_power > 0.0 && std::isfinite(opt.floor_db)) {
        const double floor = opt.ref_power * std::pow(10.0, opt.floor_db / 10.0);
        if (est.window_power < floor) est.valid = false;
    }
    return est;
}

}  // namespace

RateEstimate estimate_rate(const std::vector<double>& x, double fs, double lo, double hi, double window,
                           const RateOptions& opt) {
    if (!(fs > 0.0)) throw_domain("estimate_rate: sample rate must be positive");
    std::size_t n = x.size();
    if (window > 0.0) {
        n = static_cast<std::size_t>(std::llround(window * fs));
        if (n > x.size()) throw_domain("estimate_rate: series shorter than the window");
    }
    return estimate_range(x, fs, lo, hi, x.size() - n, x.size(), opt);
}

RateEstimate estimate_rate_span(const std::vector<double>& x, double fs, double lo, double hi, double t_begin,
                                double t_end, const RateOptions& opt) {
    if (!(fs > 0.0)) throw_domain("estimate_rate: sample rate must be positive");
    if (!(t_end > t_begin) || t_begin < 0.0) throw_domain("estimate_rate: invalid span");
    const auto a = static_cast<std::size_t>(std::llround(t_begin * fs));
    const auto b = static_cast<std::size_t>(std::llround(t_end * fs));
    return estimate_range(x, fs, lo, hi, a, b, opt);
}

VitalEstimate estimate_vitals(const std::vector<double>& s_r, const std::vector<double>& s_h, double fs,
                              const VmdConfig& cfg, double t_begin, double t_end, const RateOptions& opt) {
    VitalEstimate v;
    v.window = t_end - t_begin;
    RateOptions ro = opt;
    ro.ref_power = std::isfinite(opt.floor_db) ? mean_power(s_r, 0, s_r.size()) : 0.0;
    const auto r = estimate_rate_span(s_r, fs, 0.1, cfg.lowpass_hz, t_begin, t_end, ro);
    RateOptions ho = opt;
    ho.ref_power = 0.0;
    const auto h = estimate_rate_span(s_h, fs, cfg.band_lo, cfg.band_hi, t_begin, t_end, ho);
    v.rr = r.per_minute;
    v.rr_valid = r.valid;
    v.rr_peak = r.peak_power;
    v.hr = h.per_minute;
    v.hr_valid = h.valid;
    v.hr_peak = h.peak_power;
    return v;
}

void write_series_csv(const std::string& path, const std::vector<double>& x, double fs, const std::string& column) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "t_s," << column << "\n";
    f.precision(17);
    for (std::size_t i = 0; i < x.size(); ++i) f << static_cast<double>(i) / fs << ',' << x[i] << '\n';
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<double> read_series_csv(const std::string& path, double* fs_out) {
    std::ifstream f(path);
    if (!f) throw_config("signal", "cannot open " + path);
    std::string line;
    std::vector<double> t, v;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw_config("signal", path + ":" + std::to_string(lineno) + ": expected t,value");
        try {
            std::size_t used = 0;
            const double a = std::stod(line.substr(0, comma), &used);
            const double b = std::stod(line.substr(comma + 1));
            t.push_back(a);
            v.push_back(b);
        } catch (const std::invalid_argument&) {
            if (lineno == 1) continue;  // header
            throw_config("signal", path + ":" + std::to_string(lineno) + ": not a number");
        } catch (const std::out_of_range&) {
            throw_config("signal", path + ":" + std::to_string(lineno) + ": value out of range");
        }
    }
    if (v.size() < 2) throw_config("signal", path + ": fewer than two samples");
    if (fs_out) {
        const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(dt > 0.0)) throw_config("signal", path + ": time column must increase");
        *fs_out = 1.0 / dt;
    }
    return v;
}

}  // namespace stcsense
