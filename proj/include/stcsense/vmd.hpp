#pragma once

#include <string>
#include <vector>

#include "stcsense/geometry.hpp"

namespace stcsense {

// Printed: alpha = alpha_int exp(-zeta (w - w_r)^2), largest at the reference.
// Inverse: alpha_int exp(+zeta (w - w_r)^2).
enum class AlphaSign { Printed, Inverse };
// Consistent: complement of mode i is sum_{k != i} f_k u_k (each mode through its own mask).
// Literal: the group mask of mode i applied to sum_{k != i} u_k.
enum class Complement { Consistent, Literal };
// Grouped: respiration group on [0.1, 0.6] Hz, heart group on [band_lo, band_hi].
// Uniform: all modes on [0.1, 2.5] Hz.
enum class InitStrategy { Grouped, Uniform };

const char* to_string(AlphaSign s);
const char* to_string(Complement c);
const char* to_string(InitStrategy s);
AlphaSign parse_alpha_sign(const std::string& s);
Complement parse_complement(const std::string& s);
InitStrategy parse_init_strategy(const std::string& s);

struct VmdConfig {
    int I_total = 6;
    int M_resp = 3;
    double alpha_int = 2000.0;
    double zeta = 4.0;  // Hz^-2
    double w_r_resp = 0.25, w_r_heart = 1.35;
    double lowpass_hz = 0.7;
    double band_lo = 0.8, band_hi = 2.5;
    double epsilon = 0.0;  // Lagrange step
    double tol_abs = 1e-6, tol_rel = 1e-6;
    int iter_max = 500;
    InitStrategy init = InitStrategy::Grouped;
    bool masks = true;            // false: identity masks
    double mask_rolloff_hz = 0.0; // raised-cosine transition width; 0 = brick wall
    AlphaSign alpha_sign = AlphaSign::Printed;
    Complement complement = Complement::Consistent;

    void validate() const;
};

struct SpectralMask {
    std::vector<double> freq_hz;  // analysis grid
    std::vector<double> low;      // f_l
    std::vector<double> band;     // f_b
};

SpectralMask make_masks(std::size_t bins, std::size_t n_ext, double fs, const VmdConfig& cfg);

struct ImfSet {
    std::vector<std::vector<double>> modes;  // f_i * u_i in the time domain
    std::vector<double> w;                   // center frequencies, Hz
    std::vector<double> alpha;               // final per-mode penalty
    std::vector<double> residual;            // s - sum(modes)
    int iterations = 0;
    bool converged = false;
    double crit_abs = 0.0, crit_rel = 0.0;   // last termination measures
    double fs = 0.0;
};

struct VmdResult {
    ImfSet imfs;
    std::vector<double> s_r, s_h;
    // Analysis-grid spectra of s_r and s_h (normalized by 1/N of the extended signal).
    std::vector<cd> s_r_hat, s_h_hat;
    SpectralMask masks;
};

double adaptive_alpha(double w_i, bool resp_group, const VmdConfig& cfg);

// First moment over [0, fs/2] as Riemann sums; returns `previous` for an all-zero spectrum.
double center_frequency(const std::vector<cd>& spectrum, const std::vector<double>& freq_hz, double previous);

std::vector<double> initial_centers(const VmdConfig& cfg);

// Standard VMD with constant penalty and identity masks. `init_w` empty -> uniform [0.1, 2.5] Hz.
ImfSet baseline_vmd(const std::vector<double>& s, double fs, int I_total, double alpha, double epsilon,
                    double tol_abs, double tol_rel, int iter_max, const std::vector<double>& init_w = {},
                    std::vector<std::vector<double>>* w_trace = nullptr);

VmdResult improved_vmd(const std::vector<double>& s, double fs, const VmdConfig& cfg,
                       std::vector<std::vector<double>>* w_trace = nullptr);

struct RateOptions {
    double prominence_db = 3.0;
    int zero_pad = 8;
    // Power floor: when ref_power > 0, the window is invalid if its mean power is more than
    // |floor_db| below ref_power.
    double ref_power = 0.0;
    double floor_db = -10.0;
};

struct RateEstimate {
    bool valid = false;
    double freq_hz = 0.0;
    double per_minute = 0.0;
    double peak_power = 0.0;
    double median_power = 0.0;
    double prominence_db = 0.0;
    double window_power = 0.0;
};

// Hann-windowed spectrum of the last `window` seconds (whole series if window <= 0), in-band
// peak refined by three-point quadratic interpolation of log power.
RateEstimate estimate_rate(const std::vector<double>& x, double fs, double lo, double hi, double window,
                           const RateOptions& opt = {});
// Same on the samples in [t_begin, t_end) seconds.
RateEstimate estimate_rate_span(const std::vector<double>& x, double fs, double lo, double hi, double t_begin,
                                double t_end, const RateOptions& opt = {});

struct VitalEstimate {
    double rr = 0.0;  // RPM
    double hr = 0.0;  // BPM
    bool rr_valid = false, hr_valid = false;
    double rr_peak = 0.0, hr_peak = 0.0;
    double window = 0.0;
};

// RR from s_r on [0.1, lowpass], HR from s_h on the heartbeat band. The RR power floor (opt.floor_db)
// is referenced to the whole-record power of s_r; floor_db = -inf disables it.
VitalEstimate estimate_vitals(const std::vector<double>& s_r, const std::vector<double>& s_h, double fs,
                              const VmdConfig& cfg, double t_begin, double t_end, const RateOptions& opt = {});

// Conventional baseline grouping: the most energetic IMF whose center lies in the band.
std::vector<double> dominant_mode(const ImfSet& imfs, double lo, double hi);

void write_series_csv(const std::string& path, const std::vector<double>& x, double fs, const std::string& column);
std::vector<double> read_series_csv(const std::string& path, double* fs_out = nullptr);

}  // namespace stcsense
