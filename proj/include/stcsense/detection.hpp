#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stcsense/geometry.hpp"

namespace stcsense {

struct DetectionConfig {
    double mu = 0.05;
    bool mu_relative = true;      // threshold = mu * I^N_d; false: absolute power units
    double band_lo = 0.1, band_hi = 0.7;
    double prominence_db = 10.0;  // noise-only directions stay below ~7 dB, persons above ~20 dB
    double floor_hi = 10.0;       // Hz, upper |f| of the respiration noise-floor reference
    double window = 20.0;         // confirmation window, s
    double loss_timeout = 10.0;   // s
    double halfbw = 0.0;          // demux half-bandwidth, Hz; <= 0 means f0/4
    int taps = 301;
    double motion_rate = 20.0;    // Hz after decimation
    double vital_cutoff = 3.5;    // Hz, monitoring-stream low-pass after decimation; 0 disables
    int vital_taps = 81;
    int nms_radius = 1;           // directions; 0 disables suppression
    double nms_ratio = 1.0;       // 1: keep local maxima only

    double threshold(double baseline) const { return mu_relative ? mu * baseline : mu; }
    double half_bandwidth(double f0) const { return halfbw > 0.0 ? halfbw : f0 / 4.0; }
    void validate() const;
};

// Linear-phase low-pass FIR, Blackman-windowed sinc, unit DC gain. ntaps odd.
std::vector<double> lowpass_taps(double cutoff, double fs, int ntaps);

// Mixes each harmonic k down by e^{-j 2 pi k f0 t} (t = t_start + s/fs) and low-pass filters it.
// Outputs are time-aligned with the input (group delay removed, zero-padded edges).
std::vector<std::vector<cd>> demux_harmonics(const std::vector<cd>& x, double fs, double f0, const std::vector<int>& ks,
                                             double halfbw, int ntaps = 301, double t_start = 0.0);

// Block mean over `factor` samples (trailing partial block dropped).
std::vector<cd> decimate(const std::vector<cd>& x, std::size_t factor);

// Low-pass at the motion rate with edge-replicated padding (no decay toward zero at the ends).
std::vector<cd> vital_band(const std::vector<cd>& x, double fs, double cutoff, int ntaps);

double measure_intensity(const std::vector<cd>& stream);

// Strict: I_d - I^N_d > mu.
inline bool intensity_indicator(double I, double I_base, double mu) { return I - I_base > mu; }

// Static-path removal, phase, unwrap, linear detrend (radians). Short transients whose radius
// departs from the typical one (a scatterer crossing the beam) are cut and bridged linearly.
std::vector<double> extract_motion_signal(const std::vector<cd>& stream);

struct RespirationTest {
    bool pass = false;
    double peak_freq = 0.0;
    double prominence_db = 0.0;  // in-band peak over the noise-floor median
};

// Welch spectrum of the mean-removed complex stream over the last `window` seconds (two-sided).
// The peak over band_lo <= |f| <= band_hi is compared with the median of the bins with
// band_lo <= |f| <= floor_hi outside the peak's main lobe.
RespirationTest respiration_test(const std::vector<cd>& stream, double fs, const DetectionConfig& cfg);
bool respiration_indicator(const std::vector<cd>& stream, double fs, const DetectionConfig& cfg);

// Which directions keep their intensity detection: a direction is suppressed when a neighbour
// within `radius` has more than `ratio` times its excess power.
std::vector<bool> non_max_keep(const std::vector<double>& excess, int radius, double ratio);

enum class DirStatus { Empty, Candidate, Assigned };

struct DirectionState {
    DirStatus status = DirStatus::Empty;
    int harmonic = 0;
    double last_seen = 0.0;
};

struct AssignmentState {
    std::vector<DirectionState> dirs;
    std::vector<int> pool;      // free harmonics, lowest |k| first (then negative first)
    std::vector<int> harmonics; // full set

    static AssignmentState initial(std::size_t directions, std::vector<int> harmonics = {-1, 1, -3, 3});
    // Throws std::logic_error if a harmonic is assigned twice or pool/assigned don't cover the set.
    void check_invariants() const;
    std::vector<int> assigned_directions() const;
    bool operator==(const AssignmentState& o) const;
};

void sort_pool(std::vector<int>& pool);

struct ScanObservation {
    bool observed = true;
    bool intensity = false;
    bool respiration = false;
};

struct DetectionEvent {
    double t = 0.0;
    int direction = 0;
    std::string event;  // candidate | assigned | released | capacity
    std::optional<int> harmonic;
};

struct AssignmentUpdate {
    AssignmentState state;
    std::vector<DetectionEvent> events;
};

AssignmentUpdate update_assignments(const AssignmentState& s, const std::vector<ScanObservation>& scan, double now,
                                    const DetectionConfig& cfg);

std::string event_json(const DetectionEvent& e);
void write_detection_log(const std::string& path, const std::vector<DetectionEvent>& events);
std::vector<DetectionEvent> read_detection_log(const std::string& path);

void write_baseline_csv(const std::string& path, const std::vector<double>& intensity);
std::vector<double> read_baseline_csv(const std::string& path);

}  // namespace stcsense
