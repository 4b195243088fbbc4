#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "stcsense/io.hpp"

namespace stcsense {

// Errors of one (parameter value, seed) point. Errors are means over matched persons; NaN when
// the point has none.
struct TrialResult {
    int persons = 0;
    int detections = 0;
    int false_alarms = 0;
    int intensity_only = 0;
    double rr_error = std::numeric_limits<double>::quiet_NaN();
    double hr_error = std::numeric_limits<double>::quiet_NaN();
    double rr_error_max = std::numeric_limits<double>::quiet_NaN();
    double hr_error_max = std::numeric_limits<double>::quiet_NaN();
    double hr_error_baseline = std::numeric_limits<double>::quiet_NaN();  // baseline VMD
    double rr_error_broad = std::numeric_limits<double>::quiet_NaN();     // constant coding, k = 0
    double hr_error_broad = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct BenchRow {
    std::string parameter;
    double value = 0.0;
    std::uint64_t seed = 0;
    TrialResult r;
};

const std::vector<std::string>& sweep_parameters();

// Layout used when the config has no persons: four persons at x = -1.5, -0.5, 0.5, 1.5 on the grid plane.
Scene default_bench_scene(const RunConfig& c);

// Config for one point: parameter applied, scene seeded from (c.seed, seed), vitals drawn from
// U(0.2, 0.35) Hz and U(1.0, 1.7) Hz when c.sweep.randomize_vitals is set.
RunConfig bench_point(const RunConfig& c, const std::string& parameter, double value, std::uint64_t seed);

// Full pipeline (scan, assign, monitor, vitals). Empty out_dir writes no artifacts.
TrialResult pipeline_trial(const RunConfig& c, const std::string& out_dir = {});
// One person at (x, 0, distance) under a k = +1 focused coding; noise fixed at the level that
// gives c.snr_db at 1 m.
TrialResult distance_trial(const RunConfig& c, double distance);
// First person with a crossing passerby (or none): focused k = +1 coding vs constant coding
// demuxed at k = 0, same noise.
TrialResult passerby_trial(const RunConfig& c, bool passerby);

// Every (value, seed) point of c.sweep; each point writes into out_dir/<parameter>_<i>_s<seed>
// when out_dir is non-empty.
std::vector<BenchRow> run_bench(const RunConfig& c, const std::string& out_dir = {});
// One line per row, then one "mean" line per value.
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace stcsense
