#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stcsense/bpso.hpp"
#include "stcsense/coding.hpp"
#include "stcsense/detection.hpp"
#include "stcsense/geometry.hpp"
#include "stcsense/scene.hpp"
#include "stcsense/vmd.hpp"

namespace stcsense {

struct ScanConfig {
    std::vector<double> directions;  // x positions on the plane z = grid.z, y = 0
    double dwell = 20.0;             // s per direction
    int k = 1;                       // harmonic used by the scanning beam
};

struct SweepSpec {
    std::string parameter;  // i_total | alpha | zeta | mu | distance | passerby | snr
    std::vector<double> values;
    int seeds = 20;
    bool randomize_vitals = true;
};

struct RunConfig {
    RisGeometry geometry;
    std::string illumination = "spherical";  // spherical | uniform
    Vec3 source{0.0, 0.0, 0.8};
    double taper_q = 2.0;
    FieldGrid grid;

    std::string scene_path;
    Scene scene;
    // Empty-room reflectors seen by the prescan; unset -> the scene's own reflectors.
    std::string prescan_scene_path;
    std::optional<std::vector<StaticReflector>> prescan_reflectors;
    std::string coding_path;         // fixed monitoring coding; empty -> synthesize from assignments
    BeamTask task;                   // synthesize-coding task
    BpsoConfig bpso;                 // synthesize-coding task
    BpsoConfig monitor_bpso;         // pipeline monitoring coding
    BpsoConfig scan_bpso;            // single-beam scan codings

    DetectionConfig detection;
    ScanConfig scan;
    VmdConfig vmd;
    SimConfig sim;
    double snr_db = std::numeric_limits<double>::quiet_NaN();  // NaN: use the scene's noise_db
    double rate_window = 0.0;        // s; 0 = whole monitoring record
    RateOptions rate;

    SweepSpec sweep;
    std::string output = "out";
    std::uint64_t seed = 1;
    std::string base_dir = ".";

    void validate() const;
};

RunConfig default_run_config();
// Sections: [run] [geometry] [grid] [task] (repeating) [bpso] [monitor_bpso] [scan_bpso] [detection] [scan] [vmd]
// [sim] [rate] [sweep]. Relative paths resolve against base_dir.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = ".");
RunConfig read_run_config(const std::string& path);
// Effective configuration as JSON text (config echo).
std::string run_config_json(const RunConfig& c);

// Builds the geometry with the configured illumination.
RisGeometry configured_geometry(const RunConfig& c);

struct PersonRecord {
    int direction = -1;
    double x = 0.0;
    int harmonic = 0;
    bool has_truth = false;
    double f_r = 0.0, f_h = 0.0;  // ground truth, Hz
    VitalEstimate estimate;
    double rr_error = 0.0, hr_error = 0.0;
    double baseline_hr = 0.0, baseline_hr_error = 0.0;
};

struct Report {
    std::vector<PersonRecord> persons;
    std::vector<DetectionEvent> events;
    int detections = 0;
    int false_alarms = 0;     // assigned directions with no person
    int intensity_only = 0;   // directions passing the intensity test only
    int empty_directions = 0; // scanned directions with no person
    double noise_db = 0.0;
    double runtime_s = 0.0;
    std::string failed_stage;
    std::string error;
    std::string config_json;
};

// `with_runtime = false` omits runtime_s so two runs can be compared byte for byte.
std::string report_json(const Report& r, bool with_runtime = true);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_trace_csv(const std::string& path, const std::vector<double>& trace);
std::string join_path(const std::string& dir, const std::string& name);
void ensure_dir(const std::string& dir);

}  // namespace stcsense
