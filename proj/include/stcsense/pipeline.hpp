#pragma once

#include <string>
#include <vector>

#include "stcsense/io.hpp"

namespace stcsense {

// Memoized coding synthesis: identical (geometry, grid, task, config) returns the cached result.
const OptResult& synthesize_coding(const RisGeometry& g, const FieldGrid& grid, const BeamTask& task,
                                   const BpsoConfig& cfg);

// Demuxed stream -> motion-rate stream for vital-sign extraction: block decimation, then the
// vital-band low-pass. The scan's respiration test uses the plain decimated stream, whose
// differenced phase has a white noise floor.
std::vector<cd> motion_stream(const RunConfig& c, const std::vector<cd>& demuxed);

Vec3 direction_point(const RunConfig& c, std::size_t d);
std::vector<StcCoding> scan_codings(const RunConfig& c, const RisGeometry& g);

// Empty-scene intensities per direction: persons and passerby removed, reflectors from
// prescan_reflectors when set.
std::vector<double> prescan_baseline(const RunConfig& c, const RisGeometry& g, const Scene& scene,
                                     const std::vector<StcCoding>& codings);

struct ScanResult {
    std::vector<double> intensity, baseline, excess, prominence_db;
    std::vector<bool> intensity_pass, respiration_pass, kept;
    std::vector<ScanObservation> observations;
};

ScanResult run_scan(const RunConfig& c, const RisGeometry& g, const Scene& scene,
                    const std::vector<StcCoding>& codings, const std::vector<double>& baseline);

// Harmonics by pool order for persons sorted by x, mapped to their nearest scan direction.
BeamTask reference_task(const RunConfig& c, const Scene& scene);
// Noise level that puts the weakest person's on-focus echo at `snr_db` under `coding`.
double calibrate_noise_db(const RunConfig& c, const RisGeometry& g, const Scene& scene, const StcCoding& coding,
                          const BeamTask& task, double snr_db);
// Applies c.snr_db (if set) to a copy of the scene. Scenes without persons calibrate against the
// four-person reference layout at x = -1.5, -0.5, 0.5, 1.5.
Scene scene_with_noise(const RunConfig& c, const RisGeometry& g, const Scene& scene);

struct TargetVitals {
    int k = 0;
    std::vector<cd> stream;       // demuxed, decimated to the motion rate
    std::vector<double> motion;   // radians
    VmdResult vmd;
    VitalEstimate estimate;
    ImfSet baseline;
    double baseline_hr = 0.0;
    bool baseline_hr_valid = false;
};

// Demux, decimation, motion extraction, improved and baseline VMD, rate estimation.
std::vector<TargetVitals> process_monitor(const RunConfig& c, const EchoSet& echo, const std::vector<int>& ks,
                                          bool with_baseline = true);
std::vector<TargetVitals> process_streams(const RunConfig& c, const std::vector<std::vector<cd>>& streams,
                                          const std::vector<int>& ks, bool with_baseline = true);
TargetVitals process_motion(const RunConfig& c, int k, std::vector<double> motion, bool with_baseline = true);

EchoSet simulate_monitor(const RunConfig& c, const RisGeometry& g, const Scene& scene, const StcCoding& coding,
                         double t_offset, std::uint64_t stream_index);

// Nearest person to a direction point within `tol` meters; -1 if none.
int match_person(const Scene& scene, const Vec3& p, double tol);

struct PipelineOptions {
    std::string from = "prescan";  // prescan | scan | assign | coding | monitor | demux | motion | vmd
    bool artifacts = true;
    bool echo_artifact = true;     // raw monitoring IQ (large)
};

const std::vector<std::string>& pipeline_stages();

// Failures inside a stage are reported through Report::failed_stage; ConfigError propagates.
Report run_pipeline(const RunConfig& c, const PipelineOptions& opt = {});

}  // namespace stcsense
