#include "stcsense/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stcsense/error.hpp"
#include "stcsense/keyvalue.hpp"

namespace stcsense {

namespace {

using nlohmann::ordered_json;

const std::vector<std::string> kSweepParams = {"i_total", "alpha", "zeta", "mu", "distance", "passerby", "snr"};

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

void parse_bpso(const KvSection& s, BpsoConfig& b) {
    s.check_keys({"swarm", "iterations", "w_start", "w_end", "c1", "c2", "v_max", "seed", "mode", "aggregate",
                  "polish_passes", "isolation"});
    b.swarm = static_cast<int>(s.integer("swarm", b.swarm));
    b.iterations = static_cast<int>(s.integer("iterations", b.iterations));
    b.w_start = s.num("w_start", b.w_start);
    b.w_end = s.num("w_end", b.w_end);
    b.c1 = s.num("c1", b.c1);
    b.c2 = s.num("c2", b.c2);
    b.v_max = s.num("v_max", b.v_max);
    b.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<long long>(b.seed)));
    if (s.has("mode")) b.mode = parse_coding_mode(s.raw("mode"));
    if (s.has("aggregate")) b.aggregate = parse_aggregate(s.raw("aggregate"));
    b.polish_passes = static_cast<int>(s.integer("polish_passes", b.polish_passes));
    b.isolation = s.num("isolation", b.isolation);
}

ordered_json bpso_json(const BpsoConfig& b) {
    return {{"swarm", b.swarm},       {"iterations", b.iterations}, {"w_start", b.w_start},
            {"w_end", b.w_end},       {"c1", b.c1},                 {"c2", b.c2},
            {"v_max", b.v_max},       {"seed", b.seed},             {"mode", to_string(b.mode)},
            {"aggregate", to_string(b.aggregate)}, {"polish_passes", b.polish_passes}, {"isolation", b.isolation}};
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

ordered_json num_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

void RunConfig::validate() const {
    geometry.validate();
    grid.validate();
    detection.validate();
    vmd.validate();
    sim.validate(geometry.f0);
    bpso.validate();
    monitor_bpso.validate();
    scan_bpso.validate();
    require(illumination == "spherical" || illumination == "uniform", "geometry.illumination",
            "expected spherical or uniform");
    require(!scan.directions.empty(), "scan.directions", "at least one direction is required");
    for (double x : scan.directions) {
        require(x >= grid.x0 - grid.step_x() && x <= grid.x1 + grid.step_x(), "scan.directions",
                "direction outside the grid extent");
    }
    require(scan.dwell >= detection.window, "scan.dwell", "must cover the confirmation window");
    require(std::abs(scan.k) <= sim.kmax, "scan.k", "exceeds sim.kmax");
    require(rate_window >= 0.0 && rate_window <= sim.duration, "rate.window", "must lie in [0, sim.duration]");
    if (!sweep.parameter.empty()) {
        bool ok = false;
        for (const auto& p : kSweepParams) ok = ok || p == sweep.parameter;
        require(ok, "sweep.parameter", "unknown sweep parameter '" + sweep.parameter + "'");
        require(!sweep.values.empty(), "sweep.values", "at least one value is required");
        require(sweep.seeds >= 1, "sweep.seeds", "must be >= 1");
    }
}

RunConfig default_run_config() {
    RunConfig c;
    c.geometry = default_geometry();
    c.grid = default_grid();
    c.bpso.aggregate = Aggregate::Geometric;
    c.bpso.iterations = 1000;
    c.bpso.polish_passes = 20;
    c.bpso.isolation = 1.0;
    c.monitor_bpso = c.bpso;
    c.monitor_bpso.isolation = 3.0;
    c.scan_bpso.iterations = 300;
    c.scan_bpso.polish_passes = 20;
    for (int i = 0; i <= 10; ++i) c.scan.directions.push_back(-2.5 + 0.5 * i);
    return c;
}

RisGeometry configured_geometry(const RunConfig& c) {
    RisGeometry g = c.geometry;
    if (c.illumination == "spherical")
        set_spherical_illumination(g, c.source, c.taper_q);
    else
        set_uniform_illumination(g);
    return g;
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
    const KvDocument doc = parse_kv(text);
    RunConfig c = default_run_config();
    c.base_dir = base_dir;
    bool seed_given = false;
    for (const auto& s : doc.sections) {
        if (s.name == "run") {
            s.check_keys({"output", "seed", "scene", "prescan_scene", "coding"});
            c.output = resolve(base_dir, s.str("output", c.output));
            if (s.has("seed")) {
                c.seed = static_cast<std::uint64_t>(s.integer("seed", 1));
                seed_given = true;
            }
            c.scene_path = resolve(base_dir, s.str("scene", ""));
            c.coding_path = resolve(base_dir, s.str("coding", ""));
            c.prescan_scene_path = resolve(base_dir, s.str("prescan_scene", ""));
        } else if (s.name == "geometry") {
            s.check_keys({"M", "N", "dx", "dy", "fc", "f0", "L", "illumination", "source", "taper_q"});
            const int M = static_cast<int>(s.integer("M", c.geometry.M));
            const int N = static_cast<int>(s.integer("N", c.geometry.N));
            const double fc = s.num("fc", c.geometry.fc);
            const double half = kSpeedOfLight / fc / 2.0;
            c.geometry = make_geometry(M, N, s.num("dx", half), s.num("dy", half), fc, s.num("f0", c.geometry.f0),
                                       static_cast<int>(s.integer("L", c.geometry.L)));
            c.illumination = s.str("illumination", c.illumination);
            c.source = s.vec3("source", c.source);
            c.taper_q = s.num("taper_q", c.taper_q);
        } else if (s.name == "grid") {
            s.check_keys({"z", "x0", "x1", "y0", "y1", "nx", "ny"});
            c.grid.z = s.num("z", c.grid.z);
            c.grid.x0 = s.num("x0", c.grid.x0);
            c.grid.x1 = s.num("x1", c.grid.x1);
            c.grid.y0 = s.num("y0", c.grid.y0);
            c.grid.y1 = s.num("y1", c.grid.y1);
            c.grid.nx = static_cast<int>(s.integer("nx", c.grid.nx));
            c.grid.ny = static_cast<int>(s.integer("ny", c.grid.ny));
        } else if (s.name == "task") {
            s.check_keys({"k", "target", "weight"});
            BeamAssignment a;
            if (!s.has("k")) throw_config("task.k", "missing required key (section at line " + std::to_string(s.line) + ")");
            a.k = static_cast<int>(s.integer("k", 0));
            a.target = s.vec3("target");
            a.weight = s.num("weight", 1.0);
            c.task.items.push_back(a);
        } else if (s.name == "bpso") {
            parse_bpso(s, c.bpso);
        } else if (s.name == "monitor_bpso") {
            parse_bpso(s, c.monitor_bpso);
        } else if (s.name == "scan_bpso") {
            parse_bpso(s, c.scan_bpso);
        } else if (s.name == "detection") {
            s.check_keys({"mu", "mu_relative", "band_lo", "band_hi", "prominence_db", "window", "loss_timeout", "halfbw",
                          "taps", "motion_rate", "nms_radius", "nms_ratio", "floor_hi",
                          "vital_cutoff", "vital_taps"});
            auto& d = c.detection;
            d.mu = s.num("mu", d.mu);
            d.mu_relative = s.flag("mu_relative", d.mu_relative);
            d.band_lo = s.num("band_lo", d.band_lo);
            d.band_hi = s.num("band_hi", d.band_hi);
            d.prominence_db = s.num("prominence_db", d.prominence_db);
            d.window = s.num("window", d.window);
            d.loss_timeout = s.num("loss_timeout", d.loss_timeout);
            d.halfbw = s.num("halfbw", d.halfbw);
            d.taps = static_cast<int>(s.integer("taps", d.taps));
            d.motion_rate = s.num("motion_rate", d.motion_rate);
            d.nms_radius = static_cast<int>(s.integer("nms_radius", d.nms_radius));
            d.nms_ratio = s.num("nms_ratio", d.nms_ratio);
            d.floor_hi = s.num("floor_hi", d.floor_hi);
            d.vital_cutoff = s.num("vital_cutoff", d.vital_cutoff);
            d.vital_taps = static_cast<int>(s.integer("vital_taps", d.vital_taps));
        } else if (s.name == "scan") {
            s.check_keys({"directions", "dwell", "k"});
            if (s.has("directions")) c.scan.directions = s.list("directions");
            c.scan.dwell = s.num("dwell", c.scan.dwell);
            c.scan.k = static_cast<int>(s.integer("k", c.scan.k));
        } else if (s.name == "vmd") {
            s.check_keys({"I_total", "M_resp", "alpha_int", "zeta", "w_r_resp", "w_r_heart", "lowpass_hz", "band_lo",
                          "band_hi", "epsilon", "tol_abs", "tol_rel", "iter_max", "init", "masks", "mask_rolloff_hz",
                          "alpha_sign", "complement"});
            auto& v = c.vmd;
            v.I_total = static_cast<int>(s.integer("I_total", v.I_total));
            v.M_resp = static_cast<int>(s.integer("M_resp", v.M_resp));
            v.alpha_int = s.num("alpha_int", v.alpha_int);
            v.zeta = s.num("zeta", v.zeta);
            v.w_r_resp = s.num("w_r_resp", v.w_r_resp);
            v.w_r_heart = s.num("w_r_heart", v.w_r_heart);
            v.lowpass_hz = s.num("lowpass_hz", v.lowpass_hz);
            v.band_lo = s.num("band_lo", v.band_lo);
            v.band_hi = s.num("band_hi", v.band_hi);
            v.epsilon = s.num("epsilon", v.epsilon);
            v.tol_abs = s.num("tol_abs", v.tol_abs);
            v.tol_rel = s.num("tol_rel", v.tol_rel);
            v.iter_max = static_cast<int>(s.integer("iter_max", v.iter_max));
            if (s.has("init")) v.init = parse_init_strategy(s.raw("init"));
            v.masks = s.flag("masks", v.masks);
            v.mask_rolloff_hz = s.num("mask_rolloff_hz", v.mask_rolloff_hz);
            if (s.has("alpha_sign")) v.alpha_sign = parse_alpha_sign(s.raw("alpha_sign"));
            if (s.has("complement")) v.complement = parse_complement(s.raw("complement"));
        } else if (s.name == "sim") {
            s.check_keys({"fs", "duration", "kmax", "passerby_rate", "snr_db"});
            c.sim.fs = s.num("fs", c.sim.fs);
            c.sim.duration = s.num("duration", c.sim.duration);
            c.sim.kmax = static_cast<int>(s.integer("kmax", c.sim.kmax));
            c.sim.passerby_rate = s.num("passerby_rate", c.sim.passerby_rate);
            c.snr_db = s.num("snr_db", c.snr_db);
        } else if (s.name == "rate") {
            s.check_keys({"prominence_db", "zero_pad", "floor_db", "window"});
            c.rate.prominence_db = s.num("prominence_db", c.rate.prominence_db);
            c.rate.zero_pad = static_cast<int>(s.integer("zero_pad", c.rate.zero_pad));
            c.rate.floor_db = s.num("floor_db", c.rate.floor_db);
            c.rate_window = s.num("window", c.rate_window);
        } else if (s.name == "sweep") {
            s.check_keys({"parameter", "values", "seeds", "randomize_vitals"});
            c.sweep.parameter = s.str("parameter", "");
            c.sweep.values = s.list("values");
            c.sweep.seeds = static_cast<int>(s.integer("seeds", c.sweep.seeds));
            c.sweep.randomize_vitals = s.flag("randomize_vitals", c.sweep.randomize_vitals);
        } else {
            throw_config(s.name.empty() ? "config" : s.name,
                         "unknown section (line " + std::to_string(s.line) + ")");
        }
    }
    if (!c.scene_path.empty()) c.scene = read_scene(c.scene_path);
    if (!c.prescan_scene_path.empty()) c.prescan_reflectors = read_scene(c.prescan_scene_path).reflectors;
    if (seed_given) c.scene.seed = c.seed;
    c.validate();
    return c;
}

RunConfig read_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("config", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_run_config(ss.str(), dir.empty() ? "." : dir);
}

std::string run_config_json(const RunConfig& c) {
    ordered_json j;
    j["run"] = {{"output", c.output}, {"seed", c.seed}, {"scene", c.scene_path},
                {"prescan_scene", c.prescan_scene_path}, {"coding", c.coding_path}};
    j["geometry"] = {{"M", c.geometry.M},   {"N", c.geometry.N},   {"dx", c.geometry.dx},
                     {"dy", c.geometry.dy}, {"fc", c.geometry.fc}, {"f0", c.geometry.f0},
                     {"L", c.geometry.L},   {"illumination", c.illumination},
                     {"source", vec_json(c.source)}, {"taper_q", c.taper_q}};
    j["grid"] = {{"z", c.grid.z},   {"x0", c.grid.x0}, {"x1", c.grid.x1}, {"y0", c.grid.y0},
                 {"y1", c.grid.y1}, {"nx", c.grid.nx}, {"ny", c.grid.ny}};
    ordered_json tasks = ordered_json::array();
    for (const auto& a : c.task.items) tasks.push_back({{"k", a.k}, {"target", vec_json(a.target)}, {"weight", a.weight}});
    j["task"] = tasks;
    j["bpso"] = bpso_json(c.bpso);
    j["monitor_bpso"] = bpso_json(c.monitor_bpso);
    j["scan_bpso"] = bpso_json(c.scan_bpso);
    const auto& d = c.detection;
    j["detection"] = {{"mu", d.mu},
                      {"mu_relative", d.mu_relative},
                      {"band_lo", d.band_lo},
                      {"band_hi", d.band_hi},
                      {"prominence_db", d.prominence_db},
                      {"window", d.window},
                      {"loss_timeout", d.loss_timeout},
                      {"halfbw", d.half_bandwidth(c.geometry.f0)},
                      {"taps", d.taps},
                      {"motion_rate", d.motion_rate},
                      {"nms_radius", d.nms_radius},
                      {"nms_ratio", d.nms_ratio},
                      {"floor_hi", d.floor_hi},
                      {"vital_cutoff", d.vital_cutoff},
                      {"vital_taps", d.vital_taps}};
    j["scan"] = {{"directions", c.scan.directions}, {"dwell", c.scan.dwell}, {"k", c.scan.k}};
    const auto& v = c.vmd;
    j["vmd"] = {{"I_total", v.I_total},
                {"M_resp", v.M_resp},
                {"alpha_int", v.alpha_int},
                {"zeta", v.zeta},
                {"w_r_resp", v.w_r_resp},
                {"w_r_heart", v.w_r_heart},
                {"lowpass_hz", v.lowpass_hz},
                {"band_lo", v.band_lo},
                {"band_hi", v.band_hi},
                {"epsilon", v.epsilon},
                {"tol_abs", v.tol_abs},
                {"tol_rel", v.tol_rel},
                {"iter_max", v.iter_max},
                {"init", to_string(v.init)},
                {"masks", v.masks},
                {"mask_rolloff_hz", v.mask_rolloff_hz},
                {"alpha_sign", to_string(v.alpha_sign)},
                {"complement", to_string(v.complement)}};
    j["sim"] = {{"fs", c.sim.fs},
                {"duration", c.sim.duration},
                {"kmax", c.sim.kmax},
                {"passerby_rate", c.sim.passerby_rate},
                {"snr_db", num_json(c.snr_db)}};
    j["rate"] = {{"prominence_db", c.rate.prominence_db},
                 {"zero_pad", c.rate.zero_pad},
                 {"floor_db", num_json(c.rate.floor_db)},
                 {"window", c.rate_window}};
    if (!c.sweep.parameter.empty())
        j["sweep"] = {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}, {"seeds", c.sweep.seeds},
                      {"randomize_vitals", c.sweep.randomize_vitals}};
    j["scene"] = {{"seed", c.scene.seed},
                  {"noise_db", num_json(c.scene.noise_db)},
                  {"persons", c.scene.persons.size()},
                  {"reflectors", c.scene.reflectors.size()},
                  {"passerby", c.scene.passerby.enabled}};
    return j.dump(2);
}

std::string report_json(const Report& r, bool with_runtime) {
    ordered_json j;
    ordered_json persons = ordered_json::array();
    for (const auto& p : r.persons) {
        ordered_json e;
        e["direction"] = p.direction;
        e["x_m"] = p.x;
        e["harmonic"] = p.harmonic;
        if (p.has_truth) {
            e["truth"] = {{"f_r_hz", p.f_r}, {"f_h_hz", p.f_h}, {"rr_rpm", 60.0 * p.f_r}, {"hr_bpm", 60.0 * p.f_h}};
        } else {
            e["truth"] = nullptr;
        }
        e["estimate"] = {{"rr_rpm", p.estimate.rr},
                         {"hr_bpm", p.estimate.hr},
                         {"rr_valid", p.estimate.rr_valid},
                         {"hr_valid", p.estimate.hr_valid},
                         {"rr_peak", p.estimate.rr_peak},
                         {"hr_peak", p.estimate.hr_peak},
                         {"window_s", p.estimate.window}};
        if (p.has_truth) {
            e["error"] = {{"rr_rpm", p.rr_error}, {"hr_bpm", p.hr_error}};
            e["baseline_vmd"] = {{"hr_bpm", p.baseline_hr}, {"hr_error_bpm", p.baseline_hr_error}};
        } else {
            e["error"] = nullptr;
            e["baseline_vmd"] = {{"hr_bpm", p.baseline_hr}};
        }
        persons.push_back(e);
    }
    j["persons"] = persons;
    ordered_json events = ordered_json::array();
    for (const auto& ev : r.events) events.push_back(ordered_json::parse(event_json(ev)));
    j["events"] = events;
    j["detections"] = r.detections;
    j["false_alarms"] = r.false_alarms;
    j["intensity_only"] = r.intensity_only;
    j["empty_directions"] = r.empty_directions;
    j["noise_db"] = num_json(r.noise_db);
    if (!r.failed_stage.empty()) {
        j["failed_stage"] = r.failed_stage;
        j["error"] = r.error;
    }
    if (with_runtime) j["runtime_s"] = r.runtime_s;
    j["config"] = r.config_json.empty() ? ordered_json(nullptr) : ordered_json::parse(r.config_json);
    return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw_config("output", "cannot write " + path);
    f << text;
    if (!f) throw_config("output", "write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_config("input", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "step,fitness\n";
    for (std::size_t i = 0; i < trace.size(); ++i) os << i << ',' << trace[i] << '\n';
    write_text(path, os.str());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw_config("output", "cannot create directory " + dir + ": " + ec.message());
}

}  // namespace stcsense
