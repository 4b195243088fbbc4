#include "stcsense/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "stcsense/error.hpp"
#include "stcsense/keyvalue.hpp"
#include "stcsense/parallel.hpp"
#include "stcsense/rng.hpp"

namespace stcsense {

namespace {

std::string coding_key(const RisGeometry& g, const FieldGrid& grid, const BeamTask& task, const BpsoConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << g.M << ' ' << g.N << ' ' << g.dx << ' ' << g.dy << ' ' << g.fc << ' ' << g.f0 << ' ' << g.L << ' ';
    const std::string_view amp(reinterpret_cast<const char*>(g.amp.data()), g.amp.size() * sizeof(double));
    const std::string_view ph(reinterpret_cast<const char*>(g.phase.data()), g.phase.size() * sizeof(double));
    os << std::hash<std::string_view>{}(amp) << ' ' << std::hash<std::string_view>{}(ph) << '|';
    os << grid.z << ' ' << grid.x0 << ' ' << grid.x1 << ' ' << grid.y0 << ' ' << grid.y1 << ' ' << grid.nx << ' '
       << grid.ny << '|';
    for (const auto& a : task.items)
        os << a.k << ' ' << a.target.x << ' ' << a.target.y << ' ' << a.target.z << ' ' << a.weight << ';';
    os << '|' << cfg.swarm << ' ' << cfg.iterations << ' ' << cfg.w_start << ' ' << cfg.w_end << ' ' << cfg.c1
       << ' ' << cfg.c2 << ' ' << cfg.v_max << ' ' << cfg.seed << ' ' << to_string(cfg.mode) << ' '
       << to_string(cfg.aggregate) << ' ' << cfg.polish_passes << ' ' << cfg.isolation;
    return os.str();
}

std::size_t decimation_factor(const RunConfig& c) {
    const double r = c.sim.fs / c.detection.motion_rate;
    const auto f = static_cast<std::size_t>(std::llround(r));
    if (f < 1 || std::abs(r - static_cast<double>(f)) > 1e-9)
        throw_config("detection.motion_rate", "must divide sim.fs");
    return f;
}

std::string harmonic_tag(int k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "k%+d", k);
    return buf;
}

// Minimal CSV table: header row, numeric cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw_config(name, "column missing from artifact");
    }
};

Table read_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("resume", "missing artifact " + path);
    Table t;
    std::string line;
    bool head = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (head) {
            t.header = cells;
            head = false;
            continue;
        }
        std::vector<double> row;
        for (const auto& x : cells) row.push_back(std::stod(x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

const OptResult& synthesize_coding(const RisGeometry& g, const FieldGrid& grid, const BeamTask& task,
                                   const BpsoConfig& cfg) {
    static std::mutex mu;
    static std::map<std::string, OptResult> cache;
    const std::string key = coding_key(g, grid, task, cfg);
    {
        std::lock_guard<std::mutex> lock(mu);
        const auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    OptResult r = bpso_optimize(task, g, grid, cfg);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, std::move(r)).first->second;
}

std::vector<cd> motion_stream(const RunConfig& c, const std::vector<cd>& demuxed) {
    auto z = decimate(demuxed, decimation_factor(c));
    const auto& d = c.detection;
    if (d.vital_cutoff > 0.0) z = vital_band(z, d.motion_rate, d.vital_cutoff, d.vital_taps);
    return z;
}

Vec3 direction_point(const RunConfig& c, std::size_t d) { return {c.scan.directions.at(d), 0.0, c.grid.z}; }

std::vector<StcCoding> scan_codings(const RunConfig& c, const RisGeometry& g) {
    std::vector<StcCoding> out;
    for (std::size_t d = 0; d < c.scan.directions.size(); ++d) {
        BeamTask t;
        t.items.push_back({c.scan.k, direction_point(c, d), 1.0});
        out.push_back(synthesize_coding(g, c.grid, t, c.scan_bpso).best);
    }
    return out;
}

std::vector<double> prescan_baseline(const RunConfig& c, const RisGeometry& g, const Scene& scene,
                                     const std::vector<StcCoding>& codings) {
    Scene empty = scene;
    empty.persons.clear();
    empty.passerby.enabled = false;
    if (c.prescan_reflectors) empty.reflectors = *c.prescan_reflectors;
    empty.seed = substream_seed(scene.seed, 0x70726573ULL);
    const auto echo = scan_sequence(empty, codings, g, c.grid, c.scan.dwell, c.sim.fs, c.sim.kmax);
    const double hb = c.detection.half_bandwidth(g.f0);
    std::vector<double> base(codings.size());
    parallel_for(codings.size(), [&](std::size_t d) {
        const auto y = demux_harmonics(echo.streams[d], echo.fs, g.f0, {c.scan.k}, hb, c.detection.taps,
                                       static_cast<double>(d) * c.scan.dwell);
        base[d] = measure_intensity(y[0]);
    });
    return base;
}

ScanResult run_scan(const RunConfig& c, const RisGeometry& g, const Scene& scene,
                    const std::vector<StcCoding>& codings, const std::vector<double>& baseline) {
    const std::size_t D = codings.size();
    if (baseline.size() != D) throw_config("baseline", "baseline length does not match the scan directions");
    const auto echo = scan_sequence(scene, codings, g, c.grid, c.scan.dwell, c.sim.fs, c.sim.kmax);
    const double hb = c.detection.half_bandwidth(g.f0);
    ScanResult r;
    r.intensity.resize(D);
    r.baseline = baseline;
    r.excess.resize(D);
    r.prominence_db.resize(D);
    r.intensity_pass.assign(D, false);
    r.respiration_pass.assign(D, false);
    std::vector<char> resp(D, 0);
    parallel_for(D, [&](std::size_t d) {
        const auto y = demux_harmonics(echo.streams[d], echo.fs, g.f0, {c.scan.k}, hb, c.detection.taps,
                                       static_cast<double>(d) * c.scan.dwell);
        r.intensity[d] = measure_intensity(y[0]);
        const auto z = decimate(y[0], decimation_factor(c));
        const auto t = respiration_test(z, c.detection.motion_rate, c.detection);
        resp[d] = t.pass ? 1 : 0;
        r.prominence_db[d] = t.prominence_db;
    });
    for (std::size_t d = 0; d < D; ++d) {
        r.excess[d] = r.intensity[d] - baseline[d];
        r.intensity_pass[d] = intensity_indicator(r.intensity[d], baseline[d], c.detection.threshold(baseline[d]));
        r.respiration_pass[d] = resp[d] != 0;
    }
    std::vector<double> ex(D);
    for (std::size_t d = 0; d < D; ++d) ex[d] = r.intensity_pass[d] ? std::max(r.excess[d], 0.0) : 0.0;
    r.kept = non_max_keep(ex, c.detection.nms_radius, c.detection.nms_ratio);
    for (std::size_t d = 0; d < D; ++d) {
        ScanObservation o;
        o.intensity = r.intensity_pass[d] && r.kept[d];
        o.respiration = r.respiration_pass[d];
        r.observations.push_back(o);
    }
    return r;
}

int match_person(const Scene& scene, const Vec3& p, double tol) {
    int best = -1;
    double bd = tol;
    for (std::size_t i = 0; i < scene.persons.size(); ++i) {
        const double d = distance(scene.persons[i].position, p);
        if (d <= bd) {
            bd = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

BeamTask reference_task(const RunConfig& c, const Scene& scene) {
    std::vector<Vec3> pts;
    for (const auto& p : scene.persons) pts.push_back(p.position);
    if (pts.empty())
        for (double x : {-1.5, -0.5, 0.5, 1.5}) pts.push_back({x, 0.0, c.grid.z});
    std::sort(pts.begin(), pts.end(), [](const Vec3& a, const Vec3& b) { return a.x < b.x; });
    auto pool = AssignmentState::initial(1).pool;
    BeamTask t;
    for (std::size_t i = 0; i < pts.size() && i < pool.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t d = 1; d < c.scan.directions.size(); ++d)
            if (std::abs(c.scan.directions[d] - pts[i].x) < std::abs(c.scan.directions[best] - pts[i].x)) best = d;
        t.items.push_back({pool[i], direction_point(c, best), 1.0});
    }
    return t;
}

double calibrate_noise_db(const RunConfig& c, const RisGeometry& g, const Scene& scene, const StcCoding& coding,
                          const BeamTask& task, double snr_db) {
    double pmin = std::numeric_limits<double>::infinity();
    for (const auto& a : task.items) {
        const int pi = match_person(scene, a.target, 0.5);
        const Vec3 p = pi >= 0 ? scene.persons[pi].position : a.target;
        const cd refl = pi >= 0 ? scene.persons[pi].reflectivity : cd(1.0, 0.0);
        pmin = std::min(pmin, std::norm(path_amplitude(g, coding, p, refl, scene.rx, a.k)));
    }
    if (!(pmin > 0.0) || !std::isfinite(pmin)) throw_domain("calibrate_noise_db: no echo to reference");
    return noise_db_for_snr(pmin, snr_db, c.sim.fs, c.detection.half_bandwidth(g.f0));
}

Scene scene_with_noise(const RunConfig& c, const RisGeometry& g, const Scene& scene) {
    Scene s = scene;
    if (std::isnan(c.snr_db)) return s;
    const BeamTask ref = reference_task(c, scene);
    const StcCoding coding =
        !c.coding_path.empty() ? read_coding(c.coding_path) : synthesize_coding(g, c.grid, ref, c.monitor_bpso).best;
    Scene calib = scene;
    if (calib.persons.empty())
        for (const auto& a : ref.items) {
            Person p;
            p.position = a.target;
            calib.persons.push_back(p);
        }
    s.noise_db = calibrate_noise_db(c, g, calib, coding, ref, c.snr_db);
    return s;
}

EchoSet simulate_monitor(const RunConfig& c, const RisGeometry& g, const Scene& scene, const StcCoding& coding,
                         double t_offset, std::uint64_t stream_index) {
    SimConfig sim = c.sim;
    sim.t_offset = t_offset;
    sim.stream_index = stream_index;
    return simulate_received(scene, coding, g, c.grid, sim);
}

TargetVitals process_motion(const RunConfig& c, int k, std::vector<double> motion, bool with_baseline) {
    TargetVitals tv;
    tv.k = k;
    tv.motion = std::move(motion);
    const double fs = c.detection.motion_rate;
    const double dur = static_cast<double>(tv.motion.size()) / fs;
    const double t1 = dur;
    const double t0 = c.rate_window > 0.0 ? std::max(0.0, dur - c.rate_window) : 0.0;
    tv.vmd = improved_vmd(tv.motion, fs, c.vmd);
    tv.estimate = estimate_vitals(tv.vmd.s_r, tv.vmd.s_h, fs, c.vmd, t0, t1, c.rate);
    if (with_baseline) {
        tv.baseline = baseline_vmd(tv.motion, fs, c.vmd.I_total, c.vmd.alpha_int, c.vmd.epsilon, c.vmd.tol_abs,
                                   c.vmd.tol_rel, c.vmd.iter_max);
        const auto h = dominant_mode(tv.baseline, c.vmd.band_lo, c.vmd.band_hi);
        RateOptions ho = c.rate;
        ho.ref_power = 0.0;
        const auto e = estimate_rate_span(h, fs, c.vmd.band_lo, c.vmd.band_hi, t0, t1, ho);
        tv.baseline_hr = e.per_minute;
        tv.baseline_hr_valid = e.valid;
    }
    return tv;
}

std::vector<TargetVitals> process_streams(const RunConfig& c, const std::vector<std::vector<cd>>& streams,
                                          const std::vector<int>& ks, bool with_baseline) {
    std::vector<TargetVitals> out(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) {
        out[i] = process_motion(c, ks[i], extract_motion_signal(streams[i]), with_baseline);
        out[i].stream = streams[i];
    });
    return out;
}

std::vector<TargetVitals> process_monitor(const RunConfig& c, const EchoSet& echo, const std::vector<int>& ks,
                                          bool with_baseline) {
    const auto y = demux_harmonics(echo.streams.at(0), echo.fs, echo.f0, ks, c.detection.half_bandwidth(echo.f0),
                                   c.detection.taps, echo.t_start);
    std::vector<std::vector<cd>> z;
    for (const auto& s : y) z.push_back(motion_stream(c, s));
    return process_streams(c, z, ks, with_baseline);
}

const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> s = {"prescan", "scan", "assign", "coding", "monitor",
                                               "demux",   "motion", "vmd"};
    return s;
}

Report run_pipeline(const RunConfig& c, const PipelineOptions& opt) {
    const auto t_begin = std::chrono::steady_clock::now();
    const auto& stages = pipeline_stages();
    const auto from_it = std::find(stages.begin(), stages.end(), opt.from);
    if (from_it == stages.end()) throw_config("from", "unknown stage '" + opt.from + "'");
    const auto from = static_cast<std::size_t>(from_it - stages.begin());
    auto runs = [&](const char* stage) {
        return static_cast<std::size_t>(std::find(stages.begin(), stages.end(), stage) - stages.begin()) >= from;
    };

    Report rep;
    rep.config_json = run_config_json(c);
    if (opt.artifacts) ensure_dir(c.output);
    const std::string out = c.output;
    const RisGeometry g = configured_geometry(c);
    const std::size_t D = c.scan.directions.size();
    const double tol = 0.5 * (D > 1 ? std::abs(c.scan.directions[1] - c.scan.directions[0]) : 0.5);

    std::string stage;
    Scene scene;
    std::vector<StcCoding> codings;
    std::vector<double> baseline;
    ScanResult scan;
    AssignmentState state = AssignmentState::initial(D);
    std::vector<std::pair<int, int>> assigned;  // (direction, harmonic)
    StcCoding monitor;
    EchoSet echo;
    std::vector<int> ks;
    std::vector<std::vector<cd>> streams;
    std::vector<std::vector<double>> motions;
    std::vector<TargetVitals> vitals;
    const double monitor_t0 = static_cast<double>(D) * c.scan.dwell;

    try {
        stage = "calibrate";
        scene = scene_with_noise(c, g, c.scene);
        rep.noise_db = scene.noise_db;
        if (runs("scan") || runs("prescan")) codings = scan_codings(c, g);

        stage = "prescan";
        if (runs("prescan")) {
            baseline = prescan_baseline(c, g, scene, codings);
            if (opt.artifacts) write_baseline_csv(join_path(out, "baseline.csv"), baseline);
        } else if (runs("scan")) {
            baseline = read_baseline_csv(join_path(out, "baseline.csv"));
        }

        stage = "scan";
        if (runs("scan")) {
            scan = run_scan(c, g, scene, codings, baseline);
            if (opt.artifacts) {
                std::ostringstream os;
                os.precision(17);
                os << "direction,x_m,intensity,baseline,excess,intensity_pass,respiration_pass,nms_keep,prominence_db\n";
                for (std::size_t d = 0; d < D; ++d)
                    os << d << ',' << c.scan.directions[d] << ',' << scan.intensity[d] << ',' << scan.baseline[d] << ','
                       << scan.excess[d] << ',' << int(scan.intensity_pass[d]) << ',' << int(scan.respiration_pass[d])
                       << ',' << int(scan.kept[d]) << ',' << scan.prominence_db[d] << '\n';
                write_text(join_path(out, "scan.csv"), os.str());
            }
        } else if (runs("assign")) {
            const Table t = read_table(join_path(out, "scan.csv"));
            const auto ci = t.col("intensity_pass"), cr = t.col("respiration_pass"), ck = t.col("nms_keep");
            if (t.rows.size() != D) throw_config("scan.csv", "row count does not match scan.directions");
            for (const auto& row : t.rows) {
                ScanObservation o;
                o.intensity = row[ci] != 0.0 && row[ck] != 0.0;
                o.respiration = row[cr] != 0.0;
                scan.observations.push_back(o);
                scan.intensity_pass.push_back(row[ci] != 0.0);
                scan.respiration_pass.push_back(row[cr] != 0.0);
                scan.kept.push_back(row[ck] != 0.0);
            }
        }

        stage = "assign";
        if (runs("assign")) {
            const auto up = update_assignments(state, scan.observations, monitor_t0, c.detection);
            up.state.check_invariants();
            state = up.state;
            rep.events = up.events;
            for (std::size_t d = 0; d < D; ++d)
                if (state.dirs[d].status == DirStatus::Assigned)
                    assigned.emplace_back(static_cast<int>(d), state.dirs[d].harmonic);
            if (opt.artifacts) {
                write_detection_log(join_path(out, "detections.jsonl"), rep.events);
                std::ostringstream os;
                os << "direction,harmonic\n";
                for (const auto& [d, k] : assigned) os << d << ',' << k << '\n';
                write_text(join_path(out, "assignment.csv"), os.str());
            }
        } else {
            rep.events = read_detection_log(join_path(out, "detections.jsonl"));
            const Table t = read_table(join_path(out, "assignment.csv"));
            for (const auto& row : t.rows) assigned.emplace_back(static_cast<int>(row[0]), static_cast<int>(row[1]));
        }
        for (std::size_t d = 0; d < scan.observations.size(); ++d)
            if (scan.intensity_pass[d] && scan.kept[d] && !scan.respiration_pass[d]) ++rep.intensity_only;
        for (std::size_t d = 0; d < D; ++d)
            if (match_person(c.scene, direction_point(c, d), tol) < 0) ++rep.empty_directions;
        rep.detections = static_cast<int>(assigned.size());
        for (const auto& [d, k] : assigned)
            if (match_person(c.scene, direction_point(c, static_cast<std::size_t>(d)), tol) < 0) ++rep.false_alarms;
        for (const auto& a : assigned) ks.push_back(a.second);

        stage = "coding";
        if (!assigned.empty()) {
            if (runs("coding")) {
                if (!c.coding_path.empty()) {
                    monitor = read_coding(c.coding_path);
                } else {
                    BeamTask task;
                    for (const auto& [d, k] : assigned) task.items.push_back({k, direction_point(c, d), 1.0});
                    const auto& r = synthesize_coding(g, c.grid, task, c.monitor_bpso);
                    monitor = r.best;
                    if (opt.artifacts) write_trace_csv(join_path(out, "monitor_trace.csv"), r.trace);
                }
                if (opt.artifacts) write_coding(join_path(out, "monitor.coding"), monitor, c.monitor_bpso.mode);
            } else if (runs("monitor")) {
                monitor = read_coding(join_path(out, "monitor.coding"));
            }

            stage = "monitor";
            if (runs("monitor")) {
                echo = simulate_monitor(c, g, scene, monitor, monitor_t0, D + 1);
                if (opt.artifacts && opt.echo_artifact) write_echo_raw(join_path(out, "monitor.iq"), echo, 0);
            } else if (runs("demux")) {
                echo = read_echo_raw(join_path(out, "monitor.iq"));
            }

            stage = "demux";
            if (runs("demux")) {
                const auto y = demux_harmonics(echo.streams.at(0), echo.fs, echo.f0, ks,
                                               c.detection.half_bandwidth(echo.f0), c.detection.taps, echo.t_start);
                for (std::size_t i = 0; i < ks.size(); ++i) {
                    streams.push_back(motion_stream(c, y[i]));
                    if (opt.artifacts)
                        write_echo_csv(join_path(out, "stream_" + harmonic_tag(ks[i]) + ".csv"), streams.back(),
                                       c.detection.motion_rate);
                }
            } else if (runs("motion")) {
                for (int k : ks) streams.push_back(read_echo_csv(join_path(out, "stream_" + harmonic_tag(k) + ".csv")));
            }

            stage = "motion";
            if (runs("motion")) {
                for (std::size_t i = 0; i < ks.size(); ++i) {
                    motions.push_back(extract_motion_signal(streams[i]));
                    if (opt.artifacts)
                        write_series_csv(join_path(out, "motion_" + harmonic_tag(ks[i]) + ".csv"), motions.back(),
                                         c.detection.motion_rate, "phase_rad");
                }
            } else {
                for (int k : ks) motions.push_back(read_series_csv(join_path(out, "motion_" + harmonic_tag(k) + ".csv")));
            }

            stage = "vmd";
            vitals.resize(ks.size());
            parallel_for(ks.size(), [&](std::size_t i) { vitals[i] = process_motion(c, ks[i], motions[i], true); });
            if (opt.artifacts)
                for (const auto& v : vitals) {
                    write_series_csv(join_path(out, "s_r_" + harmonic_tag(v.k) + ".csv"), v.vmd.s_r,
                                     c.detection.motion_rate, "s_r");
                    write_series_csv(join_path(out, "s_h_" + harmonic_tag(v.k) + ".csv"), v.vmd.s_h,
                                     c.detection.motion_rate, "s_h");
                }

            stage = "vitals";
            for (std::size_t i = 0; i < assigned.size(); ++i) {
                PersonRecord pr;
                pr.direction = assigned[i].first;
                pr.x = c.scan.directions[static_cast<std::size_t>(pr.direction)];
                pr.harmonic = assigned[i].second;
                pr.estimate = vitals[i].estimate;
                pr.baseline_hr = vitals[i].baseline_hr;
                const int pi = match_person(c.scene, direction_point(c, static_cast<std::size_t>(pr.direction)), tol);
                if (pi >= 0) {
                    const auto& p = c.scene.persons[static_cast<std::size_t>(pi)];
                    pr.has_truth = true;
                    pr.f_r = p.f_r;
                    pr.f_h = p.f_h;
                    pr.rr_error = std::abs(pr.estimate.rr - 60.0 * p.f_r);
                    pr.hr_error = std::abs(pr.estimate.hr - 60.0 * p.f_h);
                    pr.baseline_hr_error = std::abs(pr.baseline_hr - 60.0 * p.f_h);
                }
                rep.persons.push_back(pr);
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        rep.failed_stage = stage;
        rep.error = e.what();
    }
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    if (opt.artifacts) write_text(join_path(out, "report.json"), report_json(rep));
    return rep;
}

}  // namespace stcsense
