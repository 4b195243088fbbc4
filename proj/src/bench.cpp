#include "stcsense/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "stcsense/error.hpp"
#include "stcsense/parallel.hpp"
#include "stcsense/pipeline.hpp"
#include "stcsense/rng.hpp"

namespace stcsense {

namespace {

constexpr std::uint64_t kVitalsStream = 0x76697461ULL;
constexpr double kDefaultSnrDb = 10.0;

double snr_or_default(const RunConfig& c) { return std::isnan(c.snr_db) ? kDefaultSnrDb : c.snr_db; }

// Mean and max of finite values; NaN when none.
std::pair<double, double> mean_max(const std::vector<double>& v) {
    double s = 0.0, m = -1.0;
    int n = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            s += x;
            m = std::max(m, x);
            ++n;
        }
    if (n == 0) return {std::nan(""), std::nan("")};
    return {s / n, m};
}

double abs_err(double est_per_min, double truth_hz) { return std::abs(est_per_min - 60.0 * truth_hz); }

StcCoding focused_coding(const RunConfig& c, const RisGeometry& g, const FieldGrid& grid, const Vec3& p) {
    BeamTask t;
    t.items.push_back({1, p, 1.0});
    return synthesize_coding(g, grid, t, c.scan_bpso).best;
}

// Respiration indicator on the plain decimated k-stream, as the scan applies it.
bool breathing_seen(const RunConfig& c, const EchoSet& echo, int k) {
    const auto y = demux_harmonics(echo.streams.at(0), echo.fs, echo.f0, {k}, c.detection.half_bandwidth(echo.f0),
                                   c.detection.taps, echo.t_start);
    std::vector<cd> z = decimate(y[0], static_cast<std::size_t>(std::llround(c.sim.fs / c.detection.motion_rate)));
    return respiration_indicator(z, c.detection.motion_rate, c.detection);
}

BeamTask single_task(const Vec3& p) {
    BeamTask t;
    t.items.push_back({1, p, 1.0});
    return t;
}

std::string point_dir(const std::string& out_dir, const std::string& parameter, std::size_t i, std::uint64_t seed) {
    return join_path(out_dir, parameter + "_" + std::to_string(i) + "_s" + std::to_string(seed));
}

std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

nlohmann::ordered_json trial_json(const BenchRow& row) {
    auto f = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    const auto& r = row.r;
    return {{"parameter", row.parameter},         {"value", row.value},
            {"seed", row.seed},                   {"persons", r.persons},
            {"detections", r.detections},         {"false_alarms", r.false_alarms},
            {"intensity_only", r.intensity_only}, {"rr_error_rpm", f(r.rr_error)},
            {"hr_error_bpm", f(r.hr_error)},      {"hr_error_baseline_bpm", f(r.hr_error_baseline)},
            {"rr_error_broad_rpm", f(r.rr_error_broad)}, {"hr_error_broad_bpm", f(r.hr_error_broad)},
            {"error", r.error}};
}

}  // namespace

const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> p = {"i_total", "alpha", "zeta", "mu", "distance", "passerby", "snr"};
    return p;
}

Scene default_bench_scene(const RunConfig& c) {
    Scene s = c.scene;
    s.persons.clear();
    for (double x : {-1.5, -0.5, 0.5, 1.5}) {
        Person p;
        p.position = {x, 0.0, c.grid.z};
        s.persons.push_back(p);
    }
    return s;
}

RunConfig bench_point(const RunConfig& c, const std::string& parameter, double value, std::uint64_t seed) {
    RunConfig p = c;
    const bool single = parameter == "distance" || parameter == "passerby";
    if (p.scene.persons.empty()) {
        if (single) {
            Person q;
            q.position = {0.5, 0.0, c.grid.z};
            p.scene.persons.push_back(q);
        } else {
            p.scene = default_bench_scene(c);
        }
    }
    p.scene.seed = substream_seed(c.seed, seed);
    if (c.sweep.randomize_vitals) {
        Rng rng = Rng::substream(p.scene.seed, kVitalsStream);
        for (auto& q : p.scene.persons) {
            q.f_r = rng.uniform(0.2, 0.35);
            q.f_h = rng.uniform(1.0, 1.7);
        }
    }
    if (parameter == "i_total") {
        p.vmd.I_total = static_cast<int>(std::lround(value));
        p.vmd.M_resp = std::min(p.vmd.M_resp, p.vmd.I_total - 1);
    } else if (parameter == "alpha") {
        p.vmd.alpha_int = value;
    } else if (parameter == "zeta") {
        p.vmd.zeta = value;
    } else if (parameter == "mu") {
        p.detection.mu = value;
    } else if (parameter == "snr") {
        p.snr_db = value;
    } else if (parameter == "distance" || parameter == "passerby") {
        // applied by the trial
    } else {
        throw_config("sweep.parameter", "unknown sweep parameter '" + parameter + "'");
    }
    p.validate();
    return p;
}

TrialResult pipeline_trial(const RunConfig& c, const std::string& out_dir) {
    RunConfig rc = c;
    PipelineOptions opt;
    opt.artifacts = !out_dir.empty();
    opt.echo_artifact = false;
    if (opt.artifacts) rc.output = out_dir;
    const Report rep = run_pipeline(rc, opt);
    TrialResult t;
    t.persons = static_cast<int>(c.scene.persons.size());
    t.detections = rep.detections;
    t.false_alarms = rep.false_alarms;
    t.intensity_only = rep.intensity_only;
    t.error = rep.failed_stage.empty() ? "" : rep.failed_stage + ": " + rep.error;
    std::vector<double> rr, hr, hb;
    for (const auto& p : rep.persons) {
        if (!p.has_truth) continue;
        rr.push_back(p.rr_error);
        hr.push_back(p.hr_error);
        hb.push_back(p.baseline_hr_error);
    }
    std::tie(t.rr_error, t.rr_error_max) = mean_max(rr);
    std::tie(t.hr_error, t.hr_error_max) = mean_max(hr);
    t.hr_error_baseline = mean_max(hb).first;
    return t;
}

TrialResult distance_trial(const RunConfig& c, double distance) {
    require(distance > 0.0, "sweep.values", "distance must be > 0");
    require(!c.scene.persons.empty(), "scene", "distance trial needs a person");
    const RisGeometry g = configured_geometry(c);
    Person person = c.scene.persons.front();
    const double x = person.position.x;

    // Noise level from the same person at 1 m.
    RunConfig ref = c;
    ref.grid.z = 1.0;
    Scene s1 = c.scene;
    s1.persons = {person};
    s1.persons[0].position = {x, 0.0, 1.0};
    const double noise_db = calibrate_noise_db(ref, g, s1, focused_coding(ref, g, ref.grid, {x, 0.0, 1.0}),
                                               single_task({x, 0.0, 1.0}), snr_or_default(c));

    RunConfig rc = c;
    rc.grid.z = distance;
    Scene sc = c.scene;
    person.position = {x, 0.0, distance};
    sc.persons = {person};
    sc.passerby.enabled = false;
    sc.noise_db = noise_db;
    const StcCoding coding = focused_coding(rc, g, rc.grid, person.position);
    const EchoSet echo = simulate_monitor(rc, g, sc, coding, 0.0, 1);
    const auto v = process_monitor(rc, echo, {1}, true);

    TrialResult t;
    t.persons = 1;
    t.detections = breathing_seen(rc, echo, 1) ? 1 : 0;
    t.rr_error = t.rr_error_max = abs_err(v[0].estimate.rr, person.f_r);
    t.hr_error = t.hr_error_max = abs_err(v[0].estimate.hr, person.f_h);
    t.hr_error_baseline = abs_err(v[0].baseline_hr, person.f_h);
    return t;
}

TrialResult passerby_trial(const RunConfig& c, bool passerby) {
    require(!c.scene.persons.empty(), "scene", "passerby trial needs a person");
    const RisGeometry g = configured_geometry(c);
    const Person& person = c.scene.persons.front();
    Scene sc = c.scene;
    sc.persons = {person};
    sc.passerby = passerby ? crossing_passerby(person, c.sim.duration) : Passerby{};

    const StcCoding focused = focused_coding(c, g, c.grid, person.position);
    sc.noise_db = calibrate_noise_db(c, g, sc, focused, single_task(person.position), snr_or_default(c));
    const StcCoding broad = constant_coding(g.M, g.N, g.L);

    const EchoSet ef = simulate_monitor(c, g, sc, focused, 0.0, 1);
    const auto vf = process_monitor(c, ef, {1}, false);
    const auto vb = process_monitor(c, simulate_monitor(c, g, sc, broad, 0.0, 1), {0}, false);

    TrialResult t;
    t.persons = 1;
    t.detections = breathing_seen(c, ef, 1) ? 1 : 0;
    t.rr_error = t.rr_error_max = abs_err(vf[0].estimate.rr, person.f_r);
    t.hr_error = t.hr_error_max = abs_err(vf[0].estimate.hr, person.f_h);
    t.rr_error_broad = abs_err(vb[0].estimate.rr, person.f_r);
    t.hr_error_broad = abs_err(vb[0].estimate.hr, person.f_h);
    return t;
}

std::vector<BenchRow> run_bench(const RunConfig& c, const std::string& out_dir) {
    const SweepSpec& sw = c.sweep;
    require(!sw.parameter.empty(), "sweep.parameter", "no sweep parameter configured");
    require(!sw.values.empty(), "sweep.values", "at least one value is required");
    const std::size_t S = static_cast<std::size_t>(sw.seeds);
    std::vector<BenchRow> rows(sw.values.size() * S);
    if (!out_dir.empty()) ensure_dir(out_dir);
    parallel_for(rows.size(), [&](std::size_t j) {
        const std::size_t i = j / S;
        BenchRow& row = rows[j];
        row.parameter = sw.parameter;
        row.value = sw.values[i];
        row.seed = j % S;
        const RunConfig p = bench_point(c, sw.parameter, row.value, row.seed);
        const std::string dir = out_dir.empty() ? "" : point_dir(out_dir, sw.parameter, i, row.seed);
        try {
            if (sw.parameter == "distance")
                row.r = distance_trial(p, row.value);
            else if (sw.parameter == "passerby")
                row.r = passerby_trial(p, row.value != 0.0);
            else
                row.r = pipeline_trial(p, dir);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            row.r.error = e.what();
        }
        if (!dir.empty()) {
            ensure_dir(dir);
            write_text(join_path(dir, "trial.json"), trial_json(row).dump(2) + "\n");
        }
    });
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream os;
    os << "parameter,value,seed,persons,detections,false_alarms,intensity_only,rr_error_rpm,hr_error_bpm,"
          "rr_error_max_rpm,hr_error_max_bpm,hr_error_baseline_bpm,rr_error_broad_rpm,hr_error_broad_bpm,error\n";
    auto line = [&](const BenchRow& b, const std::string& seed) {
        const auto& r = b.r;
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << b.parameter << ',' << num(b.value) << ',' << seed << ',' << r.persons << ',' << r.detections << ','
           << r.false_alarms << ',' << r.intensity_only << ',' << num(r.rr_error) << ',' << num(r.hr_error) << ','
           << num(r.rr_error_max) << ',' << num(r.hr_error_max) << ',' << num(r.hr_error_baseline) << ','
           << num(r.rr_error_broad) << ',' << num(r.hr_error_broad) << ',' << err << '\n';
    };
    for (const auto& b : rows) line(b, std::to_string(b.seed));

    std::vector<double> values;
    for (const auto& b : rows)
        if (std::find(values.begin(), values.end(), b.value) == values.end()) values.push_back(b.value);
    for (double v : values) {
        std::vector<double> cols[11];
        std::string parameter;
        for (const auto& b : rows) {
            if (b.value != v) continue;
            parameter = b.parameter;
            const auto& r = b.r;
            const double xs[11] = {double(r.persons), double(r.detections), double(r.false_alarms),
                                   double(r.intensity_only), r.rr_error, r.hr_error, r.rr_error_max,
                                   r.hr_error_max, r.hr_error_baseline, r.rr_error_broad, r.hr_error_broad};
            for (int k = 0; k < 11; ++k) cols[k].push_back(xs[k]);
        }
        os << parameter << ',' << num(v) << ",mean";
        for (auto& col : cols) os << ',' << num(mean_max(col).first);
        os << ",\n";
    }
    return os.str();
}

}  // namespace stcsense
