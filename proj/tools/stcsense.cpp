#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "stcsense/bench.hpp"
#include "stcsense/error.hpp"
#include "stcsense/io.hpp"
#include "stcsense/pattern.hpp"
#include "stcsense/pipeline.hpp"

using namespace stcsense;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config;
    std::string output;
    long long seed = -1;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("-c,--config", c.config, "run config (sectioned key-value)")->required()->check(CLI::ExistingFile);
    app->add_option("-o,--output", c.output, "output directory (overrides [run] output)");
    app->add_option("--seed", c.seed, "master seed (overrides [run] seed)");
}

RunConfig load(const Common& c) {
    RunConfig rc = read_run_config(c.config);
    if (!c.output.empty()) rc.output = c.output;
    if (c.seed >= 0) {
        rc.seed = static_cast<std::uint64_t>(c.seed);
        rc.scene.seed = rc.seed;
    }
    rc.validate();
    return rc;
}

int cmd_synthesize(const Common& cm) {
    const RunConfig c = load(cm);
    require(!c.task.items.empty(), "task", "no [task] sections");
    c.task.validate();
    const RisGeometry g = configured_geometry(c);
    const auto& r = synthesize_coding(g, c.grid, c.task, c.bpso);
    ensure_dir(c.output);
    write_coding(join_path(c.output, "coding.txt"), r.best, c.bpso.mode);
    write_trace_csv(join_path(c.output, "trace.csv"), r.trace);
    FocusingModel model(g, c.grid, c.task, c.bpso.mode, c.bpso.aggregate, c.bpso.isolation);
    ordered_json j;
    j["fitness"] = r.best_fitness;
    j["fractions"] = model.fractions(r.best_x);
    j["isolations"] = model.isolations(r.best_x);
    j["evaluations"] = r.evaluations;
    j["swarm_iterations"] = r.swarm_iterations;
    write_text(join_path(c.output, "coding.json"), j.dump(2) + "\n");
    std::printf("fitness %.6g, %zu evaluations -> %s\n", r.best_fitness, r.evaluations, c.output.c_str());
    return 0;
}

int cmd_pattern(const Common& cm, const std::string& coding_path, const std::vector<int>& ks) {
    const RunConfig c = load(cm);
    const std::string path = !coding_path.empty() ? coding_path : c.coding_path;
    require(!path.empty(), "coding", "no coding file given (--coding or [run] coding)");
    const StcCoding coding = read_coding(path);
    const RisGeometry g = configured_geometry(c);
    require(coding.M == g.M && coding.N == g.N && coding.L == g.L, "coding", "dimensions do not match the geometry");
    int lo = ks.front(), hi = ks.front();
    for (int k : ks) lo = std::min(lo, k), hi = std::max(hi, k);
    HarmonicPattern p = near_field_pattern(coding, g, c.grid, lo, hi);
    ensure_dir(c.output);
    for (int k : ks) {
        HarmonicPattern one;
        one.kmin = one.kmax = k;
        one.grid = p.grid;
        one.fc = p.fc;
        one.f0 = p.f0;
        one.data.push_back(p.at(k));
        write_pattern_csv(c.output, one);
    }
    std::printf("%zu patterns (%d x %d) -> %s\n", ks.size(), c.grid.nx, c.grid.ny, c.output.c_str());
    return 0;
}

int cmd_simulate(const Common& cm, const std::string& coding_path, bool csv) {
    RunConfig c = load(cm);
    if (!coding_path.empty()) c.coding_path = coding_path;
    const RisGeometry g = configured_geometry(c);
    const Scene scene = scene_with_noise(c, g, c.scene);
    const StcCoding coding = !c.coding_path.empty()
                                 ? read_coding(c.coding_path)
                                 : synthesize_coding(g, c.grid, reference_task(c, scene), c.monitor_bpso).best;
    const EchoSet echo = simulate_monitor(c, g, scene, coding, c.sim.t_offset, c.sim.stream_index);
    ensure_dir(c.output);
    write_echo_raw(join_path(c.output, "echo.iq"), echo, 0);
    if (csv) write_echo_csv(join_path(c.output, "echo.csv"), echo.streams[0], echo.fs, echo.t_start);
    write_text(join_path(c.output, "scene.txt"), format_scene(scene));
    std::printf("%zu samples at %g Hz, noise %.2f dB -> %s\n", echo.streams[0].size(), echo.fs, scene.noise_db,
                c.output.c_str());
    return 0;
}

int cmd_detect(const Common& cm) {
    const RunConfig c = load(cm);
    const RisGeometry g = configured_geometry(c);
    const Scene scene = scene_with_noise(c, g, c.scene);
    const auto codings = scan_codings(c, g);
    const auto baseline = prescan_baseline(c, g, scene, codings);
    const ScanResult s = run_scan(c, g, scene, codings, baseline);
    const std::size_t D = c.scan.directions.size();
    const auto up = update_assignments(AssignmentState::initial(D), s.observations, D * c.scan.dwell, c.detection);
    ensure_dir(c.output);
    write_baseline_csv(join_path(c.output, "baseline.csv"), baseline);
    write_detection_log(join_path(c.output, "detections.jsonl"), up.events);
    std::ostringstream os;
    os.precision(17);
    os << "direction,x_m,intensity,baseline,excess,intensity_pass,respiration_pass,nms_keep,prominence_db,status,"
          "harmonic\n";
    for (std::size_t d = 0; d < D; ++d) {
        const auto& st = up.state.dirs[d];
        os << d << ',' << c.scan.directions[d] << ',' << s.intensity[d] << ',' << s.baseline[d] << ',' << s.excess[d]
           << ',' << int(s.intensity_pass[d]) << ',' << int(s.respiration_pass[d]) << ',' << int(s.kept[d]) << ','
           << s.prominence_db[d] << ','
           << (st.status == DirStatus::Assigned ? "assigned" : st.status == DirStatus::Candidate ? "candidate" : "empty")
           << ',' << (st.status == DirStatus::Assigned ? st.harmonic : 0) << '\n';
    }
    write_text(join_path(c.output, "detect.csv"), os.str());
    int n = 0;
    for (std::size_t d : up.state.assigned_directions()) {
        std::printf("direction %zu (x = %g m): k = %+d\n", d, c.scan.directions[d], up.state.dirs[d].harmonic);
        ++n;
    }
    std::printf("%d assigned -> %s\n", n, c.output.c_str());
    return 0;
}

int cmd_run(const Common& cm, const std::string& from, bool no_echo) {
    const RunConfig c = load(cm);
    PipelineOptions o;
    o.from = from;
    o.echo_artifact = !no_echo;
    const Report r = run_pipeline(c, o);
    for (const auto& p : r.persons) {
        std::printf("x = %+.2f m  k = %+d  RR %.2f RPM%s  HR %.2f BPM%s", p.x, p.harmonic, p.estimate.rr,
                    p.estimate.rr_valid ? "" : " (invalid)", p.estimate.hr, p.estimate.hr_valid ? "" : " (invalid)");
        if (p.has_truth) std::printf("  |err| %.3f / %.3f", p.rr_error, p.hr_error);
        std::printf("\n");
    }
    std::printf("detections %d, false alarms %d, intensity-only %d, %.1f s -> %s\n", r.detections, r.false_alarms,
                r.intensity_only, r.runtime_s, c.output.c_str());
    if (!r.failed_stage.empty()) {
        std::fprintf(stderr, "stage %s failed: %s\n", r.failed_stage.c_str(), r.error.c_str());
        return 3;
    }
    return 0;
}

int cmd_bench(const Common& cm, const std::string& parameter, const std::vector<double>& values, int seeds) {
    RunConfig c = load(cm);
    if (!parameter.empty()) c.sweep.parameter = parameter;
    if (!values.empty()) c.sweep.values = values;
    if (seeds > 0) c.sweep.seeds = seeds;
    require(!c.sweep.parameter.empty(), "sweep.parameter", "no sweep parameter given");
    c.validate();
    ensure_dir(c.output);
    const auto rows = run_bench(c, c.output);
    const std::string path = join_path(c.output, "bench_" + c.sweep.parameter + ".csv");
    write_text(path, bench_csv(rows));
    int failed = 0;
    for (const auto& r : rows) failed += !r.r.error.empty();
    std::printf("%zu points -> %s\n", rows.size(), path.c_str());
    if (failed) {
        std::fprintf(stderr, "%d points failed\n", failed);
        return 3;
    }
    return 0;
}

struct VmdArgs {
    std::string input, output = "vmd_out";
    double fs = 0.0;
    VmdConfig cfg;
    std::string init = "grouped", alpha_sign = "printed", complement = "consistent";
    bool no_masks = false;
    double window = 0.0;
};

int cmd_vmd(VmdArgs& a) {
    VmdConfig cfg = a.cfg;
    cfg.init = parse_init_strategy(a.init);
    cfg.alpha_sign = parse_alpha_sign(a.alpha_sign);
    cfg.complement = parse_complement(a.complement);
    cfg.masks = !a.no_masks;
    cfg.validate();
    double fs_file = 0.0;
    const auto s = read_series_csv(a.input, &fs_file);
    const double fs = a.fs > 0.0 ? a.fs : fs_file;
    require(fs > 0.0, "fs", "sample rate not given and not inferable from the time column");
    const VmdResult v = improved_vmd(s, fs, cfg);
    const double dur = static_cast<double>(s.size()) / fs;
    const double t0 = a.window > 0.0 ? std::max(0.0, dur - a.window) : 0.0;
    const VitalEstimate e = estimate_vitals(v.s_r, v.s_h, fs, cfg, t0, dur);
    ensure_dir(a.output);
    for (std::size_t i = 0; i < v.imfs.modes.size(); ++i)
        write_series_csv(join_path(a.output, "imf_" + std::to_string(i) + ".csv"), v.imfs.modes[i], fs, "imf");
    write_series_csv(join_path(a.output, "s_r.csv"), v.s_r, fs, "s_r");
    write_series_csv(join_path(a.output, "s_h.csv"), v.s_h, fs, "s_h");
    ordered_json j;
    j["iterations"] = v.imfs.iterations;
    j["converged"] = v.imfs.converged;
    j["w_i"] = v.imfs.w;
    j["rr_rpm"] = e.rr;
    j["hr_bpm"] = e.hr;
    j["rr_valid"] = e.rr_valid;
    j["hr_valid"] = e.hr_valid;
    write_text(join_path(a.output, "vmd.json"), j.dump(2) + "\n");
    std::printf("%d iterations%s, RR %.2f RPM, HR %.2f BPM -> %s\n", v.imfs.iterations,
                v.imfs.converged ? "" : " (not converged)", e.rr, e.hr, a.output.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS space-time-coding multi-person vital-sign sensing"};
    app.require_subcommand(1);

    Common syn, pat, sim, det, run, ben;
    auto* s_syn = app.add_subcommand("synthesize-coding", "optimize a coding for the [task] beams");
    add_common(s_syn, syn);

    auto* s_pat = app.add_subcommand("pattern", "near-field pattern per harmonic");
    add_common(s_pat, pat);
    std::string pat_coding;
    std::vector<int> pat_ks{-3, -1, 0, 1, 3};
    s_pat->add_option("--coding", pat_coding, "coding file")->check(CLI::ExistingFile);
    s_pat->add_option("-k,--harmonics", pat_ks, "harmonic orders")->delimiter(',');

    auto* s_sim = app.add_subcommand("simulate", "simulate the monitoring record");
    add_common(s_sim, sim);
    bool sim_csv = false;
    std::string sim_coding;
    s_sim->add_flag("--csv", sim_csv, "also write echo.csv");
    s_sim->add_option("--coding", sim_coding, "coding file (overrides [run] coding)")->check(CLI::ExistingFile);

    auto* s_det = app.add_subcommand("detect", "prescan, scan and harmonic assignment");
    add_common(s_det, det);

    auto* s_run = app.add_subcommand("run", "full pipeline");
    add_common(s_run, run);
    std::string from = "prescan";
    bool no_echo = false;
    s_run->add_option("--from", from, "resume from this stage's artifacts")
        ->check(CLI::IsMember(pipeline_stages()));
    s_run->add_flag("--no-echo", no_echo, "skip the raw monitoring IQ artifact");

    auto* s_ben = app.add_subcommand("bench", "parameter sweep");
    add_common(s_ben, ben);
    std::string b_param;
    std::vector<double> b_values;
    int b_seeds = 0;
    s_ben->add_option("--parameter", b_param, "i_total | alpha | zeta | mu | distance | passerby | snr")
        ->check(CLI::IsMember(sweep_parameters()));
    s_ben->add_option("--values", b_values, "comma-separated values")->delimiter(',');
    s_ben->add_option("--seeds", b_seeds, "seeds per value");

    auto* s_vmd = app.add_subcommand("vmd", "improved VMD of a t,value series");
    VmdArgs va;
    s_vmd->add_option("-i,--input", va.input, "CSV with header t_s,<value>")->required()->check(CLI::ExistingFile);
    s_vmd->add_option("-o,--output", va.output, "output directory");
    s_vmd->add_option("--fs", va.fs, "sample rate, Hz (default: from the time column)");
    s_vmd->add_option("--I_total", va.cfg.I_total);
    s_vmd->add_option("--M_resp", va.cfg.M_resp);
    s_vmd->add_option("--alpha_int", va.cfg.alpha_int);
    s_vmd->add_option("--zeta", va.cfg.zeta);
    s_vmd->add_option("--w_r_resp", va.cfg.w_r_resp);
    s_vmd->add_option("--w_r_heart", va.cfg.w_r_heart);
    s_vmd->add_option("--lowpass_hz", va.cfg.lowpass_hz);
    s_vmd->add_option("--band_lo", va.cfg.band_lo);
    s_vmd->add_option("--band_hi", va.cfg.band_hi);
    s_vmd->add_option("--epsilon", va.cfg.epsilon);
    s_vmd->add_option("--tol_abs", va.cfg.tol_abs);
    s_vmd->add_option("--tol_rel", va.cfg.tol_rel);
    s_vmd->add_option("--iter_max", va.cfg.iter_max);
    s_vmd->add_option("--mask_rolloff_hz", va.cfg.mask_rolloff_hz);
    s_vmd->add_option("--init", va.init, "grouped | uniform");
    s_vmd->add_option("--alpha_sign", va.alpha_sign, "printed | inverse");
    s_vmd->add_option("--complement", va.complement, "consistent | literal");
    s_vmd->add_flag("--no_masks", va.no_masks, "identity masks");
    s_vmd->add_option("--window", va.window, "rate window over the last seconds (0 = whole series)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*s_syn) return cmd_synthesize(syn);
        if (*s_pat) return cmd_pattern(pat, pat_coding, pat_ks);
        if (*s_sim) return cmd_simulate(sim, sim_coding, sim_csv);
        if (*s_det) return cmd_detect(det);
        if (*s_run) return cmd_run(run, from, no_echo);
        if (*s_ben) return cmd_bench(ben, b_param, b_values, b_seeds);
        if (*s_vmd) return cmd_vmd(va);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
