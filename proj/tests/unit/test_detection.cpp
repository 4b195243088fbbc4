#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "stcsense/detection.hpp"
#include "stcsense/error.hpp"
#include "stcsense/rng.hpp"

using namespace stcsense;

namespace {

std::vector<cd> tone(double f, double amp, double fs, std::size_t n, double phase = 0.0) {
    std::vector<cd> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::polar(amp, 2.0 * kPi * f * static_cast<double>(i) / fs + phase);
    return x;
}

double power(const std::vector<cd>& x, std::size_t skip) {
    double s = 0.0;
    for (std::size_t i = skip; i + skip < x.size(); ++i) s += std::norm(x[i]);
    return s / static_cast<double>(x.size() - 2 * skip);
}

// Motion-rate stream of a breathing scatterer: static offset + arc, plus complex noise.
std::vector<cd> breathing_stream(double fs, double dur, double f_r, double arc, double snr_db, std::uint64_t seed,
                                 double noise_scale = 1.0) {
    Rng r(seed);
    const std::size_t n = static_cast<std::size_t>(fs * dur);
    const double np = std::pow(10.0, -snr_db / 10.0) * noise_scale;
    std::vector<cd> x(n);
    const double ph0 = r.uniform(0.0, 2.0 * kPi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        x[i] = cd(2.0, -1.0) + std::polar(1.0, ph0 + arc * std::sin(2.0 * kPi * f_r * t)) + r.cnormal(np);
    }
    return x;
}

std::vector<cd> noise_stream(double fs, double dur, std::uint64_t seed) {
    Rng r(seed);
    std::vector<cd> x(static_cast<std::size_t>(fs * dur));
    for (auto& v : x) v = r.cnormal(1e-3);
    return x;
}

// Least-squares line removed, as the extractor does.
std::vector<double> detrended(std::vector<double> x) {
    const double n = static_cast<double>(x.size());
    double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i);
        st += t, sx += x[i], stt += t * t, stx += t * x[i];
    }
    const double b = (n * stx - st * sx) / (n * stt - st * st), a = (sx - b * st) / n;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= a + b * static_cast<double>(i);
    return x;
}

std::string tmp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "stcsense_unit";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("detection config validation") {
    DetectionConfig c;
    CHECK_NOTHROW(c.validate());
    c.mu = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DetectionConfig{};
    c.band_lo = 0.8;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DetectionConfig{};
    c.window = 15.0;  // < 2 / 0.1
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DetectionConfig{};
    c.vital_taps = 80;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(DetectionConfig{}.half_bandwidth(100.0) == 25.0);
    CHECK(DetectionConfig{}.threshold(2.0) == doctest::Approx(0.1));
}

TEST_CASE("demux_harmonics") {
    const double fs = 2500.0, f0 = 100.0;
    const std::size_t n = 5000;
    SUBCASE("tone at +f0") {
        const auto y = demux_harmonics(tone(f0, 1.0, fs, n, 0.3), fs, f0, {1, -1}, 25.0, 301);
        double lo = 1e300, hi = 0.0;
        for (std::size_t i = 300; i + 300 < n; ++i) {
            lo = std::min(lo, std::abs(y[0][i]));
            hi = std::max(hi, std::abs(y[0][i]));
            CHECK(std::abs(std::arg(y[0][i]) - 0.3) < 1e-6);  // DC-centred
        }
        CHECK(hi - lo < 1e-6);
        CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(10.0 * std::log10(power(y[1], 300) / power(y[0], 300)) < -60.0);
    }
    SUBCASE("two tones keep their power ratio") {
        auto x = tone(f0, 1.0, fs, n);
        const auto b = tone(-f0, 0.5, fs, n);
        for (std::size_t i = 0; i < n; ++i) x[i] += b[i];
        const auto y = demux_harmonics(x, fs, f0, {1, -1}, 25.0, 301);
        CHECK(std::abs(10.0 * std::log10(power(y[0], 300) / power(y[1], 300)) - 10.0 * std::log10(4.0)) < 0.2);
    }
    SUBCASE("outputs are time aligned with the input") {
        std::vector<cd> x(n, 0.0);
        for (std::size_t i = 2000; i < n; ++i) x[i] = std::polar(1.0, 2.0 * kPi * f0 * static_cast<double>(i) / fs);
        const auto y = demux_harmonics(x, fs, f0, {1}, 25.0, 301);
        CHECK(std::abs(y[0][2000]) == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(demux_harmonics(tone(f0, 1.0, fs, n), fs, f0, {1}, 60.0, 301), ConfigError);
        CHECK_THROWS_AS(demux_harmonics(tone(f0, 1.0, fs, n), fs, f0, {20}, 25.0, 301), ConfigError);
    }
}

TEST_CASE("lowpass_taps and decimate") {
    const auto h = lowpass_taps(25.0, 2500.0, 301);
    double s = 0.0;
    for (double v : h) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(h[h.size() - 1 - i]));
    CHECK_THROWS_AS(lowpass_taps(25.0, 2500.0, 300), DomainError);

    std::vector<cd> x = {1, 2, 3, 4, 5, 6, 7};
    const auto d = decimate(x, 3);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == cd(2.0));
    CHECK(d[1] == cd(5.0));
    CHECK_THROWS_AS(decimate(x, 0), DomainError);
}

TEST_CASE("vital_band") {
    const double fs = 20.0;
    const std::vector<cd> c(400, cd(1.5, -0.5));
    for (const auto& v : vital_band(c, fs, 3.5, 81)) CHECK(std::abs(v - cd(1.5, -0.5)) < 1e-12);
    const auto slow = tone(0.3, 1.0, fs, 400), fast = tone(6.0, 1.0, fs, 400);
    CHECK(power(vital_band(slow, fs, 3.5, 81), 50) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(power(vital_band(fast, fs, 3.5, 81), 50) < 1e-6);
}

TEST_CASE("measure_intensity and intensity_indicator") {
    CHECK(measure_intensity(std::vector<cd>(10, 0.0)) == 0.0);
    CHECK(measure_intensity(tone(3.0, 1.0, 100.0, 64)) == doctest::Approx(1.0));
    const auto x = noise_stream(20.0, 10.0, 3);
    auto y = x;
    const cd c(2.5, -1.0);
    for (auto& v : y) v *= c;
    const double I = measure_intensity(x), Iy = measure_intensity(y);
    CHECK(Iy == doctest::Approx(std::norm(c) * I).epsilon(1e-13));
    CHECK_THROWS_AS(measure_intensity({}), DomainError);

    CHECK_FALSE(intensity_indicator(1.0, 1.0, 0.05));
    CHECK(intensity_indicator(1.1, 1.0, 0.05));
    CHECK_FALSE(intensity_indicator(1.5, 1.0, 0.5));  // strict at the boundary
    const double base = 0.7 * I, mu = 0.2 * I;
    CHECK(intensity_indicator(I, base, mu) == intensity_indicator(Iy, std::norm(c) * base, std::norm(c) * mu));
}

TEST_CASE("extract_motion_signal") {
    const double fs = 20.0;
    const std::size_t n = 1200;
    std::vector<cd> x(n);
    std::vector<double> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        truth[i] = 0.1 * std::sin(2.0 * kPi * 0.25 * t);
        x[i] = std::polar(1.0, truth[i]) + 5.0;
    }
    SUBCASE("static offset removed") {
        const auto m = extract_motion_signal(x);
        const auto ref = detrended(truth);
        double dev = 0.0, raw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dev = std::max(dev, std::abs(m[i] - ref[i]));
            raw = std::max(raw, std::abs(m[i] - truth[i]));
        }
        CHECK(dev < 1e-6);
        CHECK(raw < 0.01);
    }
    SUBCASE("constant stream gives zeros") {
        for (double v : extract_motion_signal(std::vector<cd>(100, cd(3.0, 1.0)))) CHECK(v == 0.0);
    }
    SUBCASE("conjugate input negates the output") {
        auto xc = x;
        for (auto& v : xc) v = std::conj(v);
        const auto a = extract_motion_signal(x), b = extract_motion_signal(xc);
        for (std::size_t i = 0; i < n; ++i) CHECK(b[i] == doctest::Approx(-a[i]).epsilon(1e-9).scale(1.0));
    }
    SUBCASE("arcs across the branch cut unwrap") {
        std::vector<cd> y(n);
        std::vector<double> ph(n);
        for (std::size_t i = 0; i < n; ++i) {
            ph[i] = kPi + 4.0 * std::sin(2.0 * kPi * 0.25 * static_cast<double>(i) / fs);
            y[i] = cd(0.4, 0.2) + std::polar(1.0, ph[i]);
        }
        const auto m = extract_motion_signal(y);
        const auto ref = detrended(ph);
        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(m[i] - ref[i]));
        CHECK(dev < 1e-6);
    }
    SUBCASE("a short transient is cut and bridged") {
        auto y = x;
        for (std::size_t i = 600; i < 640; ++i) y[i] += std::polar(3.0, 0.3 * static_cast<double>(i));
        const auto m = extract_motion_signal(y);
        double out = 0.0, in = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(m[i] - truth[i]);
            (i + 20 < 600 || i >= 660 ? out : in) = std::max(i + 20 < 600 || i >= 660 ? out : in, d);
        }
        CHECK(out < 0.02);
        CHECK(in < 0.2);  // linear bridge across a 0.1 rad sinusoid
    }
    CHECK_THROWS_AS(extract_motion_signal({}), DomainError);
}

TEST_CASE("respiration test") {
    const double fs = 20.0;
    DetectionConfig cfg;
    SUBCASE("breathing scatterer passes") {
        const auto r = respiration_test(breathing_stream(fs, 30.0, 0.25, 0.5, 10.0, 1), fs, cfg);
        CHECK(r.pass);
        CHECK(r.peak_freq == doctest::Approx(0.25).epsilon(0.1));
        CHECK(r.prominence_db > 6.0);
    }
    SUBCASE("static reflector fails") {
        Rng rn(5);
        std::vector<cd> x(600);
        for (auto& v : x) v = cd(3.0, 1.0) + rn.cnormal(1e-4);
        CHECK_FALSE(respiration_indicator(x, fs, cfg));
    }
    SUBCASE("pure noise fails in at least 99 of 100 seeds") {
        auto six = cfg;
        six.prominence_db = 6.0;
        int passes = 0, passes_six = 0;
        for (std::uint64_t s = 0; s < 100; ++s) {
            const auto x = noise_stream(fs, 20.0, 100 + s);
            passes += respiration_indicator(x, fs, cfg);
            passes_six += respiration_indicator(x, fs, six);
        }
        CHECK(passes <= 1);
        CHECK(passes_six <= 1);
    }
    SUBCASE("stream shorter than the window") {
        CHECK_THROWS_AS(respiration_test(noise_stream(fs, 10.0, 1), fs, cfg), DomainError);
    }
}

TEST_CASE("non_max_keep") {
    const std::vector<double> e = {0.1, 1.0, 0.5, 0.0, 0.3, 0.2};
    CHECK(non_max_keep(e, 1, 1.0) == std::vector<bool>{false, true, false, false, true, false});
    CHECK(non_max_keep(e, 0, 1.0) == std::vector<bool>(6, true));
    CHECK(non_max_keep(e, 1, 10.0) == std::vector<bool>{true, true, true, false, true, true});
}

TEST_CASE("assignment state machine") {
    DetectionConfig cfg;
    const auto s0 = AssignmentState::initial(6);
    CHECK(s0.pool == std::vector<int>{-1, 1, -3, 3});
    auto obs = [](std::initializer_list<int> code) {
        // 0 nothing, 1 intensity only, 2 both
        std::vector<ScanObservation> v;
        for (int c : code) v.push_back({true, c >= 1, c == 2});
        return v;
    };

    SUBCASE("one passing direction gets the lowest |k|") {
        const auto u = update_assignments(s0, obs({0, 0, 2, 0, 0, 0}), 0.0, cfg);
        CHECK(u.state.dirs[2].status == DirStatus::Assigned);
        CHECK(u.state.dirs[2].harmonic == -1);
        CHECK(u.state.pool == std::vector<int>{1, -3, 3});
        REQUIRE(u.events.size() == 2);
        CHECK(u.events[0].event == "candidate");
        CHECK(u.events[1].event == "assigned");
    }
    SUBCASE("intensity only stays a candidate") {
        const auto u = update_assignments(s0, obs({1, 0, 0, 0, 0, 0}), 0.0, cfg);
        CHECK(u.state.dirs[0].status == DirStatus::Candidate);
        const auto v = update_assignments(u.state, obs({0, 0, 0, 0, 0, 0}), 20.0, cfg);
        CHECK(v.state.dirs[0].status == DirStatus::Empty);
    }
    SUBCASE("pool exhaustion raises a capacity event") {
        const auto u = update_assignments(s0, obs({2, 2, 2, 2, 2, 0}), 0.0, cfg);
        CHECK(u.state.pool.empty());
        CHECK(u.state.dirs[4].status == DirStatus::Candidate);
        CHECK(u.events.back().event == "capacity");
        CHECK(u.events.back().direction == 4);
        std::vector<int> ks;
        for (int d : u.state.assigned_directions()) ks.push_back(u.state.dirs[static_cast<std::size_t>(d)].harmonic);
        CHECK(ks == std::vector<int>{-1, 1, -3, 3});
    }
    SUBCASE("a departed person is released after the loss timeout") {
        auto s = update_assignments(s0, obs({0, 2, 0, 0, 0, 0}), 0.0, cfg).state;
        s = update_assignments(s, obs({0, 1, 0, 0, 0, 0}), 5.0, cfg).state;
        s = update_assignments(s, obs({0, 0, 0, 0, 0, 0}), 10.0, cfg).state;
        CHECK(s.dirs[1].status == DirStatus::Assigned);
        const auto u = update_assignments(s, obs({0, 0, 0, 0, 0, 0}), 15.0, cfg);
        CHECK(u.state.dirs[1].status == DirStatus::Empty);
        CHECK(u.state.pool == s0.pool);
        REQUIRE(u.events.size() == 1);
        CHECK(u.events[0].event == "released");
        CHECK(u.events[0].harmonic == -1);
    }
    SUBCASE("replay reproduces the trajectory") {
        Rng r(12);
        std::vector<std::vector<ScanObservation>> log;
        for (int step = 0; step < 40; ++step) {
            std::vector<ScanObservation> v(6);
            for (auto& o : v) {
                o.intensity = r.uniform() < 0.4;
                o.respiration = o.intensity && r.uniform() < 0.5;
            }
            log.push_back(v);
        }
        auto run = [&] {
            std::vector<AssignmentState> traj;
            auto s = s0;
            for (std::size_t i = 0; i < log.size(); ++i) {
                s = update_assignments(s, log[i], 5.0 * static_cast<double>(i), cfg).state;
                CHECK_NOTHROW(s.check_invariants());
                traj.push_back(s);
            }
            return traj;
        };
        CHECK(run() == run());
    }
    SUBCASE("invariant violations are detected") {
        auto s = s0;
        s.dirs[0] = {DirStatus::Assigned, 1, 0.0};
        CHECK_THROWS_AS(s.check_invariants(), std::logic_error);
        s.pool = {-1, -3, 3};
        CHECK_NOTHROW(s.check_invariants());
        s.dirs[1] = {DirStatus::Assigned, 1, 0.0};
        CHECK_THROWS_AS(s.check_invariants(), std::logic_error);
    }
    SUBCASE("unscanned free direction is an error") {
        auto v = obs({0, 0, 0, 0, 0, 0});
        v[3].observed = false;
        CHECK_THROWS_AS(update_assignments(s0, v, 0.0, cfg), ConfigError);
    }
}

TEST_CASE("detection log and baseline files") {
    const std::vector<DetectionEvent> ev = {{0.0, 2, "candidate", std::nullopt}, {20.0, 2, "assigned", -1},
                                            {90.0, 2, "released", -1}};
    const auto path = tmp_path("detections.jsonl");
    write_detection_log(path, ev);
    const auto back = read_detection_log(path);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].t == ev[i].t);
        CHECK(back[i].direction == ev[i].direction);
        CHECK(back[i].event == ev[i].event);
        CHECK(back[i].harmonic == ev[i].harmonic);
    }
    CHECK(event_json(ev[0]) == R"({"direction":2,"event":"candidate","harmonic":null,"t":0.0})");

    const std::vector<double> base = {1.25e-7, 3.0e-9, 0.1};
    const auto bp = tmp_path("baseline.csv");
    write_baseline_csv(bp, base);
    CHECK(read_baseline_csv(bp) == base);
}
