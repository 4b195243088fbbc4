#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "stcsense/bpso.hpp"
#include "stcsense/detection.hpp"
#include "stcsense/error.hpp"
#include "stcsense/scene.hpp"

using namespace stcsense;

namespace {

struct Rig {
    RisGeometry g = make_geometry(8, 8, 0.0428, 0.0428, 3.5e9, 100.0, 8);
    FieldGrid grid;
    Rig() {
        set_spherical_illumination(g, {0, 0, 0.6}, 2.0);
        grid.nx = 21;
        grid.ny = 9;
    }
    StcCoding focus(int k, const Vec3& p) const {
        BeamTask t;
        t.items = {{k, p, 1.0}};
        BpsoConfig c;
        c.swarm = 10;
        c.iterations = 40;
        c.polish_passes = 2;
        return bpso_optimize(t, g, grid, c).best;
    }
};

double mean_power(const std::vector<cd>& x, std::size_t skip = 0) {
    double s = 0.0;
    for (std::size_t i = skip; i + skip < x.size(); ++i) s += std::norm(x[i]);
    return s / static_cast<double>(x.size() - 2 * skip);
}

std::string tmp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "stcsense_unit";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("chest_displacement") {
    Person p;
    CHECK(chest_displacement(p, 0.0) == 0.0);
    p.A_h = 0.0;
    CHECK(chest_displacement(p, 1.0 / (4.0 * p.f_r)) == doctest::Approx(p.A_r));
    Person q;
    q.breath_holds = {{10.0, 25.0}};
    CHECK(q.holding(12.0));
    CHECK_FALSE(q.holding(26.0));
    const double t = 17.3;
    CHECK(chest_displacement(q, t) == doctest::Approx(q.A_h * std::sin(2.0 * kPi * q.f_h * t)));
}

TEST_CASE("person and scene validation") {
    Person p;
    CHECK_NOTHROW(p.validate());
    p.f_r = 0.05;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = Person{};
    p.f_h = 3.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = Person{};
    p.A_h = p.A_r;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = Person{};
    p.reflectivity = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);

    Scene s;
    s.persons = {Person{}, Person{}};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.persons[1].position = {0.5, 0, 1};
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("empty scene, constant coding, no noise: a pure DC tone") {
    const auto g = default_geometry();
    Scene s;
    SimConfig cfg;
    cfg.duration = 2.0;
    const auto e = simulate_received(s, constant_coding(g.M, g.N, g.L), g, default_grid(), cfg);
    REQUIRE(e.streams.size() == 1);
    const auto& x = e.streams[0];
    CHECK(x.size() == static_cast<std::size_t>(cfg.fs * cfg.duration));
    const cd dc = std::accumulate(x.begin(), x.end(), cd(0.0)) / static_cast<double>(x.size());
    CHECK(std::abs(dc) > 0.0);
    double dev = 0.0;
    for (const auto& v : x) dev = std::max(dev, std::abs(v - dc));
    CHECK(dev < 1e-6 * std::abs(dc));  // < -120 dBc at every offset
}

TEST_CASE("static reflector only, no noise: constant magnitude per harmonic") {
    Rig r;
    Scene s;
    s.reflectors.push_back({{0.3, 0.0, 1.0}, {0.7, 0.2}});
    SimConfig cfg;
    cfg.duration = 4.0;
    const auto c = r.focus(1, {0.3, 0, 1});
    const auto e = simulate_received(s, c, r.g, r.grid, cfg);
    const auto y = demux_harmonics(e.streams[0], e.fs, e.f0, {1}, 25.0, 301);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 400; i + 400 < y[0].size(); ++i) {
        lo = std::min(lo, std::abs(y[0][i]));
        hi = std::max(hi, std::abs(y[0][i]));
    }
    CHECK(hi > 0.0);
    CHECK((hi - lo) / hi < 1e-6);
}

TEST_CASE("phase model of an on-focus person") {
    Rig r;
    Scene s;
    Person p;
    p.position = {0.5, 0.0, 1.0};
    p.A_h = 0.0;
    p.f_r = 0.25;
    s.persons.push_back(p);
    s.leakage_db = -400.0;
    SimConfig cfg;
    cfg.duration = 8.0;
    const auto e = simulate_received(s, r.focus(1, p.position), r.g, r.grid, cfg);
    const auto y = demux_harmonics(e.streams[0], e.fs, e.f0, {1}, 25.0, 301);
    const auto z = decimate(y[0], 125);
    std::vector<double> ph;
    for (std::size_t i = 2; i + 2 < z.size(); ++i) ph.push_back(std::arg(z[i] * std::conj(z[2])));
    const auto [mn, mx] = std::minmax_element(ph.begin(), ph.end());
    const double expect = 8.0 * kPi * p.A_r / r.g.lambda();
    CHECK((*mx - *mn) == doctest::Approx(expect).epsilon(0.02));

    // motion extraction through the static leakage matches the detrended analytic phase
    s.leakage_db = -20.0;
    const auto e2 = simulate_received(s, r.focus(1, p.position), r.g, r.grid, cfg);
    const auto y2 = demux_harmonics(e2.streams[0], e2.fs, e2.f0, {1}, 25.0, 301);
    const auto z2 = decimate(y2[0], 125);
    const auto m = extract_motion_signal(z2);
    std::vector<double> truth(z2.size());
    double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
    const double n = static_cast<double>(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double t = (static_cast<double>(i) + 0.5) * 125.0 / cfg.fs;
        truth[i] = 4.0 * kPi * chest_displacement(p, t) / r.g.lambda();
        const double ti = static_cast<double>(i);
        st += ti, sx += truth[i], stt += ti * ti, stx += ti * truth[i];
    }
    const double slope = (n * stx - st * sx) / (n * stt - st * st), icpt = (sx - slope * st) / n;
    double dev = 0.0;
    for (std::size_t i = 4; i + 4 < truth.size(); ++i)
        dev = std::max(dev, std::abs(m[i] - (truth[i] - icpt - slope * static_cast<double>(i))));
    CHECK(dev < 0.02 * expect);
}

TEST_CASE("determinism and linearity in reflectivity") {
    Rig r;
    const auto c = r.focus(-1, {-0.5, 0, 1});
    Scene s;
    Person p;
    p.position = {-0.5, 0.0, 1.0};
    s.persons.push_back(p);
    s.reflectors.push_back({{1.0, 0.2, 1.0}, {0.5, 0.0}});
    s.noise_db = -60.0;
    s.seed = 42;
    SimConfig cfg;
    cfg.duration = 2.0;
    const auto a = simulate_received(s, c, r.g, r.grid, cfg);
    const auto b = simulate_received(s, c, r.g, r.grid, cfg);
    CHECK(a.streams == b.streams);
    s.seed = 43;
    CHECK_FALSE(simulate_received(s, c, r.g, r.grid, cfg).streams == a.streams);

    s.noise_db = -std::numeric_limits<double>::infinity();
    const auto base = simulate_received(s, c, r.g, r.grid, cfg).streams[0];
    Scene none = s;
    none.persons.clear();
    const auto without = simulate_received(none, c, r.g, r.grid, cfg).streams[0];
    Scene twice = s;
    twice.persons[0].reflectivity *= 2.0;
    const auto doubled = simulate_received(twice, c, r.g, r.grid, cfg).streams[0];
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const cd one = base[i] - without[i], two = doubled[i] - without[i];
        err = std::max(err, std::abs(two - 2.0 * one));
        ref = std::max(ref, std::abs(one));
    }
    CHECK(ref > 0.0);
    CHECK(err < 1e-12 * ref);
}

TEST_CASE("noise calibration") {
    Rig r;
    Scene s;
    s.noise_db = -30.0;
    s.leakage_db = -400.0;
    SimConfig cfg;
    cfg.duration = 60.0;  // 1.5e5 samples
    const auto e = simulate_received(s, constant_coding(8, 8, 8), r.g, r.grid, cfg);
    CHECK(10.0 * std::log10(mean_power(e.streams[0])) == doctest::Approx(-30.0).epsilon(0.5 / 30.0));

    // demuxed power = noise density x filter bandwidth, +-1 dB
    const double halfbw = 25.0;
    const auto y = demux_harmonics(e.streams[0], e.fs, e.f0, {-1, 0, 1}, halfbw, 301);
    for (const auto& v : y) {
        const double expect = s.noise_power() * 2.0 * halfbw / e.fs;
        CHECK(std::abs(10.0 * std::log10(mean_power(v, 200) / expect)) < 1.0);
    }
}

TEST_CASE("noise_db_for_snr") {
    const double nd = noise_db_for_snr(1e-4, 10.0, 2500.0, 25.0);
    const double in_band = std::pow(10.0, nd / 10.0) * 50.0 / 2500.0;
    CHECK(10.0 * std::log10(1e-4 / in_band) == doctest::Approx(10.0));
}

TEST_CASE("scan_sequence") {
    Rig r;
    Scene s;
    CHECK_THROWS_AS(scan_sequence(s, {}, r.g, r.grid, 1.0, 2500.0), ConfigError);

    const std::vector<double> xs = {-1.5, -0.75, 0.0, 0.75, 1.5};
    std::vector<StcCoding> codings;
    for (double x : xs) codings.push_back(r.focus(1, {x, 0, 1}));

    SUBCASE("identical codings, empty scene: equal-power noise streams") {
        s.noise_db = -20.0;
        s.leakage_db = -400.0;
        const std::vector<StcCoding> same(4, codings[0]);
        const auto e = scan_sequence(s, same, r.g, r.grid, 20.0, 2500.0);
        REQUIRE(e.streams.size() == 4);
        for (std::size_t d = 0; d < 4; ++d) {
            CHECK(e.direction[d] == static_cast<int>(d));
            CHECK(10.0 * std::log10(mean_power(e.streams[d])) == doctest::Approx(-20.0).epsilon(0.01));
        }
        CHECK_FALSE(e.streams[0] == e.streams[1]);
    }
    SUBCASE("a person in one direction's focus dominates that direction") {
        Person p;
        p.position = {xs[3], 0, 1};
        s.persons.push_back(p);
        s.leakage_db = -400.0;
        const auto e = scan_sequence(s, codings, r.g, r.grid, 5.0, 2500.0);
        std::vector<double> pw;
        for (const auto& x : e.streams) pw.push_back(mean_power(demux_harmonics(x, 2500.0, 100.0, {1}, 25.0)[0], 200));
        CHECK(std::max_element(pw.begin(), pw.end()) - pw.begin() == 3);
    }
}

TEST_CASE("person outside the grid is rejected; the passerby is not") {
    Rig r;
    Scene s;
    Person p;
    p.position = {4.0, 0.0, 1.0};
    s.persons.push_back(p);
    SimConfig cfg;
    cfg.duration = 1.0;
    CHECK_THROWS(simulate_received(s, constant_coding(8, 8, 8), r.g, r.grid, cfg));
    s.persons[0].position = {0.0, 0.0, 1.0};
    s.passerby = crossing_passerby(s.persons[0], cfg.duration);
    CHECK(s.passerby.position(0.5).x == doctest::Approx(0.0));
    CHECK(s.passerby.position(0.0).z == doctest::Approx(0.5));
    CHECK_NOTHROW(simulate_received(s, constant_coding(8, 8, 8), r.g, r.grid, cfg));
}

TEST_CASE("scene text round trip") {
    Scene s;
    Person p;
    p.position = {-0.5, 0.1, 1.0};
    p.f_r = 0.31;
    p.f_h = 1.41;
    p.reflectivity = {0.8, -0.1};
    p.breath_holds = {{20.0, 35.0}};
    s.persons.push_back(p);
    s.reflectors.push_back({{0.5, 0.0, 1.0}, {1.0, 0.5}});
    s.passerby = crossing_passerby(p, 60.0);
    s.noise_db = -71.25;
    s.seed = 9;
    const Scene t = parse_scene(format_scene(s));
    CHECK(format_scene(t) == format_scene(s));
    REQUIRE(t.persons.size() == 1);
    CHECK(t.persons[0].breath_holds == p.breath_holds);
    CHECK(t.persons[0].reflectivity == p.reflectivity);
    CHECK(t.noise_db == s.noise_db);
    CHECK(t.passerby.enabled);
    CHECK_THROWS_AS(parse_scene("[person]\nposition = 0 0 1\ncolour = red\n"), ConfigError);
}

TEST_CASE("echo files round trip") {
    Rig r;
    Scene s;
    s.noise_db = -40.0;
    SimConfig cfg;
    cfg.duration = 0.5;
    cfg.t_offset = 3.0;
    const auto e = simulate_received(s, constant_coding(8, 8, 8), r.g, r.grid, cfg);

    const std::string raw = tmp_path("echo.iq");
    write_echo_raw(raw, e, 0);
    const auto back = read_echo_raw(raw);
    CHECK(back.streams[0] == e.streams[0]);
    CHECK(back.fs == e.fs);
    CHECK(back.f0 == e.f0);
    CHECK(back.t_start == e.t_start);

    const std::string csv = tmp_path("echo.csv");
    write_echo_csv(csv, e.streams[0], e.fs, e.t_start);
    double fs = 0.0;
    const auto x = read_echo_csv(csv, &fs);
    CHECK(fs == doctest::Approx(e.fs).epsilon(1e-9));
    REQUIRE(x.size() == e.streams[0].size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == e.streams[0][i]);
}
