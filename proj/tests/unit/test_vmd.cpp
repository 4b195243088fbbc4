#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "stcsense/error.hpp"
#include "stcsense/rng.hpp"
#include "stcsense/vmd.hpp"

using namespace stcsense;

namespace {

constexpr double kFs = 20.0;

std::vector<double> tones(std::initializer_list<std::pair<double, double>> parts, double seconds = 60.0) {
    std::vector<double> s(static_cast<std::size_t>(seconds * kFs), 0.0);
    for (std::size_t t = 0; t < s.size(); ++t)
        for (const auto& [a, f] : parts) s[t] += a * std::sin(2.0 * kPi * f * t / kFs);
    return s;
}

double power(const std::vector<double>& x) {
    double p = 0.0;
    for (double v : x) p += v * v;
    return p / static_cast<double>(x.size());
}

void add_noise(std::vector<double>& s, double snr_db, std::uint64_t seed) {
    Rng r(seed);
    const double sigma = std::sqrt(power(s) * std::pow(10.0, -snr_db / 10.0));
    for (auto& v : s) v += sigma * r.normal();
}

std::vector<double> desk_signal(std::uint64_t seed) {
    auto s = tones({{1.0, 0.25}, {0.1, 1.35}});
    add_noise(s, 10.0, seed);
    return s;
}

double peak_hz(const std::vector<double>& x, double lo, double hi) {
    return estimate_rate(x, kFs, lo, hi, 0.0).freq_hz;
}

}  // namespace

TEST_CASE("vmd config validation") {
    VmdConfig c;
    CHECK_NOTHROW(c.validate());
    c.M_resp = c.I_total;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(improved_vmd(tones({{1.0, 0.25}}), kFs, c), ConfigError);
    c = VmdConfig{};
    c.lowpass_hz = 0.9;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = VmdConfig{};
    c.zeta = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_alpha_sign("inverse") == AlphaSign::Inverse);
    CHECK(parse_complement(to_string(Complement::Literal)) == Complement::Literal);
    CHECK(parse_init_strategy("uniform") == InitStrategy::Uniform);
    CHECK_THROWS_AS(parse_init_strategy("random"), ConfigError);
}

TEST_CASE("baseline_vmd") {
    SUBCASE("single tone") {
        const auto r = baseline_vmd(tones({{1.0, 0.3}}), kFs, 1, 2000.0, 0.0, 1e-7, 1e-7, 500);
        CHECK(r.w[0] == doctest::Approx(0.3).epsilon(0.02 / 0.3));
    }
    SUBCASE("two tones, either order") {
        const auto r = baseline_vmd(tones({{1.0, 0.3}, {1.0, 1.4}}), kFs, 2, 2000.0, 0.0, 1e-7, 1e-7, 500);
        const double lo = std::min(r.w[0], r.w[1]), hi = std::max(r.w[0], r.w[1]);
        CHECK(std::abs(lo - 0.3) < 0.05);
        CHECK(std::abs(hi - 1.4) < 0.05);
    }
    SUBCASE("zero input is a fixed point") {
        const auto r = baseline_vmd(std::vector<double>(1200, 0.0), kFs, 3, 2000.0, 0.0, 1e-7, 1e-7, 500);
        CHECK(r.converged);
        CHECK(r.iterations <= 2);
        for (const auto& m : r.modes)
            for (double v : m) CHECK(v == 0.0);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(baseline_vmd(std::vector<double>(63, 0.0), kFs, 1, 2000.0, 0.0, 1e-7, 1e-7, 10), DomainError);
        auto s = tones({{1.0, 0.3}});
        s[10] = std::nan("");
        CHECK_THROWS_AS(baseline_vmd(s, kFs, 1, 2000.0, 0.0, 1e-7, 1e-7, 10), DomainError);
        CHECK_THROWS_AS(baseline_vmd(tones({{1.0, 0.3}}), kFs, 2, 2000.0, 0.0, 1e-7, 1e-7, 10, {0.3}), ConfigError);
    }
}

TEST_CASE("adaptive_alpha") {
    VmdConfig c;
    CHECK(adaptive_alpha(c.w_r_resp, true, c) == c.alpha_int);
    CHECK(adaptive_alpha(c.w_r_heart, false, c) == c.alpha_int);
    CHECK(adaptive_alpha(c.w_r_resp + 0.5, true, c) == doctest::Approx(c.alpha_int * std::exp(-1.0)).epsilon(1e-14));
    CHECK(adaptive_alpha(c.w_r_heart - 0.5, false, c) == doctest::Approx(c.alpha_int * std::exp(-1.0)).epsilon(1e-14));
    c.alpha_sign = AlphaSign::Inverse;
    CHECK(adaptive_alpha(c.w_r_resp + 0.5, true, c) == doctest::Approx(c.alpha_int * std::exp(1.0)).epsilon(1e-14));
    c.zeta = 0.0;
    for (double w : {0.0, 0.3, 1.0, 7.5}) CHECK(adaptive_alpha(w, w < 1.0, c) == c.alpha_int);
    CHECK_THROWS_AS(adaptive_alpha(-0.1, true, c), DomainError);
}

TEST_CASE("center_frequency") {
    std::vector<double> f(101);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = 0.1 * static_cast<double>(j);
    SUBCASE("delta") {
        std::vector<cd> s(f.size(), 0.0);
        s[37] = cd(0.3, -2.0);
        CHECK(center_frequency(s, f, 0.0) == f[37]);
    }
    SUBCASE("flat on [0, W]") {
        std::vector<cd> s(f.size(), 0.0);
        for (std::size_t j = 0; j <= 40; ++j) s[j] = 1.0;
        CHECK(center_frequency(s, f, 0.0) == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("brute force on random spectra") {
        Rng r(11);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<cd> s(f.size());
            for (auto& v : s) v = r.cnormal(1.0);
            long double num = 0.0L, den = 0.0L;
            for (std::size_t j = 0; j < s.size(); ++j) {
                const long double p = static_cast<long double>(s[j].real()) * s[j].real() +
                                      static_cast<long double>(s[j].imag()) * s[j].imag();
                num += p * f[j];
                den += p;
            }
            const double oracle = static_cast<double>(num / den);
            CHECK(std::abs(center_frequency(s, f, 0.0) - oracle) <= 1e-12 * oracle);
        }
    }
    SUBCASE("zero spectrum keeps the previous value") {
        CHECK(center_frequency(std::vector<cd>(f.size(), 0.0), f, 1.23) == 1.23);
    }
    CHECK_THROWS_AS(center_frequency(std::vector<cd>(3), f, 0.0), DomainError);
}

TEST_CASE("masks") {
    VmdConfig c;
    const auto m = make_masks(601, 1200, kFs, c);
    CHECK(m.low[0] == 1.0);
    CHECK(m.band[0] == 0.0);
    for (std::size_t j = 0; j < m.freq_hz.size(); ++j) {
        CHECK(m.low[j] >= 0.0);
        CHECK(m.low[j] <= 1.0);
        CHECK(m.band[j] >= 0.0);
        CHECK(m.band[j] <= 1.0);
        if (m.freq_hz[j] > c.lowpass_hz) CHECK(m.low[j] == 0.0);
        if (m.freq_hz[j] < c.band_lo || m.freq_hz[j] > c.band_hi) CHECK(m.band[j] == 0.0);
    }
    c.mask_rolloff_hz = 0.05;
    const auto soft = make_masks(601, 1200, kFs, c);
    bool has_transition = false;
    for (double v : soft.low) has_transition |= v > 0.0 && v < 1.0;
    CHECK(has_transition);
    c.masks = false;
    for (double v : make_masks(601, 1200, kFs, c).band) CHECK(v == 1.0);
}

TEST_CASE("improved_vmd examples") {
    VmdConfig c;
    SUBCASE("desk signal") {
        const auto r = improved_vmd(desk_signal(1), kFs, c);
        CHECK(std::abs(peak_hz(r.s_r, 0.1, c.lowpass_hz) - 0.25) < 1.0 / 60.0);
        CHECK(std::abs(peak_hz(r.s_h, c.band_lo, c.band_hi) - 1.35) < 5.0 / 60.0);
    }
    SUBCASE("single tone stays out of the heartbeat group") {
        const auto r = improved_vmd(tones({{1.0, 0.25}}), kFs, c);
        CHECK(power(r.s_h) < 0.01 * power(r.s_r));
    }
    SUBCASE("zero input") {
        const auto r = improved_vmd(std::vector<double>(1200, 0.0), kFs, c);
        CHECK(r.imfs.converged);
        CHECK(r.imfs.iterations == 1);
        for (double v : r.s_r) CHECK(v == 0.0);
        for (double v : r.s_h) CHECK(v == 0.0);
    }
}

TEST_CASE("improved_vmd invariants") {
    VmdConfig c;
    const auto s = desk_signal(2);
    std::vector<std::vector<double>> trace;
    const auto r = improved_vmd(s, kFs, c, &trace);

    SUBCASE("exact closure") {
        double scale = 0.0, worst = 0.0;
        for (double v : s) scale = std::max(scale, std::abs(v));
        for (std::size_t t = 0; t < s.size(); ++t) {
            double sum = r.imfs.residual[t];
            for (const auto& m : r.imfs.modes) sum += m[t];
            worst = std::max(worst, std::abs(s[t] - sum));
        }
        CHECK(worst <= 1e-12 * scale);
        for (std::size_t t = 0; t < s.size(); ++t) {
            double sr = 0.0;
            for (int i = 0; i < c.M_resp; ++i) sr += r.imfs.modes[i][t];
            CHECK(r.s_r[t] == doctest::Approx(sr).epsilon(1e-12));
        }
    }
    SUBCASE("mask idempotence") {
        double diff = 0.0, norm = 0.0;
        for (std::size_t j = 0; j < r.s_r_hat.size(); ++j) {
            diff += std::norm(r.s_r_hat[j] * r.masks.low[j] - r.s_r_hat[j]);
            norm += std::norm(r.s_r_hat[j]);
        }
        CHECK(std::sqrt(diff / norm) < 1e-10);
    }
    SUBCASE("termination") {
        CHECK(r.imfs.iterations <= c.iter_max);
        CHECK(trace.size() == static_cast<std::size_t>(r.imfs.iterations));
        if (r.imfs.converged) {
            CHECK(r.imfs.crit_abs < c.tol_abs);
            CHECK(r.imfs.crit_rel < c.tol_rel);
        }
        auto capped = c;
        capped.iter_max = 3;
        capped.tol_abs = capped.tol_rel = 1e-300;
        const auto q = improved_vmd(s, kFs, capped);
        CHECK(q.imfs.iterations == 3);
        CHECK_FALSE(q.imfs.converged);
    }
    SUBCASE("group separation") {
        double total = 0.0;
        std::vector<double> e(c.I_total);
        for (int i = 0; i < c.I_total; ++i) {
            e[i] = power(r.imfs.modes[i]);
            total += e[i];
        }
        for (int i = 0; i < c.M_resp; ++i)
            if (e[i] > 0.05 * total) CHECK(std::abs(r.imfs.w[i] - 0.25) < std::abs(r.imfs.w[i] - 1.35));
    }
    SUBCASE("zeta = 0 with identity masks reproduces baseline iterates") {
        auto z = c;
        z.zeta = 0.0;
        z.masks = false;
        z.iter_max = 60;
        std::vector<std::vector<double>> ta, tb;
        const auto a = improved_vmd(s, kFs, z, &ta);
        const auto b = baseline_vmd(s, kFs, z.I_total, z.alpha_int, z.epsilon, z.tol_abs, z.tol_rel, z.iter_max,
                                    initial_centers(z), &tb);
        CHECK(ta == tb);
        CHECK(a.imfs.modes == b.modes);
        CHECK(a.imfs.iterations == b.iterations);
    }
}

TEST_CASE("estimate_rate") {
    SUBCASE("pure tones") {
        const auto rr = estimate_rate(tones({{1.0, 0.25}}), kFs, 0.1, 0.7, 60.0);
        CHECK(rr.valid);
        CHECK(std::abs(rr.per_minute - 15.0) <= 0.1);
        const auto hr = estimate_rate(tones({{1.0, 1.35}}), kFs, 0.8, 2.5, 60.0);
        CHECK(hr.valid);
        CHECK(std::abs(hr.per_minute - 81.0) <= 0.5);
    }
    SUBCASE("0 dB noise over 100 seeds") {
        int ok = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto s = tones({{1.0, 0.25}});
            add_noise(s, 0.0, 1000 + seed);
            const auto e = estimate_rate(s, kFs, 0.1, 0.7, 60.0);
            ok += e.valid && std::abs(e.per_minute - 15.0) <= 1.0;
        }
        CHECK(ok >= 95);
    }
    SUBCASE("noise-only window is flagged when below the power floor") {
        auto s = tones({{1.0, 0.25}});
        for (std::size_t t = 600; t < 900; ++t) s[t] = 0.0;
        RateOptions opt;
        opt.ref_power = power(s);
        CHECK_FALSE(estimate_rate_span(s, kFs, 0.1, 0.7, 30.0, 45.0, opt).valid);
        CHECK(estimate_rate_span(s, kFs, 0.1, 0.7, 0.0, 30.0, opt).valid);
    }
    SUBCASE("flat spectrum has no prominent peak") {
        std::vector<double> s(1200, 0.0);
        s[600] = 1.0;
        CHECK_FALSE(estimate_rate(s, kFs, 0.1, 0.7, 0.0).valid);
    }
    CHECK_THROWS_AS(estimate_rate(tones({{1.0, 0.25}}, 10.0), kFs, 0.1, 0.7, 60.0), DomainError);
    CHECK_THROWS_AS(estimate_rate(tones({{1.0, 0.25}}), kFs, 0.7, 0.1, 60.0), DomainError);
}

TEST_CASE("estimate_vitals and dominant_mode") {
    VmdConfig c;
    const auto r = improved_vmd(desk_signal(3), kFs, c);
    const auto v = estimate_vitals(r.s_r, r.s_h, kFs, c, 0.0, 60.0);
    CHECK(v.rr_valid);
    CHECK(v.hr_valid);
    CHECK(std::abs(v.rr - 15.0) < 1.0);
    CHECK(std::abs(v.hr - 81.0) < 5.0);

    const auto b = baseline_vmd(desk_signal(3), kFs, 6, 2000.0, 0.0, 1e-6, 1e-6, 500);
    const auto d = dominant_mode(b, 0.1, 0.7);
    CHECK(d.size() == b.residual.size());
    CHECK(power(d) > 0.0);
    CHECK(power(dominant_mode(b, 8.0, 9.0)) == 0.0);
}

TEST_CASE("series csv round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "stcsense_series_test.csv").string();
    const auto s = desk_signal(4);
    write_series_csv(path, s, kFs, "s");
    double fs = 0.0;
    const auto back = read_series_csv(path, &fs);
    std::remove(path.c_str());
    CHECK(fs == doctest::Approx(kFs));
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(back[i] == doctest::Approx(s[i]).epsilon(1e-12));
}
