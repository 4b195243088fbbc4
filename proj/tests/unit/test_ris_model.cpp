#include <doctest.h>

#include <cmath>
#include <vector>

#include "stcsense/error.hpp"
#include "stcsense/parallel.hpp"
#include "stcsense/pattern.hpp"
#include "stcsense/rng.hpp"

using namespace stcsense;

namespace {

StcCoding random_coding(int M, int N, int L, Rng& r) {
    StcCoding c(M, N, L);
    for (auto& b : c.bits) b = r.bit();
    return c;
}

double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("geometry invariants") {
    const auto g = default_geometry();
    CHECK(std::abs(g.lambda() * g.fc / kSpeedOfLight - 1.0) < 1e-12);
    CHECK(g.T0() * g.f0 == doctest::Approx(1.0).epsilon(1e-15));
    auto bad = g;
    bad.f0 = g.fc / 50.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = g;
    bad.dx = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("greens_weight") {
    const double lambda = kSpeedOfLight / 3.5e9;
    const double k = 2.0 * kPi / lambda;
    SUBCASE("on-axis magnitude at 1 m") {
        const cd w = greens_weight(lambda, k, {0, 0, 0}, {0, 0, 1});
        CHECK(std::abs(w) == doctest::Approx(std::sqrt(1.0 + 1.0 / (k * k)) / lambda).epsilon(1e-12));
        CHECK(std::abs(w) == doctest::Approx(11.67).epsilon(1e-3));
    }
    SUBCASE("doubling r at fixed z quarters the magnitude") {
        const Vec3 e{0, 0, 0};
        const double z = 1.0;
        const double x1 = std::sqrt(3.0), x2 = std::sqrt(15.0);  // r = 2 and r = 4
        const double ratio = std::abs(greens_weight(lambda, k, e, {x1, 0, z})) / std::abs(greens_weight(lambda, k, e, {x2, 0, z}));
        CHECK(ratio == doctest::Approx(4.0).epsilon(1e-3));
    }
    SUBCASE("phase advances 2 pi per wavelength") {
        const Vec3 e{0, 0, 0};
        const double z = 1.0;
        auto carrier = [&](double r) {
            const Vec3 p{std::sqrt(r * r - z * z), 0, z};
            return greens_weight(lambda, k, e, p) / cd(1.0 / (k * r), -1.0);
        };
        const cd a = carrier(1.3), b = carrier(1.3 + lambda);
        CHECK(std::abs(std::arg(b / a)) < 1e-9);
    }
    CHECK_THROWS_AS(greens_weight(lambda, k, {0, 0, 1}, {0, 0, 1}), DomainError);
}

TEST_CASE("harmonic_coefficient") {
    for (int l = 1; l <= 21; ++l) CHECK(std::abs(harmonic_coefficient(0, l, 21) - cd(1.0 / 21.0)) < 1e-15);
    for (int L : {1, 2, 5, 21, 64}) {
        cd s = 0.0;
        for (int l = 1; l <= L; ++l) s += harmonic_coefficient(0, l, L);
        CHECK(std::abs(s - 1.0) < 1e-13);
    }
    CHECK_THROWS_AS(harmonic_coefficient(1, 0, 21), DomainError);
    CHECK_THROWS_AS(harmonic_coefficient(1, 22, 21), DomainError);

    SUBCASE("k = 3, l = 5, L = 21 against the sampled-pulse oracle") {
        // Slot 5 pulse = (constant - coding with only slot 5 flipped) / 2.
        StcCoding flip(1, 1, 21);
        flip.set(0, 0, 4, 1);
        const int P = 4096 - 4096 % 21;
        const cd c_flip = element_spectrum_dft(flip, 0, 0, P, 3, 3)[0];
        const cd oracle = -0.5 * c_flip;  // constant coding has no k = 3 content
        CHECK(rel(harmonic_coefficient(3, 5, 21), oracle) < 1e-9);
    }
}

TEST_CASE("element_spectrum") {
    SUBCASE("constant coding") {
        const auto s = element_spectrum(constant_coding(1, 1, 21), 0, 0, -10, 10);
        for (int k = -10; k <= 10; ++k) {
            const cd v = s[static_cast<std::size_t>(k + 10)];
            if (k == 0)
                CHECK(std::abs(v - 1.0) < 1e-12);
            else
                CHECK(std::abs(v) < 1e-9);
        }
    }
    SUBCASE("alternating half period has no DC") {
        StcCoding c(1, 1, 8);
        for (int l = 4; l < 8; ++l) c.set(0, 0, l, 1);
        CHECK(std::abs(element_spectrum(c, 0, 0, 0, 0)[0]) < 1e-15);
    }
    SUBCASE("single flipped slot: |S_k| = (2/L)|Sa(pi k/L)|") {
        StcCoding c(1, 1, 21);
        c.set(0, 0, 0, 1);
        const auto s = element_spectrum_dft(c, 0, 0, 21 * 195, 1, 10);
        for (int k = 1; k <= 10; ++k)
            CHECK(std::abs(s[static_cast<std::size_t>(k - 1)]) ==
                  doctest::Approx(2.0 / 21.0 * std::abs(sinc_a(kPi * k / 21.0))).epsilon(1e-9));
    }
    SUBCASE("oracle equivalence on random codings") {
        Rng r(5);
        for (int L : {4, 8, 21}) {
            const int P = 4096 - 4096 % L;
            for (int trial = 0; trial < 10; ++trial) {
                const auto c = random_coding(2, 2, L, r);
                for (int m = 0; m < 2; ++m)
                    for (int n = 0; n < 2; ++n) {
                        const auto a = element_spectrum(c, m, n, -10, 10);
                        const auto b = element_spectrum_dft(c, m, n, P, -10, 10);
                        double scale = 0.0;
                        for (const auto& v : b) scale = std::max(scale, std::abs(v));
                        for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9 * scale);
                    }
            }
        }
    }
    SUBCASE("oracle preconditions") {
        const auto c = constant_coding(1, 1, 21);
        CHECK_THROWS_AS(element_spectrum_dft(c, 0, 0, 4096, 0, 1), DomainError);
        CHECK_THROWS_AS(element_spectrum_dft(c, 0, 0, 42, -10, 10), DomainError);
    }
    SUBCASE("energy is truncation-limited and grows with the range") {
        Rng r(9);
        const auto c = random_coding(1, 1, 21, r);
        double e_small = 0.0, e_large = 0.0;
        for (const auto& v : element_spectrum(c, 0, 0, -21, 21)) e_small += std::norm(v);
        for (const auto& v : element_spectrum(c, 0, 0, -210, 210)) e_large += std::norm(v);
        CHECK(e_small < e_large);
        CHECK(e_large <= 1.0 + 1e-12);
        CHECK(e_large > 0.97);
        double e_const = 0.0;
        for (const auto& v : element_spectrum(constant_coding(1, 1, 21), 0, 0, -210, 210)) e_const += std::norm(v);
        CHECK(std::abs(e_const - 1.0) < 1e-12);
    }
}

TEST_CASE("near_field_pattern") {
    auto g = make_geometry(4, 6, 0.0428, 0.0428, 3.5e9, 100.0, 8);
    set_spherical_illumination(g, {0, 0, 0.5}, 2.0);
    FieldGrid grid;
    grid.nx = 9;
    grid.ny = 7;
    Rng r(3);
    const auto c = random_coding(4, 6, 8, r);

    SUBCASE("constant coding radiates only k = 0") {
        const auto p = near_field_pattern(constant_coding(4, 6, 8), g, grid, -3, 3);
        double e0 = 0.0, eh = 0.0;
        for (int k = -3; k <= 3; ++k)
            for (const auto& v : p.at(k)) (k == 0 ? e0 : eh) += std::norm(v);
        CHECK(eh < 1e-12 * e0);
    }
    SUBCASE("summation orders agree") {
        const auto a = near_field_pattern(c, g, grid, -3, 3, SumOrder::ElementsThenSlots);
        const auto b = near_field_pattern(c, g, grid, -3, 3, SumOrder::SlotsThenElements);
        for (int k = -3; k <= 3; ++k)
            for (std::size_t i = 0; i < grid.size(); ++i) CHECK(rel(a.at(k)[i], b.at(k)[i]) < 1e-12);
    }
    SUBCASE("linearity in illumination") {
        auto g2 = g;
        for (auto& a : g2.amp) a *= 2.0;
        const auto a = near_field_pattern(c, g, grid, -1, 1);
        const auto b = near_field_pattern(c, g2, grid, -1, 1);
        for (int k = -1; k <= 1; ++k)
            for (std::size_t i = 0; i < grid.size(); ++i) CHECK(b.at(k)[i] == 2.0 * a.at(k)[i]);
    }
    SUBCASE("1 x 1 surface is a single term") {
        auto g1 = make_geometry(1, 1, 0.0428, 0.0428, 3.5e9, 100.0, 8);
        const auto c1 = random_coding(1, 1, 8, r);
        const auto p = near_field_pattern(c1, g1, grid, -2, 2);
        const auto s = element_spectrum(c1, 0, 0, -2, 2);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const cd w = greens_weight(g1, 0, 0, grid.point(i));
            for (int k = -2; k <= 2; ++k) CHECK(rel(p.at(k)[i], g1.illumination(0) * w * s[static_cast<std::size_t>(k + 2)]) < 1e-12);
        }
    }
    SUBCASE("shape and frequencies") {
        const auto p = near_field_pattern(c, g, grid, -3, 3);
        CHECK(p.data.size() == 7);
        for (const auto& d : p.data) CHECK(d.size() == grid.size());
        CHECK(p.frequency(2) == doctest::Approx(g.fc + 200.0));
    }
    SUBCASE("result is independent of the worker count") {
        const unsigned saved = worker_count();
        set_worker_count(1);
        const auto a = near_field_pattern(c, g, grid, -3, 3);
        set_worker_count(4);
        const auto b = near_field_pattern(c, g, grid, -3, 3);
        set_worker_count(saved);
        CHECK(a.data == b.data);
    }
    SUBCASE("mismatched coding is rejected") {
        CHECK_THROWS_AS(near_field_pattern(constant_coding(4, 6, 4), g, grid, 0, 0), DomainError);
    }
    CHECK(pattern_filename(3) == "pattern_k+3.csv");
    CHECK(pattern_filename(-1) == "pattern_k-1.csv");
    CHECK(pattern_filename(0) == "pattern_k+0.csv");
}

TEST_CASE("grid nearest cell") {
    const auto grid = default_grid();
    const auto idx = grid.nearest({0.5, 0.0, 1.0});
    const Vec3 p = grid.point(idx);
    CHECK(std::abs(p.x - 0.5) <= grid.step_x() / 2 + 1e-12);
    CHECK(std::abs(p.y) <= grid.step_y() / 2 + 1e-12);
    CHECK_THROWS_AS(grid.nearest({0.5, 0.0, 2.0}), DomainError);
    CHECK_THROWS_AS(grid.nearest({4.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("coding file round trip") {
    Rng r(2);
    StcCoding c(3, 5, 4);
    std::vector<std::uint8_t> x(5 * 4);
    for (auto& b : x) b = r.bit();
    c = expand_groups(CodingMode::ColumnShared, 3, 5, 4, x);
    const std::string text = format_coding(c, CodingMode::ColumnShared);
    CodingMode mode;
    CHECK(parse_coding(text, &mode) == c);
    CHECK(mode == CodingMode::ColumnShared);
    CHECK(collapse_groups(CodingMode::ColumnShared, c) == x);
    c.set(1, 2, 0, !c.bit(1, 2, 0));
    CHECK_THROWS_AS(collapse_groups(CodingMode::ColumnShared, c), DomainError);
    CHECK_THROWS_AS(parse_coding("3 5 4 column\n0101\n"), ConfigError);
}
