#include "stcsense/geometry.hpp"

#include <algorithm>
#include <cstdlib>

#include "stcsense/error.hpp"

namespace stcsense {

void RisGeometry::validate() const {
    require(M >= 1, "M", "must be >= 1");
    require(N >= 1, "N", "must be >= 1");
    require(L >= 1, "L", "must be >= 1");
    require(dx > 0.0, "dx", "must be > 0");
    require(dy > 0.0, "dy", "must be > 0");
    require(fc > 0.0, "fc", "must be > 0");
    require(f0 > 0.0, "f0", "must be > 0");
    require(f0 < fc / 100.0, "f0", "must be well below the carrier (f0 < fc/100)");
    require(amp.size() == elements(), "amp", "illumination amplitude count must equal M*N");
    require(phase.size() == elements(), "phase", "illumination phase count must equal M*N");
}

RisGeometry make_geometry(int M, int N, double dx, double dy, double fc, double f0, int L) {
    RisGeometry g;
    g.M = M;
    g.N = N;
    g.dx = dx;
    g.dy = dy;
    g.fc = fc;
    g.f0 = f0;
    g.L = L;
    set_uniform_illumination(g);
    g.validate();
    return g;
}

void set_uniform_illumination(RisGeometry& g) {
    g.amp.assign(g.elements(), 1.0);
    g.phase.assign(g.elements(), 0.0);
}

void set_spherical_illumination(RisGeometry& g, const Vec3& source, double taper_q) {
    if (source.z <= 0.0) throw_config("illumination.source", "feed must sit in front of the RIS (z > 0)");
    const double k = g.wavenumber();
    g.amp.resize(g.elements());
    g.phase.resize(g.elements());
    double peak = 0.0;
    for (int m = 0; m < g.M; ++m)
        for (int n = 0; n < g.N; ++n) {
            const std::size_t e = static_cast<std::size_t>(m) * g.N + n;
            const double r = distance(g.element(m, n), source);
            const double cos_t = source.z / r;
            g.amp[e] = std::pow(cos_t, taper_q) / r;
            g.phase[e] = k * r;
            peak = std::max(peak, g.amp[e]);
        }
    for (auto& a : g.amp) a /= peak;
}

RisGeometry default_geometry() {
    const double fc = 3.5e9;
    const double lam = kSpeedOfLight / fc;
    return make_geometry(32, 32, lam / 2.0, lam / 2.0, fc, 100.0, 21);
}

std::size_t FieldGrid::nearest(const Vec3& p) const {
    const double sx = step_x(), sy = step_y();
    const double tol_z = 1e-9 * std::max(1.0, std::abs(z));
    if (std::abs(p.z - z) > tol_z) throw_domain("point is not on the grid plane");
    const double fi = sx > 0.0 ? (p.x - x0) / sx : 0.0;
    const double fj = sy > 0.0 ? (p.y - y0) / sy : 0.0;
    const int i = static_cast<int>(std::lround(fi));
    const int j = static_cast<int>(std::lround(fj));
    if (i < -1 || i > nx || j < -1 || j > ny) throw_domain("point lies outside the evaluated grid extent");
    if ((nx == 1 && std::abs(p.x - x0) > 1e-9) || (ny == 1 && std::abs(p.y - y0) > 1e-9))
        throw_domain("point lies outside the evaluated grid extent");
    const int ci = std::clamp(i, 0, nx - 1), cj = std::clamp(j, 0, ny - 1);
    return static_cast<std::size_t>(cj) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ci);
}

int FieldGrid::cell_distance(std::size_t a, std::size_t b) const {
    const int ai = static_cast<int>(a % nx), aj = static_cast<int>(a / nx);
    const int bi = static_cast<int>(b % nx), bj = static_cast<int>(b / nx);
    return std::max(std::abs(ai - bi), std::abs(aj - bj));
}

void FieldGrid::validate() const {
    require(z > 0.0, "grid.z", "must be > 0");
    require(nx >= 1 && ny >= 1, "grid.resolution", "must be >= 1 per axis");
    require(x1 >= x0, "grid.x", "extent must be ordered");
    require(y1 >= y0, "grid.y", "extent must be ordered");
}

FieldGrid default_grid() { return FieldGrid{}; }

}  // namespace stcsense
