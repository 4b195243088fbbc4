#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace stcsense {

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kPi = 3.14159265358979323846;

using cd = std::complex<double>;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline double norm(const Vec3& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Planar RIS in z = 0: column n along x, row m along y, centered on the origin.
// Element (m, n) is stored at index m*N + n.
struct RisGeometry {
    int M = 32, N = 32;
    double dx = 0.0, dy = 0.0;
    double fc = 3.5e9;
    double f0 = 100.0;   // modulation frequency 1/T0
    int L = 21;
    std::vector<double> amp;    // A_{m,n}
    std::vector<double> phase;  // phi_{m,n}, radians

    double lambda() const { return kSpeedOfLight / fc; }
    double wavenumber() const { return 2.0 * kPi / lambda(); }
    double T0() const { return 1.0 / f0; }
    std::size_t elements() const { return static_cast<std::size_t>(M) * static_cast<std::size_t>(N); }
    Vec3 element(int m, int n) const {
        return {(n - (N - 1) / 2.0) * dx, (m - (M - 1) / 2.0) * dy, 0.0};
    }
    cd illumination(std::size_t e) const { return std::polar(amp[e], phase[e]); }

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Uniform illumination A = 1, phi = 0 (normal plane wave).
RisGeometry make_geometry(int M, int N, double dx, double dy, double fc, double f0, int L);
void set_uniform_illumination(RisGeometry& g);
// Point source (horn feed) at `source`: A ∝ cos(theta)^q / r normalized to max 1, phi = k r.
void set_spherical_illumination(RisGeometry& g, const Vec3& source, double taper_q);

// 32 x 32, half-wavelength pitch at 3.5 GHz, f0 = 100 Hz, L = 21, uniform illumination.
RisGeometry default_geometry();

// Observation plane at range z. Point (i, j) sits at index j*nx + i, i along x.
struct FieldGrid {
    double z = 1.0;
    double x0 = -2.5, x1 = 2.5;
    double y0 = -1.5, y1 = 1.5;
    int nx = 64, ny = 64;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double step_x() const { return nx > 1 ? (x1 - x0) / (nx - 1) : 0.0; }
    double step_y() const { return ny > 1 ? (y1 - y0) / (ny - 1) : 0.0; }
    Vec3 point(int i, int j) const { return {x0 + i * step_x(), y0 + j * step_y(), z}; }
    Vec3 point(std::size_t idx) const {
        return point(static_cast<int>(idx % static_cast<std::size_t>(nx)), static_cast<int>(idx / static_cast<std::size_t>(nx)));
    }
    // Nearest grid cell; DomainError when p is off the plane or more than one cell beyond the extent.
    std::size_t nearest(const Vec3& p) const;
    // Cell distance (Chebyshev, in cells) between grid indices.
    int cell_distance(std::size_t a, std::size_t b) const;
    void validate() const;
};

FieldGrid default_grid();

}  // namespace stcsense
