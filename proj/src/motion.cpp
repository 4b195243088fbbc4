#include <algorithm>
#include <cmath>

#include "stcsense/detection.hpp"
#include "stcsense/error.hpp"
#include "stcsense/fft.hpp"

namespace stcsense {

namespace {

// Algebraic circle fit on centered, scaled coordinates. Returns false when degenerate.
bool kasa_center(const std::vector<cd>& z, cd mean, double scale, cd& center) {
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, sxr = 0, syr = 0, sr = 0;
    const double n = static_cast<double>(z.size());
    for (const auto& v : z) {
        const double x = (v.real() - mean.real()) / scale, y = (v.imag() - mean.imag()) / scale;
        const double r = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sx += x;
        sy += y;
        sxr += x * r;
        syr += y * r;
        sr += r;
    }
    // [sxx sxy sx; sxy syy sy; sx sy n] [D E F]^T = -[sxr syr sr]^T
    const double A[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, n}};
    const double b[3] = {-sxr, -syr, -sr};
    const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                       A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                       A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
    if (!(std::abs(det) > 1e-12 * n * n * n)) return false;
    auto solve = [&](int col) {
        double M[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M[i][j] = j == col ? b[i] : A[i][j];
        return (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) /
               det;
    };
    const double D = solve(0), E = solve(1);
    center = mean + scale * cd(-D / 2.0, -E / 2.0);
    return std::isfinite(center.real()) && std::isfinite(center.imag());
}

// Geometric circle fit: Levenberg-Marquardt on sum (|z - c| - R)^2 from an initial center.
cd refine_center(const std::vector<cd>& z, cd c, double scale) {
    auto cost_of = [&](cd cc, double& R) {
        double sr = 0.0;
        for (const auto& v : z) sr += std::abs(v - cc);
        R = sr / static_cast<double>(z.size());
        double s = 0.0;
        for (const auto& v : z) {
            const double e = std::abs(v - cc) - R;
            s += e * e;
        }
        return s;
    };
    double R = 0.0;
    double cost = cost_of(c, R);
    double lambda = 1e-3;
    for (int it = 0; it < 100; ++it) {
        // Residual e_i = |z_i - c| - R; d e_i/d c = -(z_i - c)/|z_i - c|, d e_i/d R = -1.
        double J[3][3] = {}, g[3] = {};
        for (const auto& v : z) {
            const cd d = v - c;
            const double r = std::abs(d);
            if (!(r > 0.0)) continue;
            const double jv[3] = {-d.real() / r, -d.imag() / r, -1.0};
            const double e = r - R;
            for (int a = 0; a < 3; ++a) {
                g[a] += jv[a] * e;
                for (int b = 0; b < 3; ++b) J[a][b] += jv[a] * jv[b];
            }
        }
        bool stepped = false;
        for (int tries = 0; tries < 10 && !stepped; ++tries) {
            double A[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) A[a][b] = J[a][b] + (a == b ? lambda * J[a][a] + 1e-300 : 0.0);
            const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                               A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                               A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
            if (!(std::abs(det) > 0.0)) break;
            double step[3];
            for (int col = 0; col < 3; ++col) {
                double M[3][3];
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) M[i][j] = j == col ? -g[i] : A[i][j];
                step[col] = (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
                             M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
                             M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) /
                            det;
            }
            const cd cn = c + cd(step[0], step[1]);
            double Rn = 0.0;
            const double cn_cost = cost_of(cn, Rn);
            if (cn_cost < cost) {
                const bool done = std::abs(cost - cn_cost) <= 1e-12 * cost || std::abs(step[0]) + std::abs(step[1]) < 1e-12 * scale;
                c = cn;
                R = Rn;
                cost = cn_cost;
                lambda = std::max(lambda * 0.3, 1e-9);
                stepped = true;
                if (done) return c;
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) break;
    }
    return c;
}

void unwrap(std::vector<double>& ph) {
    double offset = 0.0;
    for (std::size_t i = 1; i < ph.size(); ++i) {
        const double raw = ph[i] + offset;
        double d = raw - ph[i - 1];
        while (d > kPi) {
            offset -= 2.0 * kPi;
            d -= 2.0 * kPi;
        }
        while (d < -kPi) {
            offset += 2.0 * kPi;
            d += 2.0 * kPi;
        }
        ph[i] = ph[i - 1] + d;
    }
}

void detrend(std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n == 0) return;
    if (n == 1) {
        y[0] = 0.0;
        return;
    }
    const double tm = (n - 1) / 2.0;
    double ym = 0.0;
    for (double v : y) ym += v;
    ym /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - tm;
        num += dt * (y[i] - ym);
        den += dt * dt;
    }
    const double slope = num / den;
    for (std::size_t i = 0; i < n; ++i) y[i] -= ym + slope * (static_cast<double>(i) - tm);
}

}  // namespace

namespace {

constexpr double kGateSigma = 5.0;      // robust sigmas of radial deviation
constexpr double kGateFloor = 0.25;     // fraction of the radius
constexpr std::size_t kGateGuard = 10;  // samples dilated on each side
constexpr double kGateMaxFraction = 0.25;

double median_of(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Covariance eigenvalues of the IQ cloud around its mean.
void cloud_shape(const std::vector<cd>& z, cd& mean, double& l1, double& l2) {
    const double n = static_cast<double>(z.size());
    mean = 0.0;
    for (const auto& v : z) mean += v;
    mean /= n;
    double cxx = 0, cyy = 0, cxy = 0;
    for (const auto& v : z) {
        const cd d = v - mean;
        cxx += d.real() * d.real();
        cyy += d.imag() * d.imag();
        cxy += d.real() * d.imag();
    }
    cxx /= n;
    cyy /= n;
    cxy /= n;
    const double tr = cxx + cyy;
    const double disc = std::sqrt(std::max(0.0, (cxx - cyy) * (cxx - cyy) / 4.0 + cxy * cxy));
    l1 = tr / 2.0 + disc;
    l2 = tr / 2.0 - disc;
}

// Phase origin: fitted circle center for a visible arc; otherwise the origin with the mean
// phasor as phase reference.
struct Origin {
    cd center = 0.0;
    cd ref = 1.0;
};

Origin fit_origin(const std::vector<cd>& z) {
    cd mean;
    double l1, l2;
    cloud_shape(z, mean, l1, l2);
    Origin o;
    cd c;
    if (!(l1 > 0.0) || !kasa_center(z, mean, std::sqrt(l1), c)) {
        o.ref = std::conj(mean);
        return o;
    }
    if (l1 > 4.0 * std::max(l2, 0.0)) {
        o.center = refine_center(z, c, std::sqrt(l1));
        return o;
    }
    // Round cloud: keep the fit only when it is a circle (an arc past a half turn), not a blob.
    c = refine_center(z, c, std::sqrt(l1));
    double R = 0.0, e2 = 0.0;
    for (const auto& v : z) R += std::abs(v - c);
    R /= static_cast<double>(z.size());
    for (const auto& v : z) e2 += (std::abs(v - c) - R) * (std::abs(v - c) - R);
    const double rms = std::sqrt(e2 / static_cast<double>(z.size()));
    if (rms < 0.1 * R && R < 4.0 * std::sqrt(l1 + l2))
        o.center = c;
    else
        o.ref = std::conj(mean);
    return o;
}

// Samples whose distance from the origin jumps away from the typical radius (a transient
// scatterer), dilated by the guard. Empty when nothing qualifies or too much would be cut.
std::vector<bool> transient_gate(const std::vector<cd>& z, cd center) {
    std::vector<double> r(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) r[i] = std::abs(z[i] - center);
    const double R = median_of(r);
    if (!(R > 0.0)) return {};
    std::vector<double> dev(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) dev[i] = std::abs(r[i] - R);
    const double thr = std::max(kGateSigma * 1.4826 * median_of(dev), kGateFloor * R);
    std::vector<bool> bad(z.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (dev[i] > thr) {
            const std::size_t lo = i >= kGateGuard ? i - kGateGuard : 0;
            const std::size_t hi = std::min(z.size() - 1, i + kGateGuard);
            for (std::size_t j = lo; j <= hi; ++j) bad[j] = true;
            any = true;
        }
    if (!any) return {};
    const auto nbad = static_cast<double>(std::count(bad.begin(), bad.end(), true));
    if (nbad > kGateMaxFraction * static_cast<double>(z.size())) return {};
    return bad;
}

}  // namespace

std::vector<double> extract_motion_signal(const std::vector<cd>& z) {
    if (z.empty()) throw_domain("extract_motion_signal: empty stream");
    Origin o = fit_origin(z);
    const auto bad = transient_gate(z, o.center);
    std::vector<double> ph(z.size());
    if (bad.empty()) {
        for (std::size_t i = 0; i < z.size(); ++i) ph[i] = std::arg((z[i] - o.center) * o.ref);
        unwrap(ph);
        detrend(ph);
        return ph;
    }

    // Refit without the transient, unwrap the clean samples, bridge the gaps linearly.
    std::vector<std::size_t> keep;
    std::vector<cd> zc;
    for (std::size_t i = 0; i < z.size(); ++i)
        if (!bad[i]) {
            keep.push_back(i);
            zc.push_back(z[i]);
        }
    o = fit_origin(zc);
    std::vector<double> pc(zc.size());
    for (std::size_t i = 0; i < zc.size(); ++i) pc[i] = std::arg((zc[i] - o.center) * o.ref);
    unwrap(pc);
    for (std::size_t j = 0; j < keep.size(); ++j) ph[keep[j]] = pc[j];
    for (std::size_t i = 0; i < keep.front(); ++i) ph[i] = pc.front();
    for (std::size_t i = keep.back() + 1; i < z.size(); ++i) ph[i] = pc.back();
    for (std::size_t j = 0; j + 1 < keep.size(); ++j) {
        const std::size_t a = keep[j], b = keep[j + 1];
        for (std::size_t i = a + 1; i < b; ++i)
            ph[i] = pc[j] + (pc[j + 1] - pc[j]) * static_cast<double>(i - a) / static_cast<double>(b - a);
    }
    detrend(ph);
    return ph;
}

RespirationTest respiration_test(const std::vector<cd>& stream, double fs, const DetectionConfig& cfg) {
    const std::size_t nwin = static_cast<std::size_t>(std::llround(cfg.window * fs));
    if (stream.size() < nwin || nwin < 16) throw_domain("respiration_indicator: stream shorter than the confirmation window");
    const std::vector<cd> z(stream.end() - static_cast<std::ptrdiff_t>(nwin), stream.end());
    cd mean = 0.0;
    for (const auto& v : z) mean += v;
    mean /= static_cast<double>(z.size());

    // Welch spectrum of the static-removed IQ; chest motion shows as lines at +-f_r.
    const std::size_t seg = std::max<std::size_t>(8, nwin / 3);
    const std::size_t hop = std::max<std::size_t>(1, seg / 2);
    const std::size_t nfft = 2 * fft::next_pow2(seg);
    std::vector<double> win(seg);
    for (std::size_t i = 0; i < seg; ++i) win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / (seg - 1));
    std::vector<double> psd(nfft, 0.0);
    int count = 0;
    for (std::size_t st = 0; st + seg <= z.size(); st += hop) {
        std::vector<cd> s(nfft, 0.0);
        for (std::size_t i = 0; i < seg; ++i) s[i] = (z[st + i] - mean) * win[i];
        const auto X = fft::fft(s);
        for (std::size_t k = 0; k < nfft; ++k) psd[k] += std::norm(X[k]);
        ++count;
    }
    RespirationTest r;
    if (count == 0) return r;
    std::vector<double> freq(nfft);
    for (std::size_t k = 0; k < nfft; ++k) {
        const double b = k <= nfft / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(nfft);
        freq[k] = std::abs(b) * fs / static_cast<double>(nfft);
    }
    double peak = -1.0;
    for (std::size_t k = 0; k < nfft; ++k) {
        if (freq[k] < cfg.band_lo || freq[k] > cfg.band_hi) continue;
        if (psd[k] > peak) {
            peak = psd[k];
            r.peak_freq = freq[k];
        }
    }
    if (!(peak > 0.0)) return r;
    // Noise floor: median over band_lo <= |f| <= floor_hi outside the peak's Hann main lobe.
    const double lobe = 2.0 * fs / static_cast<double>(seg);
    std::vector<double> ref;
    for (std::size_t k = 0; k < nfft; ++k) {
        if (freq[k] < cfg.band_lo || freq[k] > cfg.floor_hi || std::abs(freq[k] - r.peak_freq) < lobe) continue;
        ref.push_back(psd[k]);
    }
    if (ref.empty()) return r;
    std::nth_element(ref.begin(), ref.begin() + static_cast<std::ptrdiff_t>(ref.size() / 2), ref.end());
    const double med = ref[ref.size() / 2];
    r.prominence_db = med > 0.0 ? 10.0 * std::log10(peak / med) : 300.0;
    r.pass = r.prominence_db >= cfg.prominence_db;
    return r;
}

bool respiration_indicator(const std::vector<cd>& stream, double fs, const DetectionConfig& cfg) {
    return respiration_test(stream, fs, cfg).pass;
}

}  // namespace stcsense
