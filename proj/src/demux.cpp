#include <algorithm>
#include <cmath>

#include "stcsense/detection.hpp"
#include "stcsense/error.hpp"
#include "stcsense/kernels.hpp"
#include "stcsense/parallel.hpp"

namespace stcsense {

void DetectionConfig::validate() const {
    require(mu > 0.0, "detection.mu", "must be > 0");
    require(band_lo > 0.0 && band_lo < band_hi, "detection.band", "respiration band must satisfy 0 < lo < hi");
    require(floor_hi > band_hi, "detection.floor_hi", "must exceed the respiration band");
    require(window >= 2.0 / band_lo, "detection.window", "must cover at least two periods of the band's lower edge");
    require(loss_timeout >= 0.0, "detection.loss_timeout", "must be >= 0");
    require(taps >= 3 && taps % 2 == 1, "detection.taps", "must be odd and >= 3");
    require(motion_rate > 0.0, "detection.motion_rate", "must be > 0");
    require(nms_radius >= 0, "detection.nms_radius", "must be >= 0");
    require(vital_cutoff >= 0.0 && vital_cutoff < motion_rate / 2.0, "detection.vital_cutoff",
            "must lie in [0, motion_rate/2)");
    require(vital_taps >= 3 && vital_taps % 2 == 1, "detection.vital_taps", "must be odd and >= 3");
    require(nms_ratio >= 1.0, "detection.nms_ratio", "must be >= 1");
}

std::vector<double> lowpass_taps(double cutoff, double fs, int ntaps) {
    if (ntaps < 1 || ntaps % 2 == 0) throw_domain("lowpass_taps: ntaps must be odd");
    if (!(cutoff > 0.0 && cutoff < fs / 2.0)) throw_domain("lowpass_taps: cutoff must lie in (0, fs/2)");
    const int mid = ntaps / 2;
    const double fc = cutoff / fs;
    std::vector<double> h(static_cast<std::size_t>(ntaps));
    double sum = 0.0;
    for (int i = 0; i < ntaps; ++i) {
        const int n = i - mid;
        const double sinc = n == 0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * n) / (kPi * n);
        const double x = ntaps > 1 ? static_cast<double>(i) / (ntaps - 1) : 0.5;
        const double win = 0.42 - 0.5 * std::cos(2.0 * kPi * x) + 0.08 * std::cos(4.0 * kPi * x);
        h[static_cast<std::size_t>(i)] = sinc * win;
        sum += h[static_cast<std::size_t>(i)];
    }
    for (auto& v : h) v /= sum;
    return h;
}

std::vector<std::vector<cd>> demux_harmonics(const std::vector<cd>& x, double fs, double f0, const std::vector<int>& ks,
                                             double halfbw, int ntaps, double t_start) {
    if (halfbw <= 0.0) halfbw = f0 / 4.0;
    if (halfbw > f0 / 2.0) throw_config("halfbw", "harmonic bands overlap (half-bandwidth > f0/2)");
    int kabs = 0;
    for (int k : ks) kabs = std::max(kabs, std::abs(k));
    if (!(fs > 2.0 * (kabs * f0 + halfbw))) throw_config("fs", "sample rate too low for the requested harmonics");
    const auto h = lowpass_taps(halfbw, fs, ntaps);
    const std::size_t n = x.size();
    const std::size_t pad = static_cast<std::size_t>(ntaps / 2);
    const auto& kt = kernels::active();
    std::vector<std::vector<cd>> out(ks.size());
    parallel_for(ks.size(), [&](std::size_t i) {
        const int k = ks[i];
        std::vector<double> xr(n + 2 * pad, 0.0), xi(n + 2 * pad, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            const double cyc = k * f0 * (t_start + static_cast<double>(s) / fs);
            const cd v = x[s] * std::polar(1.0, -2.0 * kPi * (cyc - std::floor(cyc)));
            xr[pad + s] = v.real();
            xi[pad + s] = v.imag();
        }
        std::vector<double> yr(n), yi(n);
        kt.fir(h.data(), h.size(), xr.data(), xi.data(), n, yr.data(), yi.data());
        out[i].resize(n);
        for (std::size_t s = 0; s < n; ++s) out[i][s] = {yr[s], yi[s]};
    });
    return out;
}

std::vector<cd> decimate(const std::vector<cd>& x, std::size_t factor) {
    if (factor == 0) throw_domain("decimate: factor must be >= 1");
    std::vector<cd> y(x.size() / factor);
    for (std::size_t i = 0; i < y.size(); ++i) {
        cd acc = 0.0;
        for (std::size_t j = 0; j < factor; ++j) acc += x[i * factor + j];
        y[i] = acc / static_cast<double>(factor);
    }
    return y;
}

std::vector<cd> vital_band(const std::vector<cd>& x, double fs, double cutoff, int ntaps) {
    if (x.empty()) return {};
    const auto h = lowpass_taps(cutoff, fs, ntaps);
    const std::size_t n = x.size();
    const std::size_t pad = static_cast<std::size_t>(ntaps / 2);
    std::vector<double> xr(n + 2 * pad), xi(n + 2 * pad);
    for (std::size_t s = 0; s < xr.size(); ++s) {
        const std::size_t src = s < pad ? 0 : std::min(s - pad, n - 1);
        xr[s] = x[src].real();
        xi[s] = x[src].imag();
    }
    std::vector<double> yr(n), yi(n);
    kernels::active().fir(h.data(), h.size(), xr.data(), xi.data(), n, yr.data(), yi.data());
    std::vector<cd> y(n);
    for (std::size_t s = 0; s < n; ++s) y[s] = {yr[s], yi[s]};
    return y;
}

double measure_intensity(const std::vector<cd>& stream) {
    if (stream.empty()) throw_domain("measure_intensity: empty stream");
    double s = 0.0;
    for (const auto& v : stream) s += std::norm(v);
    return s / static_cast<double>(stream.size());
}

std::vector<bool> non_max_keep(const std::vector<double>& excess, int radius, double ratio) {
    const int D = static_cast<int>(excess.size());
    std::vector<bool> keep(excess.size(), true);
    if (radius <= 0) return keep;
    for (int d = 0; d < D; ++d) {
        const double own = std::max(excess[static_cast<std::size_t>(d)], 0.0);
        for (int o = std::max(0, d - radius); o <= std::min(D - 1, d + radius); ++o)
            if (o != d && excess[static_cast<std::size_t>(o)] > ratio * own) keep[static_cast<std::size_t>(d)] = false;
    }
    return keep;
}

}  // namespace stcsense
