#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stcsense/coding.hpp"
#include "stcsense/geometry.hpp"

namespace stcsense {

struct Person {
    Vec3 position;
    double f_r = 0.25;     // Hz
    double f_h = 1.2;      // Hz
    double A_r = 5e-3;     // m
    double A_h = 5e-4;     // m
    cd reflectivity{1.0, 0.0};
    std::vector<std::pair<double, double>> breath_holds;  // [t_start, t_end] s

    bool holding(double t) const;
    void validate() const;
};

struct StaticReflector {
    Vec3 position;
    cd reflectivity{1.0, 0.0};
};

// Straight-line constant-velocity walker; no vital motion of its own.
struct Passerby {
    bool enabled = false;
    Vec3 start;
    Vec3 velocity;
    cd reflectivity{1.0, 0.0};
    Vec3 position(double t) const { return start + t * velocity; }
};

struct Scene {
    std::vector<Person> persons;
    std::vector<StaticReflector> reflectors;
    Passerby passerby;
    double noise_db = -std::numeric_limits<double>::infinity();  // per complex sample, re unit carrier
    std::uint64_t seed = 1;
    Vec3 rx{0.3, 0.0, 0.0};
    double leakage_db = -20.0;  // direct RIS -> Rx level relative to a 1 m person path

    double noise_power() const;
    void validate() const;
};

struct EchoSet {
    std::vector<std::vector<cd>> streams;
    std::vector<int> direction;  // tag per stream; -1 for a continuous record
    double fs = 0.0;
    double duration = 0.0;
    double fc = 0.0;
    double f0 = 0.0;
    double t_start = 0.0;        // absolute time of sample 0 of stream 0
    std::uint64_t seed = 0;
};

struct SimConfig {
    double fs = 2500.0;
    double duration = 60.0;
    int kmax = 10;
    double t_offset = 0.0;            // absolute scene time of the first sample
    std::uint64_t stream_index = 0;   // noise substream
    double passerby_rate = 200.0;     // Hz, channel evaluation rate along the passerby path
    void validate(double f0) const;
};

// d(t) = A_r sin(2 pi f_r t) hold(t) + A_h sin(2 pi f_h t)
double chest_displacement(const Person& p, double t);

// Free-space factor from a scatterer to the receiver: e^{j k r} / r.
cd rx_factor(const RisGeometry& g, const Vec3& p, const Vec3& rx);

// |G_0(0, 0, 1)| under the constant coding: the reference 1 m person-path amplitude.
double reference_path_amplitude(const RisGeometry& g);

// Direct RIS -> Rx leakage per harmonic in [-kmax, kmax] for a given coding.
std::vector<cd> static_leakage(const Scene& s, const StcCoding& c, const RisGeometry& g, int kmax);

// Complex baseband amplitude of a point scatterer's path on harmonic k: G_k(p) Gamma g_rx(p).
cd path_amplitude(const RisGeometry& g, const StcCoding& c, const Vec3& p, cd refl, const Vec3& rx, int k);

// Noise level (dB per complex sample) that puts `echo_power` at `snr_db` inside a demux band of
// half-width halfbw at sample rate fs.
double noise_db_for_snr(double echo_power, double snr_db, double fs, double halfbw);

EchoSet simulate_received(const Scene& s, const StcCoding& c, const RisGeometry& g, const FieldGrid& grid,
                          const SimConfig& cfg);

// One stream per coding; stream d covers absolute time [d*dwell, (d+1)*dwell) and uses noise
// substream d.
EchoSet scan_sequence(const Scene& s, const std::vector<StcCoding>& codings, const RisGeometry& g,
                      const FieldGrid& grid, double dwell, double fs, int kmax = 10);

// Walker at range `range` crossing in front of `target` at mid-record.
Passerby crossing_passerby(const Person& target, double duration, double speed = 0.5, double range = 0.5,
                           cd reflectivity = {1.0, 0.0});

Scene parse_scene(const std::string& text);
Scene read_scene(const std::string& path);
std::string format_scene(const Scene& s);

// Echo files: CSV with header t_s,i,q; or raw little-endian f64 interleaved I/Q plus a
// "<path>.hdr" key-value sidecar (fs, duration, fc, f0, direction, t_start).
void write_echo_csv(const std::string& path, const std::vector<cd>& stream, double fs, double t_start = 0.0);
std::vector<cd> read_echo_csv(const std::string& path, double* fs_out = nullptr);
void write_echo_raw(const std::string& path, const EchoSet& e, std::size_t stream);
EchoSet read_echo_raw(const std::string& path);

}  // namespace stcsense
