#include "stcsense/scene.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stcsense/error.hpp"
#include "stcsense/keyvalue.hpp"

namespace stcsense {

bool Person::holding(double t) const {
    for (const auto& [a, b] : breath_holds)
        if (t >= a && t < b) return true;
    return false;
}

void Person::validate() const {
    require(f_r >= 0.1 && f_r <= 0.7, "person.f_r", "must lie in [0.1, 0.7] Hz");
    require(f_h >= 0.8 && f_h <= 2.5, "person.f_h", "must lie in [0.8, 2.5] Hz");
    require(A_h < A_r, "person.A_h", "must be smaller than A_r");
    require(A_h >= 0.0, "person.A_h", "must be >= 0");
    require(std::abs(reflectivity) > 0.0, "person.reflectivity", "must be nonzero");
    for (const auto& [a, b] : breath_holds) require(b > a, "person.breath_holds", "intervals must have end > start");
}

double Scene::noise_power() const { return std::isfinite(noise_db) ? std::pow(10.0, noise_db / 10.0) : 0.0; }

void Scene::validate() const {
    for (const auto& p : persons) p.validate();
    for (std::size_t i = 0; i < persons.size(); ++i)
        for (std::size_t j = i + 1; j < persons.size(); ++j)
            require(distance(persons[i].position, persons[j].position) > 0.0, "person.position",
                    "person positions must be pairwise distinct");
    require(!std::isnan(noise_db) && noise_db < std::numeric_limits<double>::infinity(), "scene.noise_db",
            "must be finite or 'off'");
}

double chest_displacement(const Person& p, double t) {
    const double resp = p.holding(t) ? 0.0 : p.A_r * std::sin(2.0 * kPi * p.f_r * t);
    return resp + p.A_h * std::sin(2.0 * kPi * p.f_h * t);
}

Passerby crossing_passerby(const Person& target, double duration, double speed, double range, cd reflectivity) {
    Passerby pb;
    pb.enabled = true;
    pb.velocity = {speed, 0.0, 0.0};
    pb.start = {target.position.x - speed * duration / 2.0, target.position.y, range};
    pb.reflectivity = reflectivity;
    return pb;
}

namespace {

std::string vec_str(const Vec3& v) {
    return format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z);
}

std::string cd_str(cd c) { return format_double(c.real()) + " " + format_double(c.imag()); }

}  // namespace

Scene parse_scene(const std::string& text) {
    const KvDocument doc = parse_kv(text);
    Scene s;
    for (const auto& sec : doc.sections) {
        if (sec.name == "scene") {
            sec.check_keys({"seed", "noise_db", "rx", "leakage_db"});
            s.seed = static_cast<std::uint64_t>(sec.integer("seed", 1));
            s.noise_db = sec.num("noise_db", s.noise_db);
            s.rx = sec.vec3("rx", s.rx);
            s.leakage_db = sec.num("leakage_db", s.leakage_db);
        } else if (sec.name == "person") {
            sec.check_keys({"position", "f_r", "f_h", "A_r", "A_h", "reflectivity", "breath_holds"});
            Person p;
            p.position = sec.vec3("position");
            p.f_r = sec.num("f_r", p.f_r);
            p.f_h = sec.num("f_h", p.f_h);
            p.A_r = sec.num("A_r", p.A_r);
            p.A_h = sec.num("A_h", p.A_h);
            p.reflectivity = sec.complex("reflectivity", p.reflectivity);
            const auto h = sec.list("breath_holds");
            if (h.size() % 2 != 0) throw_config(sec.qualified("breath_holds"), "expected start/end pairs");
            for (std::size_t i = 0; i < h.size(); i += 2) p.breath_holds.emplace_back(h[i], h[i + 1]);
            s.persons.push_back(p);
        } else if (sec.name == "reflector") {
            sec.check_keys({"position", "reflectivity"});
            s.reflectors.push_back({sec.vec3("position"), sec.complex("reflectivity", {1.0, 0.0})});
        } else if (sec.name == "passerby") {
            sec.check_keys({"start", "velocity", "reflectivity"});
            s.passerby.enabled = true;
            s.passerby.start = sec.vec3("start");
            s.passerby.velocity = sec.vec3("velocity");
            s.passerby.reflectivity = sec.complex("reflectivity", {1.0, 0.0});
        } else {
            throw_config(sec.name.empty() ? "scene" : sec.name, "unknown section in scene file");
        }
    }
    s.validate();
    return s;
}

Scene read_scene(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("scene", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scene(ss.str());
}

std::string format_scene(const Scene& s) {
    std::ostringstream os;
    os << "[scene]\nseed = " << s.seed << "\nnoise_db = "
       << (std::isfinite(s.noise_db) ? format_double(s.noise_db) : std::string("off")) << "\nrx = " << vec_str(s.rx)
       << "\nleakage_db = " << format_double(s.leakage_db) << "\n";
    for (const auto& p : s.persons) {
        os << "\n[person]\nposition = " << vec_str(p.position) << "\nf_r = " << format_double(p.f_r)
           << "\nf_h = " << format_double(p.f_h) << "\nA_r = " << format_double(p.A_r) << "\nA_h = "
           << format_double(p.A_h) << "\nreflectivity = " << cd_str(p.reflectivity) << "\n";
        if (!p.breath_holds.empty()) {
            os << "breath_holds =";
            for (std::size_t i = 0; i < p.breath_holds.size(); ++i)
                os << (i ? "; " : " ") << format_double(p.breath_holds[i].first) << ' '
                   << format_double(p.breath_holds[i].second);
            os << "\n";
        }
    }
    for (const auto& r : s.reflectors)
        os << "\n[reflector]\nposition = " << vec_str(r.position) << "\nreflectivity = " << cd_str(r.reflectivity)
           << "\n";
    if (s.passerby.enabled)
        os << "\n[passerby]\nstart = " << vec_str(s.passerby.start) << "\nvelocity = " << vec_str(s.passerby.velocity)
           << "\nreflectivity = " << cd_str(s.passerby.reflectivity) << "\n";
    return os.str();
}

void write_echo_csv(const std::string& path, const std::vector<cd>& stream, double fs, double t_start) {
    std::ofstream f(path);
    if (!f) throw_config("output", "cannot write " + path);
    f << "t_s,i,q\n";
    f.precision(17);
    for (std::size_t i = 0; i < stream.size(); ++i)
        f << t_start + static_cast<double>(i) / fs << ',' << stream[i].real() << ',' << stream[i].imag() << '\n';
}

std::vector<cd> read_echo_csv(const std::string& path, double* fs_out) {
    std::ifstream f(path);
    if (!f) throw_config("echo", "cannot read " + path);
    std::string line;
    std::getline(f, line);
    if (line.rfind("t_s,i,q", 0) != 0) throw_config("echo", path + ": expected header 't_s,i,q'");
    std::vector<cd> out;
    std::vector<double> t;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        double a, b, c;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
            throw_config("echo", path + ": malformed row '" + line + "'");
        t.push_back(a);
        out.emplace_back(b, c);
    }
    if (fs_out) {
        if (t.size() < 2) throw_config("echo", path + ": need at least two samples to infer fs");
        *fs_out = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    }
    return out;
}

void write_echo_raw(const std::string& path, const EchoSet& e, std::size_t stream) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw_config("output", "cannot write " + path);
    const auto& s = e.streams.at(stream);
    for (const auto& v : s) {
        // host is little-endian on every supported target
        const double iq[2] = {v.real(), v.imag()};
        f.write(reinterpret_cast<const char*>(iq), sizeof iq);
    }
    std::ofstream h(path + ".hdr");
    h << "fs = " << format_double(e.fs) << "\nduration = " << format_double(e.duration) << "\nfc = "
      << format_double(e.fc) << "\nf0 = " << format_double(e.f0) << "\ndirection = " << e.direction.at(stream)
      << "\nt_start = " << format_double(e.t_start + static_cast<double>(stream) * e.duration) << "\nseed = " << e.seed
      << "\n";
}

EchoSet read_echo_raw(const std::string& path) {
    const KvDocument hdr = read_kv(path + ".hdr");
    if (hdr.sections.empty()) throw_config("echo", path + ".hdr is empty");
    const KvSection& h = hdr.sections.front();
    EchoSet e;
    e.fs = h.num("fs");
    e.duration = h.num("duration");
    e.fc = h.num("fc");
    e.f0 = h.num("f0");
    e.t_start = h.num("t_start", 0.0);
    e.seed = static_cast<std::uint64_t>(h.integer("seed", 0));
    e.direction.push_back(static_cast<int>(h.integer("direction", -1)));
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_config("echo", "cannot read " + path);
    std::vector<cd> s;
    double iq[2];
    while (f.read(reinterpret_cast<char*>(iq), sizeof iq)) s.emplace_back(iq[0], iq[1]);
    e.streams.push_back(std::move(s));
    return e;
}

}  // namespace stcsense
