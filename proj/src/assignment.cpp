#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stcsense/detection.hpp"
#include "stcsense/error.hpp"

namespace stcsense {

void sort_pool(std::vector<int>& pool) {
    std::sort(pool.begin(), pool.end(), [](int a, int b) {
        return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b;
    });
}

AssignmentState AssignmentState::initial(std::size_t directions, std::vector<int> harmonics) {
    AssignmentState s;
    s.dirs.assign(directions, DirectionState{});
    sort_pool(harmonics);
    s.harmonics = harmonics;
    s.pool = harmonics;
    return s;
}

void AssignmentState::check_invariants() const {
    std::multiset<int> seen(pool.begin(), pool.end());
    for (const auto& d : dirs)
        if (d.status == DirStatus::Assigned) {
            if (std::count_if(dirs.begin(), dirs.end(), [&](const DirectionState& o) {
                    return o.status == DirStatus::Assigned && o.harmonic == d.harmonic;
                }) != 1)
                throw std::logic_error("harmonic assigned to more than one direction");
            seen.insert(d.harmonic);
        }
    if (std::multiset<int>(harmonics.begin(), harmonics.end()) != seen)
        throw std::logic_error("pool and assigned harmonics do not partition the harmonic set");
}

std::vector<int> AssignmentState::assigned_directions() const {
    std::vector<int> out;
    for (std::size_t d = 0; d < dirs.size(); ++d)
        if (dirs[d].status == DirStatus::Assigned) out.push_back(static_cast<int>(d));
    return out;
}

bool AssignmentState::operator==(const AssignmentState& o) const {
    if (dirs.size() != o.dirs.size() || pool != o.pool || harmonics != o.harmonics) return false;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        if (dirs[i].status != o.dirs[i].status || dirs[i].harmonic != o.dirs[i].harmonic ||
            dirs[i].last_seen != o.dirs[i].last_seen)
            return false;
    return true;
}

AssignmentUpdate update_assignments(const AssignmentState& s, const std::vector<ScanObservation>& scan, double now,
                                    const DetectionConfig& cfg) {
    if (scan.size() != s.dirs.size()) throw_config("scan", "scan result must cover every direction");
    AssignmentUpdate u{s, {}};
    auto& st = u.state;
    for (std::size_t d = 0; d < st.dirs.size(); ++d) {
        auto& dir = st.dirs[d];
        const auto& ob = scan[d];
        const int di = static_cast<int>(d);
        if (dir.status != DirStatus::Assigned && !ob.observed)
            throw_config("scan", "direction " + std::to_string(d) + " is not assigned but was not scanned");
        switch (dir.status) {
            case DirStatus::Assigned:
                if (!ob.observed) break;
                if (ob.intensity) {
                    dir.last_seen = now;
                } else if (now - dir.last_seen >= cfg.loss_timeout) {
                    u.events.push_back({now, di, "released", dir.harmonic});
                    st.pool.push_back(dir.harmonic);
                    sort_pool(st.pool);
                    dir = DirectionState{};
                }
                break;
            case DirStatus::Empty:
                if (!ob.intensity) break;
                dir.status = DirStatus::Candidate;
                dir.last_seen = now;
                u.events.push_back({now, di, "candidate", std::nullopt});
                [[fallthrough]];
            case DirStatus::Candidate:
                if (!ob.intensity) {
                    u.events.push_back({now, di, "released", std::nullopt});
                    dir = DirectionState{};
                    break;
                }
                dir.last_seen = now;
                if (!ob.respiration) break;
                if (st.pool.empty()) {
                    u.events.push_back({now, di, "capacity", std::nullopt});
                    break;
                }
                dir.status = DirStatus::Assigned;
                dir.harmonic = st.pool.front();
                st.pool.erase(st.pool.begin());
                u.events.push_back({now, di, "assigned", dir.harmonic});
                break;
        }
    }
    st.check_invariants();
    return u;
}

std::string event_json(const DetectionEvent& e) {
    nlohmann::json j;
    j["t"] = e.t;
    j["direction"] = e.direction;
    j["event"] = e.event;
    j["harmonic"] = e.harmonic ? nlohmann::json(*e.harmonic) : nlohmann::json(nullptr);
    return j.dump();
}

void write_detection_log(const std::string& path, const std::vector<DetectionEvent>& events) {
    std::ofstream f(path);
    if (!f) throw_config("output", "cannot write " + path);
    for (const auto& e : events) f << event_json(e) << '\n';
}

std::vector<DetectionEvent> read_detection_log(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("log", "cannot read " + path);
    std::vector<DetectionEvent> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        DetectionEvent e;
        e.t = j.at("t").get<double>();
        e.direction = j.at("direction").get<int>();
        e.event = j.at("event").get<std::string>();
        if (!j.at("harmonic").is_null()) e.harmonic = j.at("harmonic").get<int>();
        out.push_back(e);
    }
    return out;
}

void write_baseline_csv(const std::string& path, const std::vector<double>& intensity) {
    std::ofstream f(path);
    if (!f) throw_config("output", "cannot write " + path);
    f << "direction,intensity\n";
    f.precision(17);
    for (std::size_t d = 0; d < intensity.size(); ++d) f << d << ',' << intensity[d] << '\n';
}

std::vector<double> read_baseline_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("baseline", "cannot read " + path);
    std::string line;
    std::getline(f, line);
    if (line.rfind("direction,intensity", 0) != 0) throw_config("baseline", "expected header 'direction,intensity'");
    std::vector<double> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string a, b;
        std::getline(is, a, ',');
        std::getline(is, b);
        const std::size_t d = std::stoul(a);
        if (d != out.size()) throw_config("baseline", "directions must be listed in order starting at 0");
        out.push_back(std::stod(b));
    }
    return out;
}

}  // namespace stcsense
