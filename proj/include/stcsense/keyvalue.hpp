#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "stcsense/geometry.hpp"

namespace stcsense {

// Sectioned key-value text:
//   # comment
//   [section]
//   key = value
// Sections may repeat (one [person] block per person). Keys before the first header belong to
// an unnamed section "".
struct KvSection {
    std::string name;
    int line = 0;
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, int> lines;

    bool has(const std::string& key) const;
    const std::string& raw(const std::string& key) const;

    std::string str(const std::string& key, const std::string& def) const;
    double num(const std::string& key, double def) const;
    double num(const std::string& key) const;
    long long integer(const std::string& key, long long def) const;
    bool flag(const std::string& key, bool def) const;
    Vec3 vec3(const std::string& key, const Vec3& def) const;
    Vec3 vec3(const std::string& key) const;
    cd complex(const std::string& key, cd def) const;
    std::vector<double> list(const std::string& key) const;

    // Throws ConfigError naming the first key not in `allowed`.
    void check_keys(const std::vector<std::string>& allowed) const;
    std::string qualified(const std::string& key) const { return name.empty() ? key : name + "." + key; }
};

struct KvDocument {
    std::vector<KvSection> sections;
    std::vector<const KvSection*> all(const std::string& name) const;
    const KvSection* first(const std::string& name) const;
};

KvDocument parse_kv(const std::string& text);
KvDocument read_kv(const std::string& path);

std::string format_double(double v);

}  // namespace stcsense
