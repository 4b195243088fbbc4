#include "stcsense/keyvalue.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "stcsense/error.hpp"

namespace stcsense {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, const std::string& key) {
    const std::string t = trim(text);
    if (t == "inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf" || t == "off") return -std::numeric_limits<double>::infinity();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
        throw_config(key, "expected a number, got '" + t + "'");
    return v;
}

std::vector<double> split_numbers(const std::string& text, const std::string& key) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::replace(s.begin(), s.end(), ';', ' ');
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(parse_number(tok, key));
    return out;
}

}  // namespace

bool KvSection::has(const std::string& key) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KvSection::raw(const std::string& key) const {
    for (const auto& e : entries)
        if (e.first == key) return e.second;
    throw_config(qualified(key), "missing required key");
}

std::string KvSection::str(const std::string& key, const std::string& def) const { return has(key) ? raw(key) : def; }

double KvSection::num(const std::string& key, double def) const {
    return has(key) ? parse_number(raw(key), qualified(key)) : def;
}

double KvSection::num(const std::string& key) const { return parse_number(raw(key), qualified(key)); }

long long KvSection::integer(const std::string& key, long long def) const {
    if (!has(key)) return def;
    const double v = num(key);
    if (v != static_cast<double>(static_cast<long long>(v))) throw_config(qualified(key), "expected an integer");
    return static_cast<long long>(v);
}

bool KvSection::flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string v = trim(raw(key));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw_config(qualified(key), "expected a boolean, got '" + v + "'");
}

Vec3 KvSection::vec3(const std::string& key, const Vec3& def) const { return has(key) ? vec3(key) : def; }

Vec3 KvSection::vec3(const std::string& key) const {
    const auto v = split_numbers(raw(key), qualified(key));
    if (v.size() != 3) throw_config(qualified(key), "expected three numbers 'x y z'");
    return {v[0], v[1], v[2]};
}

cd KvSection::complex(const std::string& key, cd def) const {
    if (!has(key)) return def;
    const auto v = split_numbers(raw(key), qualified(key));
    if (v.size() == 1) return {v[0], 0.0};
    if (v.size() == 2) return {v[0], v[1]};
    throw_config(qualified(key), "expected 're' or 're im'");
}

std::vector<double> KvSection::list(const std::string& key) const {
    return has(key) ? split_numbers(raw(key), qualified(key)) : std::vector<double>{};
}

void KvSection::check_keys(const std::vector<std::string>& allowed) const {
    for (const auto& e : entries)
        if (std::find(allowed.begin(), allowed.end(), e.first) == allowed.end())
            throw_config(qualified(e.first), "unknown key (line " + std::to_string(lines.at(e.first)) + ")");
}

std::vector<const KvSection*> KvDocument::all(const std::string& name) const {
    std::vector<const KvSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

const KvSection* KvDocument::first(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

KvDocument parse_kv(const std::string& text) {
    KvDocument doc;
    doc.sections.push_back(KvSection{});
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw_config("line " + std::to_string(lineno), "unterminated section header");
            KvSection s;
            s.name = trim(line.substr(1, line.size() - 2));
            s.line = lineno;
            doc.sections.push_back(std::move(s));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw_config("line " + std::to_string(lineno), "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw_config("line " + std::to_string(lineno), "empty key");
        auto& sec = doc.sections.back();
        if (sec.has(key)) throw_config(sec.qualified(key), "duplicate key (line " + std::to_string(lineno) + ")");
        sec.entries.emplace_back(key, trim(line.substr(eq + 1)));
        sec.lines[key] = lineno;
    }
    if (doc.sections.front().entries.empty()) doc.sections.erase(doc.sections.begin());
    return doc;
}

KvDocument read_kv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw_config("file", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_kv(ss.str());
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace stcsense
