#include "stcsense/coding.hpp"

#include <fstream>
#include <sstream>

#include "stcsense/error.hpp"

namespace stcsense {

const char* to_string(CodingMode m) {
    switch (m) {
        case CodingMode::Full: return "full";
        case CodingMode::ColumnShared: return "column";
        case CodingMode::RowShared: return "row";
    }
    return "?";
}

CodingMode parse_coding_mode(const std::string& s) {
    if (s == "full") return CodingMode::Full;
    if (s == "column" || s == "column-shared") return CodingMode::ColumnShared;
    if (s == "row" || s == "row-shared") return CodingMode::RowShared;
    throw_config("mode", "unknown coding symmetry '" + s + "' (expected full, column or row)");
}

StcCoding::StcCoding(int M_, int N_, int L_) : M(M_), N(N_), L(L_) {
    if (M < 1 || N < 1 || L < 1) throw_domain("coding dimensions must be >= 1");
    bits.assign(static_cast<std::size_t>(M) * N * L, 0);
}

StcCoding constant_coding(int M, int N, int L) { return StcCoding(M, N, L); }

std::size_t group_count(CodingMode mode, int M, int N) {
    switch (mode) {
        case CodingMode::ColumnShared: return static_cast<std::size_t>(N);
        case CodingMode::RowShared: return static_cast<std::size_t>(M);
        case CodingMode::Full: break;
    }
    return static_cast<std::size_t>(M) * N;
}

std::size_t group_of(CodingMode mode, int, int N, int m, int n) {
    switch (mode) {
        case CodingMode::ColumnShared: return static_cast<std::size_t>(n);
        case CodingMode::RowShared: return static_cast<std::size_t>(m);
        case CodingMode::Full: break;
    }
    return static_cast<std::size_t>(m) * N + n;
}

StcCoding expand_groups(CodingMode mode, int M, int N, int L, const std::vector<std::uint8_t>& x) {
    const std::size_t G = group_count(mode, M, N);
    if (x.size() != G * static_cast<std::size_t>(L)) throw_domain("decision vector length does not match groups*L");
    StcCoding c(M, N, L);
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) {
            const std::size_t g = group_of(mode, M, N, m, n);
            for (int l = 0; l < L; ++l) c.set(m, n, l, x[g * L + l]);
        }
    return c;
}

std::vector<std::uint8_t> collapse_groups(CodingMode mode, const StcCoding& c) {
    const std::size_t G = group_count(mode, c.M, c.N);
    std::vector<std::uint8_t> x(G * c.L, 0);
    std::vector<bool> seen(G, false);
    for (int m = 0; m < c.M; ++m)
        for (int n = 0; n < c.N; ++n) {
            const std::size_t g = group_of(mode, c.M, c.N, m, n);
            for (int l = 0; l < c.L; ++l) {
                if (seen[g] && x[g * c.L + l] != c.bit(m, n, l))
                    throw_domain(std::string("coding is not ") + to_string(mode) + "-shared");
                x[g * c.L + l] = c.bit(m, n, l);
            }
            seen[g] = true;
        }
    return x;
}

std::string format_coding(const StcCoding& c, CodingMode mode) {
    const auto x = collapse_groups(mode, c);
    const std::size_t G = group_count(mode, c.M, c.N);
    std::ostringstream os;
    os << c.M << ' ' << c.N << ' ' << c.L << ' ' << to_string(mode) << '\n';
    for (int l = 0; l < c.L; ++l) {
        for (std::size_t g = 0; g < G; ++g) os << (x[g * c.L + l] ? '1' : '0');
        os << '\n';
    }
    return os.str();
}

void write_coding(const std::string& path, const StcCoding& c, CodingMode mode) {
    std::ofstream f(path);
    if (!f) throw_config("coding", "cannot write " + path);
    f << format_coding(c, mode);
}

StcCoding parse_coding(const std::string& text, CodingMode* mode_out) {
    std::istringstream is(text);
    int M = 0, N = 0, L = 0;
    std::string mode_s;
    if (!(is >> M >> N >> L >> mode_s)) throw_config("coding.header", "expected 'M N L mode'");
    if (M < 1 || N < 1 || L < 1) throw_config("coding.header", "dimensions must be >= 1");
    const CodingMode mode = parse_coding_mode(mode_s);
    const std::size_t G = group_count(mode, M, N);
    std::vector<std::uint8_t> x(G * L, 0);
    for (int l = 0; l < L; ++l) {
        std::string line;
        if (!(is >> line)) throw_config("coding.slot", "missing line for slot " + std::to_string(l + 1));
        if (line.size() != G)
            throw_config("coding.slot", "slot " + std::to_string(l + 1) + " has " + std::to_string(line.size()) +
                                            " characters, expected " + std::to_string(G));
        for (std::size_t g = 0; g < G; ++g) {
            if (line[g] != '0' && line[g] != '1') throw_config("coding.slot", "characters must be 0 or 1");
            x[g * L + l] = line[g] == '1';
        }
    }
    if (mode_out) *mode_out = mode;
    return expand_groups(mode, M, N, L, x);
}

StcCoding read_coding(const std::string& path, CodingMode* mode_out) {
    std::ifstream f(path);
    if (!f) throw_config("coding", "cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_coding(ss.str(), mode_out);
}

}  // namespace stcsense
