#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stcsense {

enum class CodingMode { Full, ColumnShared, RowShared };

const char* to_string(CodingMode m);
CodingMode parse_coding_mode(const std::string& s);

// Binary space-time coding. Bit 0 -> Gamma = +1, bit 1 -> Gamma = -1.
// Slot l is 0-based here (slot l covers [l, l+1) * T0/L).
struct StcCoding {
    int M = 0, N = 0, L = 0;
    std::vector<std::uint8_t> bits;  // index ((m*N + n) * L + l)

    StcCoding() = default;
    StcCoding(int M_, int N_, int L_);

    std::size_t index(int m, int n, int l) const {
        return (static_cast<std::size_t>(m) * N + n) * L + l;
    }
    std::uint8_t bit(int m, int n, int l) const { return bits[index(m, n, l)]; }
    double gamma(int m, int n, int l) const { return bits[index(m, n, l)] ? -1.0 : 1.0; }
    void set(int m, int n, int l, std::uint8_t b) { bits[index(m, n, l)] = b ? 1 : 0; }

    bool operator==(const StcCoding& o) const { return M == o.M && N == o.N && L == o.L && bits == o.bits; }
};

StcCoding constant_coding(int M, int N, int L);

// Number of independent sequences for a symmetry mode: N (column), M (row), M*N (full).
std::size_t group_count(CodingMode mode, int M, int N);
// Group that element (m, n) reads its sequence from.
std::size_t group_of(CodingMode mode, int M, int N, int m, int n);

// Expands a decision vector (group g, slot l at g*L + l) into the full tensor.
StcCoding expand_groups(CodingMode mode, int M, int N, int L, const std::vector<std::uint8_t>& x);
// Inverse of expand_groups; throws DomainError if the coding violates the symmetry.
std::vector<std::uint8_t> collapse_groups(CodingMode mode, const StcCoding& c);

// Text format: header "M N L mode", then one line per slot; each line holds the group bits as
// '0'/'1' characters (N for column-shared, M for row-shared, M*N row-major for full).
void write_coding(const std::string& path, const StcCoding& c, CodingMode mode);
std::string format_coding(const StcCoding& c, CodingMode mode);
StcCoding read_coding(const std::string& path, CodingMode* mode_out = nullptr);
StcCoding parse_coding(const std::string& text, CodingMode* mode_out = nullptr);

}  // namespace stcsense
