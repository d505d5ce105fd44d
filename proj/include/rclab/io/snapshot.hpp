#pragma once

// Binary snapshot files.
//
//   magic "RCLB1" | u8 version | u8 dim | u64 cells[dim] | f64 time | u8 field count |
//   f64 payload, fields in order (u, v), row-major
//
// All multi-byte values little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "rclab/error.hpp"
#include "rclab/grid.hpp"
#include "rclab/io/csv.hpp"
#include "rclab/trajectory.hpp"

namespace rclab::io {

inline constexpr char kSnapshotMagic[5] = {'R', 'C', 'L', 'B', '1'};
inline constexpr std::uint8_t kSnapshotVersion = 1;

struct Snapshot {
    double time = 0.0;
    std::vector<std::size_t> cells;
    std::vector<std::vector<double>> fields;  // u, v

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (auto c : cells) n *= c;
        return n;
    }
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return x;
}

}  // namespace detail

inline std::string encode_snapshot(const Snapshot& s) {
    if (s.cells.empty() || s.cells.size() > kMaxDim) throw InvalidArgument("snapshot: dimension must be 1..4");
    if (s.fields.empty() || s.fields.size() > 255) throw InvalidArgument("snapshot: need 1..255 fields");
    const std::size_t n = s.cell_count();
    for (const auto& f : s.fields)
        if (f.size() != n) throw DimensionMismatch("snapshot: field size differs from cell count");
    std::string out(kSnapshotMagic, sizeof kSnapshotMagic);
    out.push_back(static_cast<char>(kSnapshotVersion));
    out.push_back(static_cast<char>(s.cells.size()));
    for (auto c : s.cells) detail::put_u64(out, c);
    detail::put_u64(out, std::bit_cast<std::uint64_t>(s.time));
    out.push_back(static_cast<char>(s.fields.size()));
    for (const auto& f : s.fields)
        for (double x : f) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

inline Snapshot decode_snapshot(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();
    auto need = [&](std::size_t end, const char* what) {
        if (size < end) throw FormatError(std::string("snapshot: truncated ") + what);
    };
    need(sizeof kSnapshotMagic, "magic");
    if (std::memcmp(p, kSnapshotMagic, sizeof kSnapshotMagic) != 0) throw FormatError("snapshot: bad magic");
    std::size_t at = sizeof kSnapshotMagic;
    need(at + 2, "header");
    const std::uint8_t version = p[at++];
    if (version != kSnapshotVersion) {
        throw FormatError("snapshot: unsupported format version " + std::to_string(version));
    }
    const std::uint8_t dim = p[at++];
    if (dim == 0 || dim > kMaxDim) throw FormatError("snapshot: dimension " + std::to_string(dim) + " out of range");
    Snapshot s;
    need(at + 8 * dim + 8 + 1, "header");
    std::uint64_t total = 1;
    for (std::uint8_t a = 0; a < dim; ++a, at += 8) {
        const std::uint64_t c = detail::get_u64(p + at);
        if (c == 0 || c > (std::uint64_t{1} << 32)) throw FormatError("snapshot: cell count out of range");
        total *= c;
        if (total > (std::uint64_t{1} << 40)) throw FormatError("snapshot: cell count out of range");
        s.cells.push_back(static_cast<std::size_t>(c));
    }
    s.time = std::bit_cast<double>(detail::get_u64(p + at));
    at += 8;
    const std::uint8_t nf = p[at++];
    if (nf == 0) throw FormatError("snapshot: no fields");
    const std::uint64_t payload = total * nf * 8;
    if (size - at != payload) {
        throw FormatError("snapshot: payload is " + std::to_string(size - at) + " bytes, header declares " +
                          std::to_string(payload));
    }
    for (std::uint8_t f = 0; f < nf; ++f) {
        std::vector<double> v(static_cast<std::size_t>(total));
        for (auto& x : v) {
            x = std::bit_cast<double>(detail::get_u64(p + at));
            at += 8;
        }
        s.fields.push_back(std::move(v));
    }
    return s;
}

inline void write_snapshot(const std::string& path, const Snapshot& s) { write_text_file(path, encode_snapshot(s)); }

inline Snapshot read_snapshot(const std::string& path) { return decode_snapshot(read_text_file(path)); }

inline Snapshot snapshot_of(const Frame& f) {
    return Snapshot{f.time, f.u.grid().cell_counts(), {f.u.storage(), f.v.storage()}};
}

/// Frame on `grid`; the snapshot must carry u and v on matching cell counts.
inline Frame frame_of(const Snapshot& s, const GridPtr& grid, std::size_t step = 0) {
    if (s.cells != grid->cell_counts()) throw DimensionMismatch("snapshot: cell counts differ from grid");
    if (s.fields.size() != 2) throw FormatError("snapshot: expected fields u and v");
    return Frame{s.time, step, ScalarField(grid, s.fields[0]), ScalarField(grid, s.fields[1])};
}

}  // namespace rclab::io
