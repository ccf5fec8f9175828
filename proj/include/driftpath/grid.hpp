#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/geo.hpp"
#include "driftpath/hex/index.hpp"

namespace driftpath {

enum class GridKind { lonlat, hexdggs };

// Opaque cell identifier. Hexdggs cells carry the public hexagonal cell-index
// bit layout unchanged (bit 63 clear), so ids render in standard tooling.
// Lonlat cells set bit 63 and pack the cell size (millidegrees, 19 bits) and
// the row-major cell code (44 bits); the two kinds can never collide.
struct CellId {
    std::uint64_t value = 0;

    friend constexpr bool operator==(const CellId&, const CellId&) = default;
    friend constexpr auto operator<=>(const CellId&, const CellId&) = default;
};

inline std::string to_hex_string(CellId c) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%" PRIx64, c.value);
    return buf;
}

inline CellId parse_cell(const std::string& s) {
    if (s.empty()) throw DataError("empty cell id");
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(s.c_str(), &end, 16);
    if (end == nullptr || *end != '\0') throw DataError("malformed cell id: " + s);
    return {v};
}

namespace detail {
inline constexpr std::uint64_t kLonLatTag = 1ULL << 63;
inline constexpr int kLonLatSizeShift = 44;
inline constexpr std::uint64_t kLonLatCodeMask = (1ULL << 44) - 1;
}  // namespace detail

// The discretization map: points to cells, cells to centroids and boundary
// rings. Immutable; all operations pure.
class SpatialIndex {
public:
    static SpatialIndex lonlat(double cell_size_deg) {
        const long mdeg = std::lround(cell_size_deg * 1000.0);
        if (mdeg < 1 || std::fabs(cell_size_deg * 1000.0 - static_cast<double>(mdeg)) > 1e-6)
            throw std::invalid_argument("lonlat cell size must be a whole number of millidegrees");
        if (360000 % mdeg != 0 || 180000 % mdeg != 0)
            throw std::invalid_argument("lonlat cell size must divide 360 and 180 degrees");
        SpatialIndex idx;
        idx.kind_ = GridKind::lonlat;
        idx.mdeg_ = static_cast<std::uint32_t>(mdeg);
        return idx;
    }

    static SpatialIndex hexdggs(int resolution = 3) {
        if (resolution < 0 || resolution > hex::kMaxResolution)
            throw std::invalid_argument("hexdggs resolution out of range");
        SpatialIndex idx;
        idx.kind_ = GridKind::hexdggs;
        idx.resolution_ = resolution;
        return idx;
    }

    GridKind kind() const { return kind_; }
    int resolution() const { return resolution_; }
    double cell_size_deg() const { return mdeg_ / 1000.0; }

    CellId cell_of(const GeoPoint& p) const {
        if (kind_ == GridKind::hexdggs) {
            const hex::CellIndex h =
                hex::lat_lng_to_cell({p.lat * kRadPerDeg, p.lon * kRadPerDeg}, resolution_);
            return {h};
        }
        const double deg = cell_size_deg();
        const std::int64_t ncols = 360000 / mdeg_;
        const std::int64_t nrows = 180000 / mdeg_;
        std::int64_t col = static_cast<std::int64_t>(std::floor((p.lon + 180.0) / deg));
        std::int64_t row = static_cast<std::int64_t>(std::floor((p.lat + 90.0) / deg));
        if (col < 0) col = 0;
        if (col >= ncols) col = ncols - 1;
        if (row < 0) row = 0;
        if (row >= nrows) row = nrows - 1;  // lat = 90 folds into the top row
        const std::uint64_t code = static_cast<std::uint64_t>(row * ncols + col);
        return {detail::kLonLatTag |
                (static_cast<std::uint64_t>(mdeg_) << detail::kLonLatSizeShift) | code};
    }

    GeoPoint cell_centroid(CellId c) const {
        if (kind_ == GridKind::hexdggs) {
            check_hex(c);
            const hex::LatLngRad g = hex::cell_to_lat_lng(c.value);
            return make_geo_point(g.lng * kDegPerRad, g.lat * kDegPerRad);
        }
        std::int64_t row, col;
        decode_lonlat(c, row, col);
        const double deg = cell_size_deg();
        return make_geo_point((col + 0.5) * deg - 180.0, (row + 0.5) * deg - 90.0);
    }

    // Boundary ring, counterclockwise, first vertex not repeated at the end.
    // Lonlat cells have 4 vertices; hexdggs cells have 5 (pentagon) or 6,
    // plus any icosahedron-edge crossing points the cell index engine emits.
    std::vector<GeoPoint> cell_boundary(CellId c) const {
        std::vector<GeoPoint> ring;
        if (kind_ == GridKind::hexdggs) {
            check_hex(c);
            const hex::CellBoundary b = hex::cell_to_boundary(c.value);
            ring.reserve(b.num_verts);
            for (int i = 0; i < b.num_verts; ++i)
                ring.push_back(
                    make_geo_point(b.verts[i].lng * kDegPerRad, b.verts[i].lat * kDegPerRad));
            return ring;
        }
        std::int64_t row, col;
        decode_lonlat(c, row, col);
        const double deg = cell_size_deg();
        const double w = col * deg - 180.0;
        const double e = (col + 1) * deg - 180.0;
        const double s = row * deg - 90.0;
        const double n = (row + 1) * deg - 90.0;
        ring.push_back(make_geo_point(w, s));
        ring.push_back(make_geo_point(e, s));
        ring.push_back(make_geo_point(e, n));
        ring.push_back(make_geo_point(w, n));
        return ring;
    }

    // True when the id could have been produced by this index.
    bool owns(CellId c) const {
        if (kind_ == GridKind::hexdggs)
            return (c.value & detail::kLonLatTag) == 0 && hex::is_valid_cell(c.value) &&
                   hex::get_resolution(c.value) == resolution_;
        if ((c.value & detail::kLonLatTag) == 0) return false;
        const std::uint32_t mdeg =
            static_cast<std::uint32_t>((c.value >> detail::kLonLatSizeShift) & 0x7FFFF);
        if (mdeg != mdeg_) return false;
        const std::int64_t ncells = (360000 / mdeg_) * (180000 / mdeg_);
        return static_cast<std::int64_t>(c.value & detail::kLonLatCodeMask) < ncells;
    }

    friend bool operator==(const SpatialIndex& a, const SpatialIndex& b) {
        return a.kind_ == b.kind_ && a.mdeg_ == b.mdeg_ && a.resolution_ == b.resolution_;
    }

private:
    SpatialIndex() = default;

    void check_hex(CellId c) const {
        if (!owns(c))
            throw std::invalid_argument("cell id " + to_hex_string(c) +
                                        " does not belong to this grid");
    }

    void decode_lonlat(CellId c, std::int64_t& row, std::int64_t& col) const {
        if (!owns(c))
            throw std::invalid_argument("cell id " + to_hex_string(c) +
                                        " does not belong to this grid");
        const std::int64_t ncols = 360000 / mdeg_;
        const std::int64_t code = static_cast<std::int64_t>(c.value & detail::kLonLatCodeMask);
        row = code / ncols;
        col = code % ncols;
    }

    GridKind kind_ = GridKind::hexdggs;
    std::uint32_t mdeg_ = 0;     // lonlat cell size in millidegrees
    int resolution_ = 3;         // hexdggs resolution level
};

}  // namespace driftpath

template <>
struct std::hash<driftpath::CellId> {
    std::size_t operator()(const driftpath::CellId& c) const noexcept {
        return std::hash<std::uint64_t>{}(c.value);
    }
};
