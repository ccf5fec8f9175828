#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "driftpath/hex/index.hpp"
#include "testutil.hpp"

// Cross-checks against fixtures captured from the reference implementation of
// the cell indexing scheme (point lookups, cell centers, boundary rings).

namespace hex = driftpath::hex;

namespace {

constexpr double kDegPerRad = 57.29577951308232;
constexpr double kRadPerDeg = 1.0 / kDegPerRad;

std::uint64_t parse_hex(const std::string& s) {
    return std::strtoull(s.c_str(), nullptr, 16);
}

}  // namespace

TEST_CASE("point to cell matches the reference fixtures bit for bit") {
    const auto rows = testutil::read_csv(testutil::fixture_path("hex_point_cell.csv"));
    REQUIRE(rows.size() >= 400);
    for (const auto& r : rows) {
        REQUIRE(r.size() == 4);
        const int res = std::atoi(r[0].c_str());
        const double lat = std::stod(r[1]);
        const double lng = std::stod(r[2]);
        const std::uint64_t want = parse_hex(r[3]);
        const hex::CellIndex got =
            hex::lat_lng_to_cell({lat * kRadPerDeg, lng * kRadPerDeg}, res);
        INFO("res " << res << " lat " << lat << " lng " << lng);
        CHECK(got == want);
        CHECK(hex::get_resolution(got) == res);
        CHECK(hex::is_valid_cell(got));
    }
}

TEST_CASE("cell centers match the reference fixtures") {
    const auto rows = testutil::read_csv(testutil::fixture_path("hex_cell_center.csv"));
    REQUIRE(rows.size() >= 350);
    for (const auto& r : rows) {
        REQUIRE(r.size() == 3);
        const std::uint64_t cell = parse_hex(r[0]);
        const double want_lat = std::stod(r[1]);
        const double want_lng = std::stod(r[2]);
        const hex::LatLngRad got = hex::cell_to_lat_lng(cell);
        INFO("cell " << r[0]);
        CHECK(std::fabs(got.lat * kDegPerRad - want_lat) < 1e-9);
        CHECK(std::fabs(got.lng * kDegPerRad - want_lng) < 1e-9);
    }
}

TEST_CASE("cell boundaries match the reference fixtures") {
    const auto rows = testutil::read_csv(testutil::fixture_path("hex_cell_boundary.csv"));
    REQUIRE(rows.size() >= 1900);

    std::map<std::uint64_t, std::vector<std::pair<double, double>>> by_cell;
    for (const auto& r : rows) {
        REQUIRE(r.size() == 4);
        const std::uint64_t cell = parse_hex(r[0]);
        const std::size_t vertex = static_cast<std::size_t>(std::atoi(r[1].c_str()));
        auto& verts = by_cell[cell];
        if (verts.size() <= vertex) verts.resize(vertex + 1);
        verts[vertex] = {std::stod(r[2]), std::stod(r[3])};
    }
    REQUIRE(by_cell.size() >= 300);

    for (const auto& [cell, verts] : by_cell) {
        const hex::CellBoundary got = hex::cell_to_boundary(cell);
        INFO("cell " << std::hex << cell);
        REQUIRE(static_cast<std::size_t>(got.num_verts) == verts.size());
        CHECK(got.num_verts >= 5);
        CHECK(got.num_verts <= hex::kMaxBoundaryVerts);
        for (int i = 0; i < got.num_verts; ++i) {
            CHECK(std::fabs(got.verts[i].lat * kDegPerRad - verts[i].first) < 1e-9);
            CHECK(std::fabs(got.verts[i].lng * kDegPerRad - verts[i].second) < 1e-9);
        }
    }
}

TEST_CASE("obvious garbage is not a valid cell") {
    CHECK_FALSE(hex::is_valid_cell(0));
    CHECK_FALSE(hex::is_valid_cell(~0ULL));
    CHECK_FALSE(hex::is_valid_cell(1ULL << 63));          // reserved high bit set
    CHECK_FALSE(hex::is_valid_cell(0x08001fffffffffffULL | (2ULL << 59)));  // wrong mode
    // Base cell out of range.
    CHECK_FALSE(hex::is_valid_cell(hex::detail::set_base_cell(hex::detail::kCellDefault, 122)));
}

TEST_CASE("exactly twelve base cells are pentagons") {
    int pentagons = 0;
    for (int b = 0; b < hex::kNumBaseCells; ++b) {
        const hex::CellIndex c = hex::detail::set_base_cell(hex::detail::kCellDefault, b);
        REQUIRE(hex::is_valid_cell(c));
        if (hex::is_pentagon(c)) {
            ++pentagons;
            const hex::CellBoundary ring = hex::cell_to_boundary(c);
            CHECK(ring.num_verts >= 5);  // five sides plus any face-crossing points
            // The center child chain stays pentagonal.
            const hex::LatLngRad center = hex::cell_to_lat_lng(c);
            const hex::CellIndex child = hex::lat_lng_to_cell(center, 3);
            CHECK(hex::is_pentagon(child));
        } else {
            CHECK(hex::cell_to_boundary(c).num_verts >= 6);
        }
    }
    CHECK(pentagons == 12);
}

TEST_CASE("resolution is encoded and recoverable") {
    for (int res = 0; res <= 6; ++res) {
        const hex::CellIndex c = hex::lat_lng_to_cell({0.4, -1.2}, res);
        CHECK(hex::get_resolution(c) == res);
        CHECK(hex::is_valid_cell(c));
    }
}
