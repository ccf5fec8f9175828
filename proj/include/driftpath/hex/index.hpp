/*
 * Copyright 2016-2023 Uber Technologies, Inc.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// C++ port of the subset of the H3 cell-index specification needed here:
// point -> cell, cell -> center point, cell -> boundary polygon, validation.
// The arithmetic follows the reference implementation expression by
// expression so that indices and vertices agree bit-for-bit with upstream
// builds on the same libm. Aperture-7/aperture-3 hexagon math on icosahedron
// faces, with pentagon subsequence rotations and face-overage adjustment.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "driftpath/hex/tables.hpp"

namespace driftpath::hex {

using CellIndex = std::uint64_t;

struct LatLngRad {
    double lat;
    double lng;
};

// Cells have at most 6 topological vertices plus up to 4 distortion vertices
// where a Class III cell edge crosses icosahedron edges.
inline constexpr int kMaxBoundaryVerts = 10;

struct CellBoundary {
    int num_verts = 0;
    LatLngRad verts[kMaxBoundaryVerts];
};

inline constexpr int kMaxResolution = 15;
inline constexpr int kNumBaseCells = 122;

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;
inline constexpr double kHalfPi = 1.5707963267948966;
inline constexpr double kEpsilon = 0.0000000000000001;
inline constexpr double kSqrt7 = 2.6457513110645905905016157536392604257102;
inline constexpr double kSin60 = 0.8660254037844386467637231707529361834714;
inline constexpr double kSqrt3_2 = kSin60;
inline constexpr double kRes0UGnomonic = 0.38196601125010500003;
inline constexpr double kAp7RotRads = 0.333473172251832115336090755351601070065900389;

// ----------------------------------------------------------------------------
// Index bit layout: [63] reserved, [59..62] mode, [56..58] reserved,
// [52..55] resolution, [45..51] base cell, then fifteen 3-bit digits
// (resolution r digit at offset (15-r)*3). Unused digits hold 0b111.
// ----------------------------------------------------------------------------

inline constexpr CellIndex kCellDefault = 0x08001fffffffffffULL;
inline constexpr int kCellMode = 1;

inline constexpr int resolution_of(CellIndex h) {
    return static_cast<int>((h >> 52) & 0xF);
}

inline constexpr CellIndex set_resolution(CellIndex h, int res) {
    return (h & ~(CellIndex{0xF} << 52)) | (static_cast<CellIndex>(res) << 52);
}

inline constexpr int base_cell_of(CellIndex h) {
    return static_cast<int>((h >> 45) & 0x7F);
}

inline constexpr CellIndex set_base_cell(CellIndex h, int cell) {
    return (h & ~(CellIndex{0x7F} << 45)) | (static_cast<CellIndex>(cell) << 45);
}

inline constexpr int digit_of(CellIndex h, int res) {
    return static_cast<int>((h >> ((kMaxResolution - res) * 3)) & 0x7);
}

inline constexpr CellIndex set_digit(CellIndex h, int res, int digit) {
    const int off = (kMaxResolution - res) * 3;
    return (h & ~(CellIndex{0x7} << off)) | (static_cast<CellIndex>(digit) << off);
}

inline constexpr int mode_of(CellIndex h) {
    return static_cast<int>((h >> 59) & 0xF);
}

// Digits 0..6: center, K, J, JK, I, IK, IJ.
enum Digit : int {
    kCenter = 0,
    kK = 1,
    kJ = 2,
    kJK = 3,
    kI = 4,
    kIK = 5,
    kIJ = 6,
};

inline int leading_nonzero_digit(CellIndex h) {
    const int res = resolution_of(h);
    for (int r = 1; r <= res; ++r) {
        if (const int d = digit_of(h, r); d != 0) return d;
    }
    return kCenter;
}

inline constexpr int rotate60ccw_digit(int digit) {
    switch (digit) {
        case kK: return kIK;
        case kIK: return kI;
        case kI: return kIJ;
        case kIJ: return kJ;
        case kJ: return kJK;
        case kJK: return kK;
        default: return digit;
    }
}

inline constexpr int rotate60cw_digit(int digit) {
    switch (digit) {
        case kK: return kJK;
        case kJK: return kJ;
        case kJ: return kIJ;
        case kIJ: return kI;
        case kI: return kIK;
        case kIK: return kK;
        default: return digit;
    }
}

inline CellIndex rotate60ccw(CellIndex h) {
    const int res = resolution_of(h);
    for (int r = 1; r <= res; ++r) h = set_digit(h, r, rotate60ccw_digit(digit_of(h, r)));
    return h;
}

inline CellIndex rotate60cw(CellIndex h) {
    const int res = resolution_of(h);
    for (int r = 1; r <= res; ++r) h = set_digit(h, r, rotate60cw_digit(digit_of(h, r)));
    return h;
}

// Pentagonal rotation: a plain 60 degree rotation, plus one more whenever the
// leading digit lands on the deleted K-axis subsequence.
inline CellIndex rotate_pent60ccw(CellIndex h) {
    const int res = resolution_of(h);
    bool found_first = false;
    for (int r = 1; r <= res; ++r) {
        h = set_digit(h, r, rotate60ccw_digit(digit_of(h, r)));
        if (!found_first && digit_of(h, r) != 0) {
            found_first = true;
            if (leading_nonzero_digit(h) == kK) h = rotate60ccw(h);
        }
    }
    return h;
}

inline CellIndex rotate_pent60cw(CellIndex h) {
    const int res = resolution_of(h);
    bool found_first = false;
    for (int r = 1; r <= res; ++r) {
        h = set_digit(h, r, rotate60cw_digit(digit_of(h, r)));
        if (!found_first && digit_of(h, r) != 0) {
            found_first = true;
            if (leading_nonzero_digit(h) == kK) h = rotate60cw(h);
        }
    }
    return h;
}

inline constexpr bool is_class3(int res) { return res % 2 == 1; }

// ----------------------------------------------------------------------------
// IJK coordinate arithmetic.
// ----------------------------------------------------------------------------

struct CoordIJK {
    int i = 0;
    int j = 0;
    int k = 0;

    friend constexpr bool operator==(const CoordIJK&, const CoordIJK&) = default;
};

inline void normalize(CoordIJK& c) {
    if (c.i < 0) {
        c.j -= c.i;
        c.k -= c.i;
        c.i = 0;
    }
    if (c.j < 0) {
        c.i -= c.j;
        c.k -= c.j;
        c.j = 0;
    }
    if (c.k < 0) {
        c.i -= c.k;
        c.j -= c.k;
        c.k = 0;
    }
    int min = c.i;
    if (c.j < min) min = c.j;
    if (c.k < min) min = c.k;
    if (min > 0) {
        c.i -= min;
        c.j -= min;
        c.k -= min;
    }
}

inline CoordIJK add(const CoordIJK& a, const CoordIJK& b) {
    return {a.i + b.i, a.j + b.j, a.k + b.k};
}

inline CoordIJK sub(const CoordIJK& a, const CoordIJK& b) {
    return {a.i - b.i, a.j - b.j, a.k - b.k};
}

inline CoordIJK scale(const CoordIJK& a, int f) { return {a.i * f, a.j * f, a.k * f}; }

inline constexpr CoordIJK digit_coord(int digit) {
    return {(digit >> 2) & 1, (digit >> 1) & 1, digit & 1};
}

inline int unit_ijk_to_digit(const CoordIJK& c) {
    CoordIJK u = c;
    normalize(u);
    if (u.i > 1 || u.j > 1 || u.k > 1) throw std::logic_error("non-unit ijk vector");
    return (u.i << 2) | (u.j << 1) | u.k;
}

inline void neighbor(CoordIJK& c, int digit) {
    c = add(c, digit_coord(digit));
    normalize(c);
}

inline void rotate60ccw(CoordIJK& c) {
    CoordIJK r = add(add(scale({1, 1, 0}, c.i), scale({0, 1, 1}, c.j)), scale({1, 0, 1}, c.k));
    normalize(r);
    c = r;
}

inline void rotate60cw(CoordIJK& c) {
    CoordIJK r = add(add(scale({1, 0, 1}, c.i), scale({1, 1, 0}, c.j)), scale({0, 1, 1}, c.k));
    normalize(r);
    c = r;
}

// Aperture-7 and aperture-3 resolution steps (plain and reverse orientation).
inline void down_ap7(CoordIJK& c) {
    CoordIJK r = add(add(scale({3, 0, 1}, c.i), scale({1, 3, 0}, c.j)), scale({0, 1, 3}, c.k));
    normalize(r);
    c = r;
}

inline void down_ap7r(CoordIJK& c) {
    CoordIJK r = add(add(scale({3, 1, 0}, c.i), scale({0, 3, 1}, c.j)), scale({1, 0, 3}, c.k));
    normalize(r);
    c = r;
}

inline void down_ap3(CoordIJK& c) {
    CoordIJK r = add(add(scale({2, 0, 1}, c.i), scale({1, 2, 0}, c.j)), scale({0, 1, 2}, c.k));
    normalize(r);
    c = r;
}

inline void down_ap3r(CoordIJK& c) {
    CoordIJK r = add(add(scale({2, 1, 0}, c.i), scale({0, 2, 1}, c.j)), scale({1, 0, 2}, c.k));
    normalize(r);
    c = r;
}

inline void up_ap7(CoordIJK& c) {
    const int i = c.i - c.k;
    const int j = c.j - c.k;
    c.i = static_cast<int>(std::round((3 * i - j) / 7.0));
    c.j = static_cast<int>(std::round((i + 2 * j) / 7.0));
    c.k = 0;
    normalize(c);
}

inline void up_ap7r(CoordIJK& c) {
    const int i = c.i - c.k;
    const int j = c.j - c.k;
    c.i = static_cast<int>(std::round((2 * i + j) / 7.0));
    c.j = static_cast<int>(std::round((3 * j - i) / 7.0));
    c.k = 0;
    normalize(c);
}

// ----------------------------------------------------------------------------
// Planar hex grid <-> face-local 2D Cartesian.
// ----------------------------------------------------------------------------

struct Vec2d {
    double x = 0.0;
    double y = 0.0;
};

inline double magnitude(const Vec2d& v) { return std::sqrt(v.x * v.x + v.y * v.y); }

inline bool v2d_almost_equals(const Vec2d& a, const Vec2d& b) {
    constexpr double kTol = 1.1920928955078125e-07;  // FLT_EPSILON
    return std::fabs(a.x - b.x) < kTol && std::fabs(a.y - b.y) < kTol;
}

inline Vec2d intersect(const Vec2d& p0, const Vec2d& p1, const Vec2d& p2, const Vec2d& p3) {
    Vec2d s1{p1.x - p0.x, p1.y - p0.y};
    Vec2d s2{p3.x - p2.x, p3.y - p2.y};
    const double t = (s2.x * (p0.y - p2.y) - s2.y * (p0.x - p2.x)) / (-s2.x * s1.y + s1.x * s2.y);
    return {p0.x + t * s1.x, p0.y + t * s1.y};
}

inline Vec2d ijk_to_hex2d(const CoordIJK& c) {
    const int i = c.i - c.k;
    const int j = c.j - c.k;
    return {i - 0.5 * j, j * kSqrt3_2};
}

// Quantize a face-local 2D point onto the hex grid (DGGRID rounding).
inline CoordIJK hex2d_to_ijk(const Vec2d& v) {
    CoordIJK h;
    h.k = 0;

    const double a1 = std::fabs(v.x);
    const double a2 = std::fabs(v.y);

    const double x2 = a2 / kSin60;
    const double x1 = a1 + x2 / 2.0;

    const int m1 = static_cast<int>(x1);
    const int m2 = static_cast<int>(x2);

    const double r1 = x1 - m1;
    const double r2 = x2 - m2;

    if (r1 < 0.5) {
        if (r1 < 1.0 / 3.0) {
            if (r2 < (1.0 + r1) / 2.0) {
                h.i = m1;
                h.j = m2;
            } else {
                h.i = m1;
                h.j = m2 + 1;
            }
        } else {
            h.j = (r2 < (1.0 - r1)) ? m2 : m2 + 1;
            h.i = ((1.0 - r1) <= r2 && r2 < (2.0 * r1)) ? m1 + 1 : m1;
        }
    } else {
        if (r1 < 2.0 / 3.0) {
            h.j = (r2 < (1.0 - r1)) ? m2 : m2 + 1;
            h.i = ((2.0 * r1 - 1.0) < r2 && r2 < (1.0 - r1)) ? m1 : m1 + 1;
        } else {
            h.i = m1 + 1;
            h.j = (r2 < (r1 / 2.0)) ? m2 : m2 + 1;
        }
    }

    // Fold across the axes if necessary.
    if (v.x < 0.0) {
        if ((h.j % 2) == 0) {
            const long long axisi = h.j / 2;
            const long long diff = h.i - axisi;
            h.i = static_cast<int>(h.i - 2 * diff);
        } else {
            const long long axisi = (h.j + 1) / 2;
            const long long diff = h.i - axisi;
            h.i = static_cast<int>(h.i - (2 * diff + 1));
        }
    }
    if (v.y < 0.0) {
        h.i = h.i - (2 * h.j + 1) / 2;
        h.j = -h.j;
    }

    normalize(h);
    return h;
}

// ----------------------------------------------------------------------------
// Spherical helpers.
// ----------------------------------------------------------------------------

inline double pos_angle(double rads) {
    double tmp = (rads < 0.0) ? rads + kTwoPi : rads;
    if (rads >= kTwoPi) tmp -= kTwoPi;
    return tmp;
}

inline double constrain_lng(double lng) {
    while (lng > kPi) lng = lng - 2 * kPi;
    while (lng < -kPi) lng = lng + 2 * kPi;
    return lng;
}

inline double geo_azimuth(const LatLngRad& p1, const LatLngRad& p2) {
    return std::atan2(
        std::cos(p2.lat) * std::sin(p2.lng - p1.lng),
        std::cos(p1.lat) * std::sin(p2.lat) -
            std::sin(p1.lat) * std::cos(p2.lat) * std::cos(p2.lng - p1.lng));
}

inline LatLngRad geo_az_distance(const LatLngRad& p1, double az, double distance) {
    if (distance < kEpsilon) return p1;

    LatLngRad p2;
    az = pos_angle(az);

    if (az < kEpsilon || std::fabs(az - kPi) < kEpsilon) {
        // Due north/south.
        p2.lat = (az < kEpsilon) ? p1.lat + distance : p1.lat - distance;
        if (std::fabs(p2.lat - kHalfPi) < kEpsilon) {
            p2.lat = kHalfPi;
            p2.lng = 0.0;
        } else if (std::fabs(p2.lat + kHalfPi) < kEpsilon) {
            p2.lat = -kHalfPi;
            p2.lng = 0.0;
        } else {
            p2.lng = constrain_lng(p1.lng);
        }
    } else {
        double sinlat = std::sin(p1.lat) * std::cos(distance) +
                        std::cos(p1.lat) * std::sin(distance) * std::cos(az);
        if (sinlat > 1.0) sinlat = 1.0;
        if (sinlat < -1.0) sinlat = -1.0;
        p2.lat = std::asin(sinlat);
        if (std::fabs(p2.lat - kHalfPi) < kEpsilon) {
            p2.lat = kHalfPi;
            p2.lng = 0.0;
        } else if (std::fabs(p2.lat + kHalfPi) < kEpsilon) {
            p2.lat = -kHalfPi;
            p2.lng = 0.0;
        } else {
            double sinlng = std::sin(az) * std::sin(distance) / std::cos(p2.lat);
            double coslng = (std::cos(distance) - std::sin(p1.lat) * std::sin(p2.lat)) /
                            std::cos(p1.lat) / std::cos(p2.lat);
            if (sinlng > 1.0) sinlng = 1.0;
            if (sinlng < -1.0) sinlng = -1.0;
            if (coslng > 1.0) coslng = 1.0;
            if (coslng < -1.0) coslng = -1.0;
            p2.lng = constrain_lng(p1.lng + std::atan2(sinlng, coslng));
        }
    }
    return p2;
}

// ----------------------------------------------------------------------------
// Face-centered gnomonic projection.
// ----------------------------------------------------------------------------

struct FaceIJK {
    int face = 0;
    CoordIJK coord;
};

inline void geo_to_closest_face(const LatLngRad& g, int& face, double& sqd) {
    const double r = std::cos(g.lat);
    const double x = std::cos(g.lng) * r;
    const double y = std::sin(g.lng) * r;
    const double z = std::sin(g.lat);

    face = 0;
    double best = 5.0;
    for (int f = 0; f < 20; ++f) {
        const double dx = tables::kFaceCenterXyz[f][0] - x;
        const double dy = tables::kFaceCenterXyz[f][1] - y;
        const double dz = tables::kFaceCenterXyz[f][2] - z;
        const double d = dx * dx + dy * dy + dz * dz;
        if (d < best) {
            face = f;
            best = d;
        }
    }
    sqd = best;
}

inline Vec2d geo_to_hex2d(const LatLngRad& g, int res, int& face) {
    double sqd;
    geo_to_closest_face(g, face, sqd);

    double r = std::acos(1 - sqd / 2);
    if (r < kEpsilon) return {0.0, 0.0};

    const LatLngRad center{tables::kFaceCenterGeo[face][0], tables::kFaceCenterGeo[face][1]};
    double theta =
        pos_angle(tables::kFaceAxesAzRadsCii[face][0] - pos_angle(geo_azimuth(center, g)));
    if (is_class3(res)) theta = pos_angle(theta - kAp7RotRads);

    r = std::tan(r);
    r /= kRes0UGnomonic;
    for (int i = 0; i < res; ++i) r *= kSqrt7;

    return {r * std::cos(theta), r * std::sin(theta)};
}

// res may be an adjusted (substrate) resolution up to 16.
inline LatLngRad hex2d_to_geo(const Vec2d& v, int face, int res, bool substrate) {
    double r = magnitude(v);
    if (r < kEpsilon)
        return {tables::kFaceCenterGeo[face][0], tables::kFaceCenterGeo[face][1]};

    double theta = std::atan2(v.y, v.x);

    for (int i = 0; i < res; ++i) r /= kSqrt7;
    if (substrate) {
        r /= 3.0;
        if (is_class3(res)) r /= kSqrt7;
    }
    r *= kRes0UGnomonic;
    r = std::atan(r);

    if (!substrate && is_class3(res)) theta = pos_angle(theta + kAp7RotRads);
    theta = pos_angle(tables::kFaceAxesAzRadsCii[face][0] - theta);

    const LatLngRad center{tables::kFaceCenterGeo[face][0], tables::kFaceCenterGeo[face][1]};
    return geo_az_distance(center, theta, r);
}

// ----------------------------------------------------------------------------
// Face overage: move coordinates that spill past a face edge onto the
// neighboring face's coordinate system.
// ----------------------------------------------------------------------------

enum class Overage { kNone, kFaceEdge, kNewFace };

inline int adjacent_face_dir(int from, int to) {
    return tables::kAdjacentFaceDir[from][to];
}

inline Overage adjust_overage_class2(FaceIJK& fijk, int res, bool pent_leading4, bool substrate) {
    Overage overage = Overage::kNone;
    CoordIJK& ijk = fijk.coord;

    int max_dim = tables::kMaxDimByCiiRes[res];
    if (substrate) max_dim *= 3;

    if (substrate && ijk.i + ijk.j + ijk.k == max_dim) {
        overage = Overage::kFaceEdge;
    } else if (ijk.i + ijk.j + ijk.k > max_dim) {
        overage = Overage::kNewFace;

        const tables::FaceOrientIjk* orient;
        if (ijk.k > 0) {
            if (ijk.j > 0) {
                orient = &tables::kFaceNeighbors[fijk.face][3];  // JK quadrant
            } else {
                orient = &tables::kFaceNeighbors[fijk.face][2];  // KI quadrant
                // Adjust for the pentagonal missing sequence.
                if (pent_leading4) {
                    const CoordIJK origin{max_dim, 0, 0};
                    CoordIJK tmp = sub(ijk, origin);
                    rotate60cw(tmp);
                    ijk = add(tmp, origin);
                }
            }
        } else {
            orient = &tables::kFaceNeighbors[fijk.face][1];  // IJ quadrant
        }

        fijk.face = orient->face;
        for (int i = 0; i < orient->ccw_rot60; ++i) rotate60ccw(ijk);

        CoordIJK trans{orient->translate.i, orient->translate.j, orient->translate.k};
        int unit_scale = tables::kUnitScaleByCiiRes[res];
        if (substrate) unit_scale *= 3;
        trans = scale(trans, unit_scale);
        ijk = add(ijk, trans);
        normalize(ijk);

        // Overage points on pentagon boundaries can end up on edges.
        if (substrate && ijk.i + ijk.j + ijk.k == max_dim) overage = Overage::kFaceEdge;
    }

    return overage;
}

inline void adjust_pent_vert_overage(FaceIJK& fijk, int res) {
    while (adjust_overage_class2(fijk, res, false, true) == Overage::kNewFace) {
    }
}

// ----------------------------------------------------------------------------
// FaceIJK <-> cell index.
// ----------------------------------------------------------------------------

inline CellIndex face_ijk_to_cell(const FaceIJK& fijk_in, int res) {
    CellIndex h = set_resolution(kCellDefault, res);

    FaceIJK fijk = fijk_in;
    if (res == 0) {
        if (fijk.coord.i > 2 || fijk.coord.j > 2 || fijk.coord.k > 2)
            throw std::logic_error("face coordinate out of range");
        const auto& rot =
            tables::kFaceIjkBaseCells[fijk.face][fijk.coord.i][fijk.coord.j][fijk.coord.k];
        return set_base_cell(h, rot.base_cell);
    }

    // Build the index digits from the finest resolution up; the coordinates
    // that remain are the base cell's in this face's system.
    CoordIJK& ijk = fijk.coord;
    for (int r = res; r >= 1; --r) {
        const CoordIJK last = ijk;
        CoordIJK center;
        if (is_class3(r)) {
            up_ap7(ijk);
            center = ijk;
            down_ap7(center);
        } else {
            up_ap7r(ijk);
            center = ijk;
            down_ap7r(center);
        }
        CoordIJK diff = sub(last, center);
        normalize(diff);
        h = set_digit(h, r, unit_ijk_to_digit(diff));
    }

    if (ijk.i > 2 || ijk.j > 2 || ijk.k > 2)
        throw std::logic_error("face coordinate out of range");
    const auto& rot = tables::kFaceIjkBaseCells[fijk.face][ijk.i][ijk.j][ijk.k];
    h = set_base_cell(h, rot.base_cell);

    // Rotate into the canonical orientation of the base cell.
    const auto& base = tables::kBaseCells[rot.base_cell];
    if (base.pentagon) {
        // Force rotation out of the missing K-axis subsequence.
        if (leading_nonzero_digit(h) == kK) {
            const bool cw_offset =
                fijk.face == base.cw_offset_face0 || fijk.face == base.cw_offset_face1;
            h = cw_offset ? rotate60cw(h) : rotate60ccw(h);
        }
        for (int i = 0; i < rot.ccw_rot60; ++i) h = rotate_pent60ccw(h);
    } else {
        for (int i = 0; i < rot.ccw_rot60; ++i) h = rotate60ccw(h);
    }

    return h;
}

// Unfolds a cell index onto its base cell's home face; returns whether the
// result may overage onto an adjacent face.
inline bool cell_to_face_ijk_home(CellIndex h, FaceIJK& fijk) {
    const auto& base = tables::kBaseCells[base_cell_of(h)];
    fijk.face = base.home_face;
    fijk.coord = {base.home.i, base.home.j, base.home.k};

    const int res = resolution_of(h);
    const bool possible_overage =
        base.pentagon || !(res == 0 || (fijk.coord.i == 0 && fijk.coord.j == 0 && fijk.coord.k == 0));

    for (int r = 1; r <= res; ++r) {
        if (is_class3(r)) {
            down_ap7(fijk.coord);
        } else {
            down_ap7r(fijk.coord);
        }
        neighbor(fijk.coord, digit_of(h, r));
    }

    return possible_overage;
}

inline bool is_pentagon_index(CellIndex h) {
    const auto& base = tables::kBaseCells[base_cell_of(h)];
    return base.pentagon && leading_nonzero_digit(h) == kCenter;
}

inline FaceIJK cell_to_face_ijk(CellIndex h) {
    const int base_cell = base_cell_of(h);
    const auto& base = tables::kBaseCells[base_cell];

    // The deleted K-axis subsequence: all of leading-digit-5 needs adjusting
    // (and some of leading-digit-4, below).
    if (base.pentagon && leading_nonzero_digit(h) == kIK) h = rotate60cw(h);

    FaceIJK fijk;
    if (!cell_to_face_ijk_home(h, fijk)) return fijk;

    const CoordIJK orig = fijk.coord;

    // If in Class III, drop into the next finer Class II grid.
    const int res = resolution_of(h);
    int adj_res = res;
    if (is_class3(adj_res)) {
        down_ap7r(fijk.coord);
        ++adj_res;
    }

    const bool pent_leading4 = base.pentagon && leading_nonzero_digit(h) == kI;
    if (adjust_overage_class2(fijk, adj_res, pent_leading4, false) != Overage::kNone) {
        // A pentagon base cell can overage a second time.
        if (base.pentagon) {
            while (adjust_overage_class2(fijk, adj_res, false, false) != Overage::kNone) {
            }
        }
        if (adj_res != res) up_ap7r(fijk.coord);
    } else if (adj_res != res) {
        fijk.coord = orig;
    }

    return fijk;
}

// ----------------------------------------------------------------------------
// Cell vertices on the aperture-3 substrate grid.
// ----------------------------------------------------------------------------

inline constexpr CoordIJK kVertsCii[6] = {
    {2, 1, 0}, {1, 2, 0}, {0, 2, 1}, {0, 1, 2}, {1, 0, 2}, {2, 0, 1},
};
inline constexpr CoordIJK kVertsCiii[6] = {
    {5, 4, 0}, {1, 5, 0}, {0, 5, 4}, {0, 1, 5}, {4, 0, 5}, {5, 0, 1},
};

// Converts a cell center to the substrate FaceIJK of its vertices; returns the
// adjusted (substrate Class II) resolution.
inline int face_ijk_to_verts(FaceIJK& center, int res, FaceIJK* verts, int num_verts) {
    down_ap3(center.coord);
    down_ap3r(center.coord);

    const CoordIJK* offsets = kVertsCii;
    int adj_res = res;
    if (is_class3(res)) {
        down_ap7r(center.coord);
        adj_res = res + 1;
        offsets = kVertsCiii;
    }

    for (int v = 0; v < num_verts; ++v) {
        verts[v].face = center.face;
        verts[v].coord = add(center.coord, offsets[v]);
        normalize(verts[v].coord);
    }
    return adj_res;
}

inline void hexagon_boundary(const FaceIJK& h, int res, CellBoundary& boundary) {
    FaceIJK center = h;
    FaceIJK verts[6];
    const int adj_res = face_ijk_to_verts(center, res, verts, 6);

    boundary.num_verts = 0;
    int last_face = -1;
    Overage last_overage = Overage::kNone;
    // One extra iteration to catch a distortion vertex on the last edge.
    for (int vert = 0; vert < 7; ++vert) {
        const int v = vert % 6;
        FaceIJK fijk = verts[v];
        const Overage overage = adjust_overage_class2(fijk, adj_res, false, true);

        // Class III cell edges can cross icosahedron edges; each crossing adds
        // a distortion vertex at the intersection with the face edge.
        if (is_class3(res) && vert > 0 && fijk.face != last_face &&
            last_overage != Overage::kFaceEdge) {
            const int last_v = (v + 5) % 6;
            const Vec2d orig2d0 = ijk_to_hex2d(verts[last_v].coord);
            const Vec2d orig2d1 = ijk_to_hex2d(verts[v].coord);

            const int max_dim = tables::kMaxDimByCiiRes[adj_res];
            const Vec2d v0{3.0 * max_dim, 0.0};
            const Vec2d v1{-1.5 * max_dim, 3.0 * kSqrt3_2 * max_dim};
            const Vec2d v2{-1.5 * max_dim, -3.0 * kSqrt3_2 * max_dim};

            const int face2 = (last_face == center.face) ? fijk.face : last_face;
            Vec2d edge0, edge1;
            switch (adjacent_face_dir(center.face, face2)) {
                case 1:  // IJ
                    edge0 = v0;
                    edge1 = v1;
                    break;
                case 3:  // JK
                    edge0 = v1;
                    edge1 = v2;
                    break;
                default:  // KI
                    edge0 = v2;
                    edge1 = v0;
                    break;
            }

            const Vec2d inter = intersect(orig2d0, orig2d1, edge0, edge1);
            // An intersection exactly at a hexagon vertex means both adjacent
            // edges lie on single faces; no extra vertex then.
            const bool at_vertex =
                v2d_almost_equals(orig2d0, inter) || v2d_almost_equals(orig2d1, inter);
            if (!at_vertex)
                boundary.verts[boundary.num_verts++] =
                    hex2d_to_geo(inter, center.face, adj_res, true);
        }

        if (vert < 6) {
            const Vec2d vec = ijk_to_hex2d(fijk.coord);
            boundary.verts[boundary.num_verts++] = hex2d_to_geo(vec, fijk.face, adj_res, true);
        }

        last_face = fijk.face;
        last_overage = overage;
    }
}

inline void pentagon_boundary(const FaceIJK& h, int res, CellBoundary& boundary) {
    FaceIJK center = h;
    FaceIJK verts[5];
    const int adj_res = face_ijk_to_verts(center, res, verts, 5);

    boundary.num_verts = 0;
    FaceIJK last_fijk;
    for (int vert = 0; vert < 6; ++vert) {
        const int v = vert % 5;
        FaceIJK fijk = verts[v];
        adjust_pent_vert_overage(fijk, adj_res);

        // All Class III pentagon edges cross icosahedron edges (Class II
        // pentagons have their vertices on the edges instead).
        if (is_class3(res) && vert > 0) {
            FaceIJK tmp = fijk;
            const Vec2d orig2d0 = ijk_to_hex2d(last_fijk.coord);

            const int to_last = adjacent_face_dir(tmp.face, last_fijk.face);
            const auto& orient = tables::kFaceNeighbors[tmp.face][to_last];
            tmp.face = orient.face;

            for (int i = 0; i < orient.ccw_rot60; ++i) rotate60ccw(tmp.coord);
            CoordIJK trans{orient.translate.i, orient.translate.j, orient.translate.k};
            trans = scale(trans, tables::kUnitScaleByCiiRes[adj_res] * 3);
            tmp.coord = add(tmp.coord, trans);
            normalize(tmp.coord);

            const Vec2d orig2d1 = ijk_to_hex2d(tmp.coord);

            const int max_dim = tables::kMaxDimByCiiRes[adj_res];
            const Vec2d v0{3.0 * max_dim, 0.0};
            const Vec2d v1{-1.5 * max_dim, 3.0 * kSqrt3_2 * max_dim};
            const Vec2d v2{-1.5 * max_dim, -3.0 * kSqrt3_2 * max_dim};

            Vec2d edge0, edge1;
            switch (adjacent_face_dir(tmp.face, fijk.face)) {
                case 1:  // IJ
                    edge0 = v0;
                    edge1 = v1;
                    break;
                case 3:  // JK
                    edge0 = v1;
                    edge1 = v2;
                    break;
                default:  // KI
                    edge0 = v2;
                    edge1 = v0;
                    break;
            }

            const Vec2d inter = intersect(orig2d0, orig2d1, edge0, edge1);
            boundary.verts[boundary.num_verts++] = hex2d_to_geo(inter, tmp.face, adj_res, true);
        }

        if (vert < 5) {
            const Vec2d vec = ijk_to_hex2d(fijk.coord);
            boundary.verts[boundary.num_verts++] = hex2d_to_geo(vec, fijk.face, adj_res, true);
        }

        last_fijk = fijk;
    }
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Public surface.
// ----------------------------------------------------------------------------

inline int get_resolution(CellIndex h) { return detail::resolution_of(h); }

inline int get_base_cell(CellIndex h) { return detail::base_cell_of(h); }

inline bool is_valid_cell(CellIndex h) {
    // Reserved bits (63 and 56..58) must be clear, mode must be cell.
    if ((h >> 56) & 0b10000111) return false;
    if (detail::mode_of(h) != detail::kCellMode) return false;
    if (detail::base_cell_of(h) >= kNumBaseCells) return false;

    const int res = detail::resolution_of(h);
    for (int r = 1; r <= res; ++r)
        if (detail::digit_of(h, r) == 7) return false;
    for (int r = res + 1; r <= kMaxResolution; ++r)
        if (detail::digit_of(h, r) != 7) return false;

    // Pentagons cannot lead with a K-axis digit (deleted subsequence).
    if (tables::kBaseCells[detail::base_cell_of(h)].pentagon &&
        detail::leading_nonzero_digit(h) == detail::kK)
        return false;

    return true;
}

inline bool is_pentagon(CellIndex h) { return detail::is_pentagon_index(h); }

inline CellIndex lat_lng_to_cell(const LatLngRad& g, int res) {
    if (res < 0 || res > kMaxResolution) throw std::invalid_argument("resolution out of range");
    if (!std::isfinite(g.lat) || !std::isfinite(g.lng))
        throw std::invalid_argument("non-finite coordinate");
    int face;
    const detail::Vec2d v = detail::geo_to_hex2d(g, res, face);
    return detail::face_ijk_to_cell({face, detail::hex2d_to_ijk(v)}, res);
}

inline LatLngRad cell_to_lat_lng(CellIndex h) {
    const detail::FaceIJK fijk = detail::cell_to_face_ijk(h);
    const detail::Vec2d v = detail::ijk_to_hex2d(fijk.coord);
    return detail::hex2d_to_geo(v, fijk.face, detail::resolution_of(h), false);
}

inline CellBoundary cell_to_boundary(CellIndex h) {
    const detail::FaceIJK fijk = detail::cell_to_face_ijk(h);
    CellBoundary boundary;
    if (detail::is_pentagon_index(h)) {
        detail::pentagon_boundary(fijk, detail::resolution_of(h), boundary);
    } else {
        detail::hexagon_boundary(fijk, detail::resolution_of(h), boundary);
    }
    return boundary;
}

}  // namespace driftpath::hex
