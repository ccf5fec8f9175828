#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "driftpath/rng.hpp"

namespace driftpath {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegPerRad = 180.0 / kPi;
inline constexpr double kRadPerDeg = kPi / 180.0;

// Longitude-latitude position in degrees. Longitude normalized to
// [-180, 180); latitude in [-90, 90]. At the poles longitude is 0 by
// convention. Construct through make_geo_point to enforce both.
struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
};

inline double normalize_lon(double lon_deg) {
    double l = lon_deg - 360.0 * std::floor((lon_deg + 180.0) / 360.0);
    if (l >= 180.0) l -= 360.0;  // guards floor rounding at the seam
    return l;
}

inline GeoPoint make_geo_point(double lon_deg, double lat_deg) {
    if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
        throw std::invalid_argument("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
    if (!std::isfinite(lon_deg)) throw std::invalid_argument("longitude not finite");
    if (lat_deg == 90.0 || lat_deg == -90.0) return {0.0, lat_deg};
    return {normalize_lon(lon_deg), lat_deg};
}

struct UnitVector3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline UnitVector3 to_cartesian(const GeoPoint& p) {
    const double lon = p.lon * kRadPerDeg;
    const double lat = p.lat * kRadPerDeg;
    const double c = std::cos(lat);
    return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

inline GeoPoint from_cartesian(const UnitVector3& v) {
    const double norm = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (norm < 1e-9) throw std::invalid_argument("cannot project the zero vector to the sphere");
    double z = v.z / norm;
    if (z > 1.0) z = 1.0;
    if (z < -1.0) z = -1.0;
    const double lat = std::asin(z) * kDegPerRad;
    const double lon = std::atan2(v.y, v.x) * kDegPerRad;
    return make_geo_point(lon, lat);
}

// Angular separation in radians (great-circle distance on the unit sphere).
// atan2 of the cross and dot products stays accurate for nearly coincident
// points where acos of the dot product loses ~8 digits.
inline double angular_distance_rad(const GeoPoint& a, const GeoPoint& b) {
    const UnitVector3 u = to_cartesian(a);
    const UnitVector3 v = to_cartesian(b);
    const double cx = u.y * v.z - u.z * v.y;
    const double cy = u.z * v.x - u.x * v.z;
    const double cz = u.x * v.y - u.y * v.x;
    const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
    const double dot = u.x * v.x + u.y * v.y + u.z * v.z;
    return std::atan2(cross, dot);
}

// Rigid rotation of the sphere, stored as a unit quaternion plus the derived
// orthogonal matrix (determinant +1).
class Rotation {
public:
    Rotation() : Rotation(1.0, 0.0, 0.0, 0.0) {}

    static Rotation from_quaternion(double w, double x, double y, double z) {
        return Rotation(w, x, y, z);
    }

    static Rotation identity() { return Rotation(); }

    Rotation inverse() const { return Rotation(q_[0], -q_[1], -q_[2], -q_[3]); }

    UnitVector3 apply(const UnitVector3& v) const {
        return {
            m_[0][0] * v.x + m_[0][1] * v.y + m_[0][2] * v.z,
            m_[1][0] * v.x + m_[1][1] * v.y + m_[1][2] * v.z,
            m_[2][0] * v.x + m_[2][1] * v.y + m_[2][2] * v.z,
        };
    }

    double quaternion(int i) const { return q_[i]; }
    double matrix(int r, int c) const { return m_[r][c]; }

private:
    Rotation(double w, double x, double y, double z) {
        const double n = std::sqrt(w * w + x * x + y * y + z * z);
        if (n < 1e-12) throw std::invalid_argument("zero quaternion");
        w /= n;
        x /= n;
        y /= n;
        z /= n;
        q_[0] = w;
        q_[1] = x;
        q_[2] = y;
        q_[3] = z;
        m_[0][0] = 1 - 2 * (y * y + z * z);
        m_[0][1] = 2 * (x * y - w * z);
        m_[0][2] = 2 * (x * z + w * y);
        m_[1][0] = 2 * (x * y + w * z);
        m_[1][1] = 1 - 2 * (x * x + z * z);
        m_[1][2] = 2 * (y * z - w * x);
        m_[2][0] = 2 * (x * z - w * y);
        m_[2][1] = 2 * (y * z + w * x);
        m_[2][2] = 1 - 2 * (x * x + y * y);
    }

    double q_[4];
    double m_[3][3];
};

// Uniform random rotation: four i.i.d. standard normals normalized onto the
// unit 4-sphere give a quaternion uniform over rotation space.
inline Rotation sample_uniform_rotation(rng::Engine& eng) {
    for (;;) {
        const double w = rng::standard_normal(eng);
        const double x = rng::standard_normal(eng);
        const double y = rng::standard_normal(eng);
        const double z = rng::standard_normal(eng);
        if (w * w + x * x + y * y + z * z > 1e-24)
            return Rotation::from_quaternion(w, x, y, z);
    }
}

inline GeoPoint rotate_point(const Rotation& r, const GeoPoint& p) {
    return from_cartesian(r.apply(to_cartesian(p)));
}

}  // namespace driftpath
