#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gnsskit/constants.hpp"
#include "gnsskit/quaternion.hpp"

namespace gnsskit {

using EcefPosition = Eigen::Vector3d;

struct GeodeticPosition {
    double lat_deg = 0.0;   // [-90, 90]
    double lon_deg = 0.0;   // [-180, 180)
    double height_m = 0.0;  // above WGS84 ellipsoid
};

struct NearSingular : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline EcefPosition geodetic_to_ecef(const GeodeticPosition& g) {
    const double lat = g.lat_deg * DEG2RAD;
    const double lon = g.lon_deg * DEG2RAD;
    const double slat = std::sin(lat), clat = std::cos(lat);
    const double n = WGS84_A / std::sqrt(1.0 - WGS84_E2 * slat * slat);
    return {(n + g.height_m) * clat * std::cos(lon),
            (n + g.height_m) * clat * std::sin(lon),
            (n * (1.0 - WGS84_E2) + g.height_m) * slat};
}

// Closed-form (Vermeille 2002) ECEF to geodetic conversion.
inline GeodeticPosition ecef_to_geodetic(const EcefPosition& p) {
    if (p.norm() < 1e5) throw NearSingular("ecef_to_geodetic: |p| below 1e5 m");
    const double e2 = WGS84_E2;
    const double e4 = e2 * e2;
    const double a2 = WGS84_A * WGS84_A;
    const double x = p.x(), y = p.y(), z = p.z();
    const double pp = (x * x + y * y) / a2;
    const double q = (1.0 - e2) * z * z / a2;
    const double r = (pp + q - e4) / 6.0;
    const double s = e4 * pp * q / (4.0 * r * r * r);
    const double t = std::cbrt(1.0 + s + std::sqrt(s * (2.0 + s)));
    const double u = r * (1.0 + t + 1.0 / t);
    const double v = std::sqrt(u * u + e4 * q);
    const double w = e2 * (u + v - q) / (2.0 * v);
    const double k = std::sqrt(u + v + w * w) - w;
    const double rho = std::sqrt(x * x + y * y);
    const double big_d = k * rho / (k + e2);
    const double dz = std::sqrt(big_d * big_d + z * z);

    GeodeticPosition g;
    g.lat_deg = 2.0 * std::atan2(z, big_d + dz) * RAD2DEG;
    g.lon_deg = std::atan2(y, x) * RAD2DEG;
    g.height_m = (k + e2 - 1.0) / k * dz;
    if (g.lon_deg >= 180.0) g.lon_deg -= 360.0;
    return g;
}

// Rotation matrix taking ECEF vectors into the local North-East-Down frame.
inline Eigen::Matrix3d ned_matrix_at(const GeodeticPosition& g) {
    const double lat = g.lat_deg * DEG2RAD;
    const double lon = g.lon_deg * DEG2RAD;
    const double sl = std::sin(lat), cl = std::cos(lat);
    const double so = std::sin(lon), co = std::cos(lon);
    Eigen::Matrix3d m;
    m << -sl * co, -sl * so, cl,
         -so, co, 0.0,
         -cl * co, -cl * so, -sl;
    return m;
}

inline Quaternion ned_rotation_at(const GeodeticPosition& g) {
    return Quaternion::from_matrix(ned_matrix_at(g));
}

}  // namespace gnsskit
