#pragma once

namespace gnsskit {

// WGS84 ellipsoid
inline constexpr double WGS84_A = 6378137.0;               // semi-major axis [m]
inline constexpr double WGS84_F = 1.0 / 298.257223563;     // flattening
inline constexpr double WGS84_B = WGS84_A * (1.0 - WGS84_F);
inline constexpr double WGS84_E2 = WGS84_F * (2.0 - WGS84_F);  // first eccentricity squared

// Broadcast-ephemeris constants. These exact values are mandated for use with
// GPS broadcast ephemerides; do not substitute refined geodesy values.
inline constexpr double GM_GPS = 3.986005e14;              // [m^3/s^2]
inline constexpr double OMEGA_EARTH = 7.2921151467e-5;     // [rad/s]
inline constexpr double SPEED_OF_LIGHT = 2.99792458e8;     // [m/s]
inline constexpr double REL_CLOCK_F = -4.442807633e-10;    // -2*sqrt(mu)/c^2 [s/m^0.5]

// PZ-90 constants for GLONASS equations of motion.
// PZ-90.11 vs WGS84 is sub-centimeter and treated as identity throughout.
inline constexpr double GM_GLO = 3.9860044e14;             // [m^3/s^2]
inline constexpr double PZ90_AE = 6378136.0;               // [m]
inline constexpr double PZ90_J2 = 1.0826257e-3;
inline constexpr double OMEGA_GLO = 7.292115e-5;           // [rad/s]

// L1 carrier
inline constexpr double GPS_L1_HZ = 1575.42e6;
inline constexpr double GLO_L1_BASE_HZ = 1602.0e6;
inline constexpr double GLO_L1_STEP_HZ = 562.5e3;

inline constexpr double SECONDS_PER_WEEK = 604800.0;

// GLONASS time is kept on the GPS timescale; UTC(SU)->GPS leap offset,
// overridable where GLONASS records are ingested.
inline constexpr double DEFAULT_LEAP_SECONDS = 18.0;

inline constexpr double PI = 3.14159265358979323846;
inline constexpr double DEG2RAD = PI / 180.0;
inline constexpr double RAD2DEG = 180.0 / PI;

}  // namespace gnsskit
