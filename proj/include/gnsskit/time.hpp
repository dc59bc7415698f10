#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

#include "gnsskit/constants.hpp"

namespace gnsskit {

// GPS time: integer week since 1980-01-06 plus seconds of week.
// Normalization keeps tow in [0, 604800) so differencing works across
// week rollovers.
struct GnssTime {
    int week = 0;
    double tow = 0.0;

    GnssTime() = default;
    GnssTime(int w, double t) : week(w), tow(t) { normalize(); }

    void normalize() {
        while (tow >= SECONDS_PER_WEEK) {
            tow -= SECONDS_PER_WEEK;
            ++week;
        }
        while (tow < 0.0) {
            tow += SECONDS_PER_WEEK;
            --week;
        }
    }

    // Seconds from other to *this; antisymmetric by construction.
    double operator-(const GnssTime& other) const {
        return (static_cast<double>(week - other.week)) * SECONDS_PER_WEEK + (tow - other.tow);
    }

    GnssTime operator+(double seconds) const { return GnssTime(week, tow + seconds); }
    GnssTime operator-(double seconds) const { return GnssTime(week, tow - seconds); }

    bool operator==(const GnssTime& o) const { return week == o.week && tow == o.tow; }
    bool operator<(const GnssTime& o) const { return (*this - o) < 0.0; }
    bool operator<=(const GnssTime& o) const { return (*this - o) <= 0.0; }
    bool operator>(const GnssTime& o) const { return (*this - o) > 0.0; }
    bool operator>=(const GnssTime& o) const { return (*this - o) >= 0.0; }
};

// Calendar (UTC-style y/m/d h:m:s) to GPS time, no leap handling.
// Valid for dates after the GPS epoch 1980-01-06.
inline GnssTime civil_to_gnss(int year, int month, int day, int hour, int minute, double second) {
    // days since civil epoch 1970-01-01 (Howard Hinnant's algorithm)
    const int y = year - (month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2u) / 5u + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const std::int64_t days_unix = static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
    const std::int64_t days_gps = days_unix - 3657;  // 1980-01-06 is unix day 3657
    const int week = static_cast<int>(days_gps / 7);
    const double tow = static_cast<double>(days_gps - static_cast<std::int64_t>(week) * 7) * 86400.0 +
                       hour * 3600.0 + minute * 60.0 + second;
    return GnssTime(week, tow);
}

}  // namespace gnsskit
