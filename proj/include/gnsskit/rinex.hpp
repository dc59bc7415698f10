#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gnsskit/ephemeris.hpp"
#include "gnsskit/time.hpp"

namespace gnsskit {

struct IonoParams {
    double alpha[4] = {0, 0, 0, 0};
    double beta[4] = {0, 0, 0, 0};
    bool valid = false;
};

struct RinexParseResult {
    std::vector<std::pair<SatId, AnyEphemeris>> records;
    IonoParams iono;
    int skipped = 0;
    std::vector<std::string> diagnostics;
};

struct UnsupportedVersion : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct HeaderMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// One 19-character RINEX numeric field; accepts D/d exponent markers.
inline std::optional<double> rinex_field(const std::string& line, size_t start, size_t width = 19) {
    if (start >= line.size()) return std::nullopt;
    std::string s = line.substr(start, width);
    for (char& c : s)
        if (c == 'D' || c == 'd') c = 'E';
    // trim
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::nullopt;
    const auto e = s.find_last_not_of(" \t\r");
    s = s.substr(b, e - b + 1);
    char* endp = nullptr;
    const double v = std::strtod(s.c_str(), &endp);
    if (endp == s.c_str() || *endp != '\0') return std::nullopt;
    return v;
}

inline std::optional<int> rinex_int(const std::string& line, size_t start, size_t width) {
    auto v = rinex_field(line, start, width);
    if (!v) return std::nullopt;
    return static_cast<int>(*v);
}

}  // namespace detail

// Parses RINEX 2.x/3.x navigation message content for GPS and GLONASS.
// Malformed records are skipped and counted, never silently mangled.
inline RinexParseResult parse_rinex_nav(std::istream& is,
                                        double leap_seconds = DEFAULT_LEAP_SECONDS) {
    RinexParseResult out;
    std::string line;
    double version = 0.0;
    char file_sys = 'M';  // v2: 'N' GPS nav, 'G' GLONASS nav; v3 carries per-record system
    bool header_done = false;
    int lineno = 0;

    while (std::getline(is, line)) {
        ++lineno;
        if (line.size() < 61) {
            if (line.find("END OF HEADER") != std::string::npos) {
                header_done = true;
                break;
            }
            continue;
        }
        const std::string label = line.substr(60);
        if (label.find("RINEX VERSION / TYPE") != std::string::npos) {
            auto v = detail::rinex_field(line, 0, 9);
            if (!v) throw HeaderMissing("unreadable RINEX version");
            version = *v;
            if (version < 2.0 || version >= 4.0)
                throw UnsupportedVersion("unsupported RINEX version");
            const char t = line.size() > 20 ? line[20] : ' ';
            if (t != 'N' && t != 'G')
                throw UnsupportedVersion("not a navigation message file");
            // v2 GLONASS nav files carry 'G' in the type column
            file_sys = (version < 3.0 && t == 'G') ? 'R' : (line.size() > 40 ? line[40] : 'M');
            if (version < 3.0 && t == 'N') file_sys = 'G';  // v2 GPS nav
        } else if (label.find("ION ALPHA") != std::string::npos) {
            for (int i = 0; i < 4; ++i)
                if (auto v = detail::rinex_field(line, 2 + 12 * i, 12)) out.iono.alpha[i] = *v;
            out.iono.valid = true;
        } else if (label.find("ION BETA") != std::string::npos) {
            for (int i = 0; i < 4; ++i)
                if (auto v = detail::rinex_field(line, 2 + 12 * i, 12)) out.iono.beta[i] = *v;
            out.iono.valid = true;
        } else if (label.find("IONOSPHERIC CORR") != std::string::npos) {
            const std::string kind = line.substr(0, 4);
            for (int i = 0; i < 4; ++i) {
                auto v = detail::rinex_field(line, 5 + 12 * i, 12);
                if (!v) continue;
                if (kind == "GPSA") out.iono.alpha[i] = *v;
                if (kind == "GPSB") out.iono.beta[i] = *v;
            }
            out.iono.valid = true;
        } else if (label.find("END OF HEADER") != std::string::npos) {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw HeaderMissing("END OF HEADER not found");
    const bool v3 = version >= 3.0;

    auto skip_record = [&](int at_line, const std::string& why) {
        ++out.skipped;
        out.diagnostics.push_back("line " + std::to_string(at_line) + ": " + why);
    };

    // collect continuation lines for one record
    auto read_lines = [&](int n, std::vector<std::string>& dst) -> bool {
        for (int i = 0; i < n; ++i) {
            if (!std::getline(is, line)) return false;
            ++lineno;
            dst.push_back(line);
        }
        return true;
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const int rec_line = lineno;

        char sys;
        int prn;
        int year, month, day, hour, minute;
        double second;
        size_t clk_col;  // column of the first clock field on the epoch line

        if (v3) {
            sys = line.empty() ? ' ' : line[0];
            if (sys != 'G' && sys != 'R') {
                // other constellations: consume their continuation lines blind
                const int cont = (sys == 'S') ? 3 : 7;
                std::vector<std::string> dump;
                read_lines(cont, dump);
                continue;
            }
            auto p = detail::rinex_int(line, 1, 2);
            auto yy = detail::rinex_int(line, 4, 4);
            auto mo = detail::rinex_int(line, 9, 2);
            auto dd = detail::rinex_int(line, 12, 2);
            auto hh = detail::rinex_int(line, 15, 2);
            auto mi = detail::rinex_int(line, 18, 2);
            auto ss = detail::rinex_field(line, 21, 2);
            if (!p || !yy || !mo || !dd || !hh || !mi || !ss) {
                skip_record(rec_line, "unreadable epoch line");
                continue;
            }
            prn = *p;
            year = *yy;
            month = *mo;
            day = *dd;
            hour = *hh;
            minute = *mi;
            second = *ss;
            clk_col = 23;
        } else {
            sys = file_sys;
            auto p = detail::rinex_int(line, 0, 2);
            auto yy = detail::rinex_int(line, 3, 2);
            auto mo = detail::rinex_int(line, 6, 2);
            auto dd = detail::rinex_int(line, 9, 2);
            auto hh = detail::rinex_int(line, 12, 2);
            auto mi = detail::rinex_int(line, 15, 2);
            auto ss = detail::rinex_field(line, 17, 5);
            if (!p || !yy || !mo || !dd || !hh || !mi || !ss) {
                skip_record(rec_line, "unreadable epoch line");
                continue;
            }
            prn = *p;
            year = (*yy < 80) ? *yy + 2000 : *yy + 1900;
            month = *mo;
            day = *dd;
            hour = *hh;
            minute = *mi;
            second = *ss;
            clk_col = 22;
        }
        if (month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 ||
            minute < 0 || minute > 59 || second < 0.0 || second >= 61.0) {
            skip_record(rec_line, "epoch fields out of range");
            continue;
        }

        double clk[3] = {0, 0, 0};
        bool clk_ok = true;
        for (int i = 0; i < 3; ++i) {
            auto v = detail::rinex_field(line, clk_col + 19 * i);
            if (!v)
                clk_ok = false;
            else
                clk[i] = *v;
        }

        const int n_cont = (sys == 'G') ? 7 : 3;
        std::vector<std::string> body;
        if (!read_lines(n_cont, body)) {
            skip_record(rec_line, "truncated record at end of file");
            break;
        }
        if (!clk_ok) {
            skip_record(rec_line, "unreadable clock fields");
            continue;
        }

        const size_t col0 = v3 ? 4 : 3;
        auto field = [&](int row, int col) -> std::optional<double> {
            if (row >= static_cast<int>(body.size())) return std::nullopt;
            return detail::rinex_field(body[row], col0 + 19 * col);
        };

        if (sys == 'G') {
            if (prn < 1 || prn > 32) {
                skip_record(rec_line, "GPS PRN out of range");
                continue;
            }
            // rows: 0: IODE crs delta_n m0 | 1: cuc e cus sqrt_a | 2: toe cic OMEGA0 cis
            //       3: i0 crc omega OMEGA_DOT | 4: idot codesL2 week L2P | 5: ura health tgd iodc
            //       6: ttx fit
            bool ok = true;
            double f[7][4] = {};
            for (int r = 0; r < 6 && ok; ++r)
                for (int c = 0; c < 4; ++c) {
                    auto v = field(r, c);
                    if (!v) {
                        ok = false;
                        break;
                    }
                    f[r][c] = *v;
                }
            if (!ok) {
                skip_record(rec_line, "missing orbit fields in GPS record");
                continue;
            }
            KeplerEphemeris eph;
            eph.toc = civil_to_gnss(year, month, day, hour, minute, second);
            eph.af0 = clk[0];
            eph.af1 = clk[1];
            eph.af2 = clk[2];
            eph.crs = f[0][1];
            eph.delta_n = f[0][2];
            eph.m0 = f[0][3];
            eph.cuc = f[1][0];
            eph.e = f[1][1];
            eph.cus = f[1][2];
            eph.sqrt_a = f[1][3];
            const int week = static_cast<int>(f[4][2]);
            eph.toe = GnssTime(week, f[2][0]);
            eph.cic = f[2][1];
            eph.omega0 = f[2][2];
            eph.cis = f[2][3];
            eph.i0 = f[3][0];
            eph.crc = f[3][1];
            eph.omega = f[3][2];
            eph.omega_dot = f[3][3];
            eph.idot = f[4][0];
            eph.ura = f[5][0];
            eph.health = static_cast<int>(f[5][1]);
            eph.tgd = f[5][2];
            if (eph.e < 0.0 || eph.e >= 0.1 || eph.sqrt_a < 4000.0 || eph.sqrt_a > 6000.0) {
                skip_record(rec_line, "GPS orbit fields implausible");
                continue;
            }
            out.records.emplace_back(SatId{Constellation::GPS, prn, 0}, eph);
        } else {
            if (prn < 1 || prn > 24) {
                skip_record(rec_line, "GLONASS slot out of range");
                continue;
            }
            bool ok = true;
            double f[3][4] = {};
            for (int r = 0; r < 3 && ok; ++r)
                for (int c = 0; c < 4; ++c) {
                    auto v = field(r, c);
                    if (!v) {
                        ok = false;
                        break;
                    }
                    f[r][c] = *v;
                }
            if (!ok) {
                skip_record(rec_line, "missing state-vector fields in GLONASS record");
                continue;
            }
            GlonassEphemeris eph;
            // epoch is UTC; keep everything on the GPS timescale
            eph.tb = civil_to_gnss(year, month, day, hour, minute, second) + leap_seconds;
            eph.tau_n = -clk[0];
            eph.gamma_n = clk[1];
            eph.position = Eigen::Vector3d(f[0][0], f[1][0], f[2][0]) * 1e3;
            eph.velocity = Eigen::Vector3d(f[0][1], f[1][1], f[2][1]) * 1e3;
            eph.acceleration = Eigen::Vector3d(f[0][2], f[1][2], f[2][2]) * 1e3;
            eph.health = static_cast<int>(f[0][3]);
            eph.freq_channel = static_cast<int>(f[1][3]);
            if (eph.freq_channel < -7 || eph.freq_channel > 6 ||
                std::abs(eph.position.norm() - 2.55e7) > 3e6) {
                skip_record(rec_line, "GLONASS state vector implausible");
                continue;
            }
            out.records.emplace_back(SatId{Constellation::GLONASS, prn, eph.freq_channel}, eph);
        }
    }
    return out;
}

namespace detail {

inline std::string rinex_num(double v) {
    // RINEX D-exponent notation, 19 columns
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%19.12E", v);
    std::string s(buf);
    const auto e = s.find('E');
    if (e != std::string::npos) s[e] = 'D';
    return s;
}

}  // namespace detail

// Minimal RINEX 3.04 GPS navigation writer; enough for round-trip tests and
// the synthetic generator.
inline void write_rinex3_gps_nav(std::ostream& os,
                                 const std::vector<std::pair<SatId, KeplerEphemeris>>& records,
                                 const IonoParams* iono = nullptr) {
    os << "     3.04           N: GNSS NAV DATA    G: GPS              RINEX VERSION / TYPE\n";
    os << "gnsskit             gnsskit             20200101 000000 UTC PGM / RUN BY / DATE\n";
    if (iono && iono->valid) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "GPSA %12.4E%12.4E%12.4E%12.4E", iono->alpha[0],
                      iono->alpha[1], iono->alpha[2], iono->alpha[3]);
        os << buf << "       IONOSPHERIC CORR\n";
        std::snprintf(buf, sizeof(buf), "GPSB %12.4E%12.4E%12.4E%12.4E", iono->beta[0],
                      iono->beta[1], iono->beta[2], iono->beta[3]);
        os << buf << "       IONOSPHERIC CORR\n";
    }
    os << "                                                            END OF HEADER\n";

    for (const auto& [sat, eph] : records) {
        // toc back to civil; walk from GPS epoch
        const std::int64_t days_gps = static_cast<std::int64_t>(eph.toc.week) * 7 +
                                      static_cast<std::int64_t>(eph.toc.tow / 86400.0);
        const double sod = eph.toc.tow - static_cast<double>(static_cast<std::int64_t>(eph.toc.tow / 86400.0)) * 86400.0;
        const std::int64_t days_unix = days_gps + 3657;
        // civil from days (Hinnant)
        std::int64_t zz = days_unix + 719468;
        const std::int64_t era = (zz >= 0 ? zz : zz - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(zz - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        const int year = static_cast<int>(y + (m <= 2 ? 1 : 0));
        const int hh = static_cast<int>(sod / 3600.0);
        const int mi = static_cast<int>((sod - hh * 3600.0) / 60.0);
        const int ss = static_cast<int>(sod - hh * 3600.0 - mi * 60.0);

        char head[128];
        std::snprintf(head, sizeof(head), "G%02d %04d %02d %02d %02d %02d %02d", sat.prn_or_slot,
                      year, static_cast<int>(m), static_cast<int>(d), hh, mi, ss);
        os << head << detail::rinex_num(eph.af0) << detail::rinex_num(eph.af1)
           << detail::rinex_num(eph.af2) << "\n";
        auto row = [&](double a, double b, double c, double dd) {
            os << "    " << detail::rinex_num(a) << detail::rinex_num(b) << detail::rinex_num(c)
               << detail::rinex_num(dd) << "\n";
        };
        row(0.0, eph.crs, eph.delta_n, eph.m0);
        row(eph.cuc, eph.e, eph.cus, eph.sqrt_a);
        row(eph.toe.tow, eph.cic, eph.omega0, eph.cis);
        row(eph.i0, eph.crc, eph.omega, eph.omega_dot);
        row(eph.idot, 0.0, static_cast<double>(eph.toe.week), 0.0);
        row(eph.ura, static_cast<double>(eph.health), eph.tgd, 0.0);
        row(eph.toe.tow, 4.0, 0.0, 0.0);
    }
}

}  // namespace gnsskit
