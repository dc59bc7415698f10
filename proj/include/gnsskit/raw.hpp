#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gnsskit/ephemeris.hpp"
#include "gnsskit/time.hpp"

namespace gnsskit {

// One satellite observation at one receiver epoch.
// Doppler sign convention: positive doppler = satellite approaching
// = decreasing pseudorange.
struct RawGnssRecord {
    GnssTime time;
    SatId sat;
    double pseudorange = 0.0;                 // [m]
    double doppler = 0.0;                     // [Hz]
    std::optional<double> carrier_phase;      // [cycles]; carried, never solved
    double cn0 = 0.0;                         // [dB-Hz]
    std::optional<double> pr_std;             // [m]
};

struct RawEpoch {
    GnssTime time;
    std::vector<RawGnssRecord> records;
};

struct RawParseResult {
    std::vector<RawEpoch> epochs;
    int skipped = 0;
    std::vector<std::string> diagnostics;
};

inline std::string raw_csv_header() {
    return "week,tow,constel,svid,freq_chan,pseudorange_m,doppler_hz,carrier_cycles,cn0_dbhz,pr_std_m";
}

inline std::string format_raw_line(const RawGnssRecord& r) {
    char buf[256];
    std::string carrier = r.carrier_phase ? [&] {
        char b[48];
        std::snprintf(b, sizeof(b), "%.9f", *r.carrier_phase);
        return std::string(b);
    }() : std::string();
    std::string prs = r.pr_std ? [&] {
        char b[48];
        std::snprintf(b, sizeof(b), "%.6g", *r.pr_std);
        return std::string(b);
    }() : std::string();
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%c,%d,%d,%.9f,%.9g,%s,%.2f,%s", r.time.week,
                  r.time.tow, r.sat.constellation == Constellation::GPS ? 'G' : 'R',
                  r.sat.prn_or_slot, r.sat.freq_channel, r.pseudorange, r.doppler, carrier.c_str(),
                  r.cn0, prs.c_str());
    return buf;
}

// Raw record CSV grouped by identical (week, tow). Non-monotonic epochs and
// malformed lines are rejected with diagnostics; empty optional fields stay
// absent, never zero.
inline RawParseResult parse_raw_records(std::istream& is) {
    RawParseResult out;
    std::string line;
    int lineno = 0;
    bool saw_header = false;

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            saw_header = true;  // header line mandatory, content not enforced beyond presence
            continue;
        }
        std::vector<std::string> tok;
        {
            std::stringstream ss(line);
            std::string t;
            while (std::getline(ss, t, ',')) tok.push_back(t);
            if (!line.empty() && line.back() == ',') tok.push_back("");
        }
        auto reject = [&](const std::string& why) {
            ++out.skipped;
            out.diagnostics.push_back("line " + std::to_string(lineno) + ": " + why);
        };
        if (tok.size() != 10) {
            reject("expected 10 fields, got " + std::to_string(tok.size()));
            continue;
        }
        auto num = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            char* endp = nullptr;
            const double v = std::strtod(s.c_str(), &endp);
            if (endp == s.c_str() || *endp != '\0') return std::nullopt;
            return v;
        };
        const auto week = num(tok[0]), tow = num(tok[1]), svid = num(tok[3]), fch = num(tok[4]);
        const auto pr = num(tok[5]), dop = num(tok[6]), cn0 = num(tok[8]);
        if (!week || !tow || !svid || !fch || !pr || !dop || !cn0) {
            reject("unparseable mandatory field");
            continue;
        }
        if (tok[2] != "G" && tok[2] != "R") {
            reject("constellation must be G or R");
            continue;
        }
        RawGnssRecord r;
        r.time = GnssTime(static_cast<int>(*week), *tow);
        r.sat.constellation = tok[2] == "G" ? Constellation::GPS : Constellation::GLONASS;
        r.sat.prn_or_slot = static_cast<int>(*svid);
        r.sat.freq_channel = static_cast<int>(*fch);
        if (r.sat.constellation == Constellation::GPS &&
            (r.sat.prn_or_slot < 1 || r.sat.prn_or_slot > 32 || r.sat.freq_channel != 0)) {
            reject("invalid GPS PRN/channel");
            continue;
        }
        if (r.sat.constellation == Constellation::GLONASS &&
            (r.sat.prn_or_slot < 1 || r.sat.prn_or_slot > 24 || r.sat.freq_channel < -7 ||
             r.sat.freq_channel > 6)) {
            reject("invalid GLONASS slot/channel");
            continue;
        }
        r.pseudorange = *pr;
        if (r.pseudorange < 1.8e7 || r.pseudorange > 3.0e7) {
            reject("pseudorange out of range");  // zero/absent pseudorange is not a valid observable
            continue;
        }
        r.doppler = *dop;
        r.carrier_phase = num(tok[7]);
        r.cn0 = *cn0;
        if (r.cn0 < 0.0 || r.cn0 > 64.0) {
            reject("cn0 out of range");
            continue;
        }
        r.pr_std = num(tok[9]);
        if (r.pr_std && *r.pr_std <= 0.0) {
            reject("pr_std must be positive when present");
            continue;
        }

        if (!out.epochs.empty()) {
            const double dt = r.time - out.epochs.back().time;
            if (dt < 0.0) {
                reject("non-monotonic epoch");
                continue;
            }
            if (dt == 0.0) {
                out.epochs.back().records.push_back(r);
                continue;
            }
        }
        out.epochs.push_back(RawEpoch{r.time, {r}});
    }
    return out;
}

}  // namespace gnsskit
