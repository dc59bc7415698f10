#pragma once

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gnsskit/kalman.hpp"
#include "gnsskit/raw.hpp"
#include "gnsskit/wls.hpp"

namespace gnsskit {

enum class SolveMode { Wls, Kf };

struct FixRecord {
    GnssTime time;
    EcefPosition position = EcefPosition::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    double clock_bias = 0.0;
    double hdop = 0.0, vdop = 0.0;
    int n_sats = 0;
    std::string mode = "wls";
};

struct SolveReport {
    int n_epochs = 0;
    int n_solved = 0;
    int n_failed = 0;
    int n_filter_resets = 0;
    int n_gated_measurements = 0;
    int n_parse_skipped = 0;
    std::vector<std::string> diagnostics;
};

inline std::string fix_csv_header() {
    return "week,tow,ecef_x,ecef_y,ecef_z,vx,vy,vz,clock_bias_m,hdop,vdop,n_sats,mode";
}

inline std::string format_fix_line(const FixRecord& f) {
    char buf[360];
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.12g,%.12g,%.12g,%.9g,%.9g,%.9g,%.9g,%.6g,%.6g,%d,%s",
                  f.time.week, f.time.tow, f.position.x(), f.position.y(), f.position.z(),
                  f.velocity.x(), f.velocity.y(), f.velocity.z(), f.clock_bias, f.hdop, f.vdop,
                  f.n_sats, f.mode.c_str());
    return buf;
}

inline void write_fix_csv(std::ostream& os, const std::vector<FixRecord>& fixes) {
    os << fix_csv_header() << "\n";
    for (const auto& f : fixes) os << format_fix_line(f) << "\n";
}

inline std::vector<FixRecord> read_fix_csv(std::istream& is) {
    std::vector<FixRecord> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (first) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> t;
        while (std::getline(ss, tok, ',')) t.push_back(tok);
        if (t.size() != 13) continue;
        FixRecord f;
        f.time = GnssTime(std::stoi(t[0]), std::stod(t[1]));
        f.position = {std::stod(t[2]), std::stod(t[3]), std::stod(t[4])};
        f.velocity = {std::stod(t[5]), std::stod(t[6]), std::stod(t[7])};
        f.clock_bias = std::stod(t[8]);
        f.hdop = std::stod(t[9]);
        f.vdop = std::stod(t[10]);
        f.n_sats = std::stoi(t[11]);
        f.mode = t[12];
        out.push_back(f);
    }
    return out;
}

// Full per-file solve. KF mode warm-starts from the first valid WLS fix and
// falls back to WLS reinitialization on time gaps, plausibility-gate
// breaches, or a run of all-gated epochs.
inline std::vector<FixRecord> solve_records(const RawParseResult& raw, const EphemerisStore& ephs,
                                            const IonoParams& iono, SolveMode mode,
                                            SolveReport& report, const ProcessConfig& pcfg = {},
                                            const KfConfig& kcfg = {}) {
    std::vector<FixRecord> out;
    report = SolveReport{};
    report.n_parse_skipped = raw.skipped;

    std::optional<EcefPosition> rx_approx;
    FilterState filter;
    bool force_reset = true;
    int consecutive_all_gated = 0;

    for (const auto& epoch : raw.epochs) {
        ++report.n_epochs;
        try {
            if (!rx_approx) {
                // cold start: coarse solve without corrections, then reprocess
                auto boot = process_epoch(epoch, ephs, iono, std::nullopt, pcfg);
                rx_approx = wls_solve(boot).position;
            }
            auto proc = process_epoch(epoch, ephs, iono, rx_approx, pcfg);
            const PvtSolution wls = wls_solve(proc, *rx_approx);
            rx_approx = wls.position;

            FixRecord fix;
            fix.time = wls.time;
            fix.hdop = wls.dop.hdop;
            fix.vdop = wls.dop.vdop;
            fix.n_sats = wls.n_sats_used;

            if (mode == SolveMode::Wls) {
                fix.position = wls.position;
                fix.velocity = wls.velocity;
                fix.clock_bias = wls.clock_bias;
                fix.mode = "wls";
            } else {
                const double dt = filter.initialized ? (epoch.time - filter.last_time) : 0.0;
                if (force_reset || !filter.initialized || dt < 0.0 || dt > kcfg.max_predict_dt) {
                    if (filter.initialized) {
                        ++report.n_filter_resets;
                        report.diagnostics.push_back("filter reset at tow " +
                                                     std::to_string(epoch.time.tow));
                    }
                    filter = kf_init_from_wls(wls, kcfg);
                    force_reset = false;
                    consecutive_all_gated = 0;
                } else {
                    filter = kf_predict(filter, epoch.time, kcfg);
                    UpdateReport urep;
                    filter = kf_update(filter, proc, urep, kcfg);
                    report.n_gated_measurements += urep.n_gated;
                    consecutive_all_gated = urep.all_gated ? consecutive_all_gated + 1 : 0;
                    if (consecutive_all_gated >= kcfg.max_all_gated ||
                        filter.velocity().norm() > kcfg.max_speed)
                        force_reset = true;
                }
                fix.position = filter.position();
                fix.velocity = filter.velocity();
                fix.clock_bias = filter.clock_bias();
                fix.mode = "kf";
            }
            out.push_back(fix);
            ++report.n_solved;
        } catch (const std::exception& e) {
            ++report.n_failed;
            report.diagnostics.push_back("epoch tow " + std::to_string(epoch.time.tow) + ": " +
                                         e.what());
        }
    }
    return out;
}

inline std::vector<FixRecord> solve_stream(std::istream& raw_csv, const EphemerisStore& ephs,
                                           const IonoParams& iono, SolveMode mode,
                                           SolveReport& report, const ProcessConfig& pcfg = {},
                                           const KfConfig& kcfg = {}) {
    const RawParseResult raw = parse_raw_records(raw_csv);
    return solve_records(raw, ephs, iono, mode, report, pcfg, kcfg);
}

}  // namespace gnsskit
