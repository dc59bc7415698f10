#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "gnsskit/geodesy.hpp"
#include "gnsskit/pipeline.hpp"

namespace gnsskit {

struct GridSpec {
    GeodeticPosition origin;  // tangent-plane anchor
    double cell_size = 5.0;   // [m]
    int min_passes = 3;
    int min_distinct_drives = 2;
    double histogram_bin = 0.25;  // [m]

    bool compatible(const GridSpec& o) const {
        return cell_size == o.cell_size && min_passes == o.min_passes &&
               min_distinct_drives == o.min_distinct_drives &&
               std::abs(origin.lat_deg - o.origin.lat_deg) < 1e-12 &&
               std::abs(origin.lon_deg - o.origin.lon_deg) < 1e-12 &&
               std::abs(origin.height_m - o.origin.height_m) < 1e-9;
    }
};

struct DriveFix {
    int drive = 0;
    EcefPosition position = EcefPosition::Zero();
};

struct GridCell {
    long ix = 0, iy = 0;  // east, north indices
    int n_fixes = 0;
    int n_drives = 0;
    double mean_alt = 0.0;
    std::vector<double> deviations;  // altitude - cell mean [m]
};

struct HistogramBin {
    double left = 0.0, right = 0.0;
    long count = 0;
};

struct GridReport {
    GridSpec spec;
    std::vector<GridCell> cells;
    double rmse = 0.0;            // sqrt(mean squared deviation)
    double corrected_sigma = 0.0; // de-meaning bias corrected estimate of the noise sigma
    long n_fixes_used = 0;
    long n_fixes_dropped = 0;
    std::vector<HistogramBin> histogram;
    std::vector<std::pair<double, double>> percentiles;  // (p, value)
};

struct NoQualifiedCells : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SpecMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingDop : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Default grid anchor: centroid of the input fixes.
inline GeodeticPosition grid_auto_origin(const std::vector<DriveFix>& fixes) {
    EcefPosition c = EcefPosition::Zero();
    for (const auto& f : fixes) c += f.position;
    return ecef_to_geodetic(c / static_cast<double>(fixes.size()));
}

// Altitude-consistency report: fixes are projected to the tangent plane at
// spec.origin, bucketed into cell_size x cell_size cells aligned to the
// east/north axes, and per-cell altitude deviations from the cell mean are
// aggregated. Cells with too few fixes or drives are excluded.
inline GridReport grid_altitude_report(const std::vector<DriveFix>& fixes, const GridSpec& spec) {
    if (fixes.empty()) throw NoQualifiedCells("grid_altitude_report: no fixes");

    const Eigen::Matrix3d ned = ned_matrix_at(spec.origin);
    const EcefPosition anchor = geodetic_to_ecef(spec.origin);

    struct Sample {
        int drive;
        double alt;
    };
    std::map<std::pair<long, long>, std::vector<Sample>> buckets;
    for (const auto& f : fixes) {
        const Eigen::Vector3d local = ned * (f.position - anchor);
        const double north = local.x(), east = local.y(), alt = -local.z();
        const long ix = static_cast<long>(std::floor(east / spec.cell_size));
        const long iy = static_cast<long>(std::floor(north / spec.cell_size));
        buckets[{ix, iy}].push_back({f.drive, alt});
    }

    GridReport rep;
    rep.spec = spec;
    double sum_sq = 0.0;
    long n_dev = 0;
    long dof = 0;  // sum over cells of (n_c - 1), for the de-meaning correction
    std::vector<double> all_devs;

    for (auto& [idx, samples] : buckets) {
        std::set<int> drives;
        for (const auto& s : samples) drives.insert(s.drive);
        if (static_cast<int>(samples.size()) < spec.min_passes ||
            static_cast<int>(drives.size()) < spec.min_distinct_drives) {
            rep.n_fixes_dropped += static_cast<long>(samples.size());
            continue;
        }
        GridCell cell;
        cell.ix = idx.first;
        cell.iy = idx.second;
        cell.n_fixes = static_cast<int>(samples.size());
        cell.n_drives = static_cast<int>(drives.size());
        double mean = 0.0;
        for (const auto& s : samples) mean += s.alt;
        mean /= samples.size();
        cell.mean_alt = mean;
        for (const auto& s : samples) {
            const double d = s.alt - mean;
            cell.deviations.push_back(d);
            all_devs.push_back(d);
            sum_sq += d * d;
        }
        n_dev += cell.n_fixes;
        dof += cell.n_fixes - 1;
        rep.cells.push_back(std::move(cell));
    }
    if (rep.cells.empty()) throw NoQualifiedCells("grid_altitude_report: no cell passed the pass/drive thresholds");

    rep.n_fixes_used = n_dev;
    rep.rmse = std::sqrt(sum_sq / static_cast<double>(n_dev));
    rep.corrected_sigma = dof > 0 ? std::sqrt(sum_sq / static_cast<double>(dof)) : 0.0;

    // histogram
    double lo = *std::min_element(all_devs.begin(), all_devs.end());
    double hi = *std::max_element(all_devs.begin(), all_devs.end());
    const double w = spec.histogram_bin;
    const long b0 = static_cast<long>(std::floor(lo / w));
    const long b1 = static_cast<long>(std::floor(hi / w));
    rep.histogram.resize(static_cast<size_t>(b1 - b0 + 1));
    for (size_t i = 0; i < rep.histogram.size(); ++i) {
        rep.histogram[i].left = (b0 + static_cast<long>(i)) * w;
        rep.histogram[i].right = rep.histogram[i].left + w;
    }
    for (double d : all_devs) {
        const long b = static_cast<long>(std::floor(d / w)) - b0;
        if (b >= 0 && b < static_cast<long>(rep.histogram.size())) ++rep.histogram[b].count;
    }

    std::sort(all_devs.begin(), all_devs.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (double p : {0.5, 0.68, 0.95}) {
        const size_t k = std::min(all_devs.size() - 1,
                                  static_cast<size_t>(p * static_cast<double>(all_devs.size())));
        rep.percentiles.emplace_back(p, std::abs(all_devs[k]));
    }
    return rep;
}

struct Comparison {
    double rmse_candidate = 0.0;
    double rmse_baseline = 0.0;
    double reduction_fraction = 0.0;  // 1 - rmse_candidate / rmse_baseline
    std::vector<HistogramBin> candidate_histogram;
    std::vector<HistogramBin> baseline_histogram;
};

inline Comparison compare_solutions(const GridReport& candidate, const GridReport& baseline) {
    if (!candidate.spec.compatible(baseline.spec))
        throw SpecMismatch("compare_solutions: reports built with different grid specs");
    Comparison c;
    c.rmse_candidate = candidate.rmse;
    c.rmse_baseline = baseline.rmse;
    c.reduction_fraction = 1.0 - candidate.rmse / baseline.rmse;
    c.candidate_histogram = candidate.histogram;
    c.baseline_histogram = baseline.histogram;
    return c;
}

struct HorizontalErrorEstimate {
    double north_rmse = 0.0;
    double east_rmse = 0.0;
    double assumed_uere = 0.0;
};

// DOP-scaled horizontal error: per fix sigma_h = hdop * uere, split
// isotropically between north and east.
inline HorizontalErrorEstimate horizontal_error_estimate(const std::vector<FixRecord>& fixes,
                                                         double assumed_uere) {
    if (fixes.empty()) throw MissingDop("horizontal_error_estimate: no fixes");
    double sum_sq = 0.0;
    for (const auto& f : fixes) {
        if (!(f.hdop > 0.0)) throw MissingDop("horizontal_error_estimate: fix without DOP");
        const double sh = f.hdop * assumed_uere;
        sum_sq += sh * sh;
    }
    HorizontalErrorEstimate e;
    e.assumed_uere = assumed_uere;
    const double mean_sq = sum_sq / static_cast<double>(fixes.size());
    e.north_rmse = std::sqrt(mean_sq / 2.0);
    e.east_rmse = e.north_rmse;
    return e;
}

// UERE implied by a grid report: the vertical noise estimate normalized by
// the mean VDOP of the fixes that produced it.
inline double implied_uere(const GridReport& rep, const std::vector<FixRecord>& fixes) {
    if (fixes.empty()) throw MissingDop("implied_uere: no fixes");
    double vdop_sum = 0.0;
    for (const auto& f : fixes) {
        if (!(f.vdop > 0.0)) throw MissingDop("implied_uere: fix without DOP");
        vdop_sum += f.vdop;
    }
    return rep.corrected_sigma / (vdop_sum / static_cast<double>(fixes.size()));
}

}  // namespace gnsskit
