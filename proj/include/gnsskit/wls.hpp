#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gnsskit/corrections.hpp"
#include "gnsskit/geodesy.hpp"

namespace gnsskit {

struct Dop {
    double gdop = 0.0, pdop = 0.0, hdop = 0.0, vdop = 0.0, tdop = 0.0;
};

struct PvtSolution {
    GnssTime time;
    EcefPosition position = EcefPosition::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    double clock_bias = 0.0;     // [m]
    double clock_drift = 0.0;    // [m/s]
    double glonass_bias = 0.0;   // GPS-GLONASS inter-system offset [m]
    Eigen::MatrixXd covariance;  // 4x4 or 5x5: pos(3), clock, (glonass bias)
    Dop dop;
    int n_sats_used = 0;
    int iterations = 0;
};

struct Underdetermined : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// DOP from unit line-of-sight vectors (receiver to satellite, ECEF) with the
// position block rotated into NED at the receiver for the h/v split.
inline Dop dop_of(const std::vector<Eigen::Vector3d>& los, const GeodeticPosition& receiver) {
    if (los.size() < 4) throw Underdetermined("dop_of: fewer than 4 geometry rows");
    Eigen::MatrixXd g(los.size(), 4);
    for (size_t i = 0; i < los.size(); ++i) g.row(i) << -los[i].transpose(), 1.0;

    const Eigen::Matrix4d gtg = g.transpose() * g;
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(gtg);
    const double cond = svd.singularValues()(0) / svd.singularValues()(3);
    if (!std::isfinite(cond) || cond > 1e10)
        throw SingularGeometry("dop_of: geometry matrix is rank deficient");

    const Eigen::Matrix4d q = gtg.inverse();
    const Eigen::Matrix3d r = ned_matrix_at(receiver);
    const Eigen::Matrix3d q_ned = r * q.topLeftCorner<3, 3>() * r.transpose();

    Dop d;
    d.hdop = std::sqrt(q_ned(0, 0) + q_ned(1, 1));
    d.vdop = std::sqrt(q_ned(2, 2));
    d.pdop = std::sqrt(q_ned.trace());
    d.tdop = std::sqrt(q(3, 3));
    d.gdop = std::sqrt(q.trace());
    return d;
}

// Weighted least squares over one epoch: Gauss-Newton on pseudorange
// residuals for [x, y, z, clock_bias, (glonass_bias)], then a linear solve
// on pseudorange rates for velocity and clock drift using the converged
// geometry.
inline PvtSolution wls_solve(const std::vector<ProcessedMeasurement>& epoch,
                             const EcefPosition& initial_guess = EcefPosition::Zero()) {
    bool has_glo = false, has_gps = false;
    for (const auto& m : epoch) {
        if (m.sat.constellation == Constellation::GLONASS)
            has_glo = true;
        else
            has_gps = true;
    }
    const bool mixed = has_glo && has_gps;
    const int nx = mixed ? 5 : 4;
    const int n = static_cast<int>(epoch.size());
    if (n < nx)
        throw Underdetermined("wls_solve: " + std::to_string(n) + " measurements for " +
                              std::to_string(nx) + " unknowns");

    Eigen::VectorXd x = Eigen::VectorXd::Zero(nx);
    x.head<3>() = initial_guess;

    Eigen::MatrixXd g(n, nx);
    Eigen::VectorXd res(n);
    Eigen::VectorXd w(n);
    int iter = 0;
    for (; iter < 15; ++iter) {
        for (int i = 0; i < n; ++i) {
            const auto& m = epoch[i];
            const Eigen::Vector3d d = m.sat_state.position - x.head<3>();
            const double range = d.norm();
            const Eigen::Vector3d u = d / range;
            const bool glo = m.sat.constellation == Constellation::GLONASS;
            double pred = range + x(3);
            if (mixed && glo) pred += x(4);
            res(i) = m.corrected_pseudorange - m.iono_delay - m.tropo_delay - pred;
            g.row(i).head<3>() = -u.transpose();
            g(i, 3) = 1.0;
            if (mixed) g(i, 4) = glo ? 1.0 : 0.0;
            w(i) = m.weight > 0.0 ? m.weight : 1.0;
        }
        const Eigen::MatrixXd gtw = g.transpose() * w.asDiagonal();
        const Eigen::MatrixXd ngm = gtw * g;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(ngm, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double cond =
            svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
        if (!std::isfinite(cond) || cond > 1e10)
            throw SingularGeometry("wls_solve: geometry condition number " + std::to_string(cond));
        const Eigen::VectorXd dx = svd.solve(gtw * res);
        x += dx;
        if (dx.norm() < 1e-8) break;
    }
    if (iter == 15) throw NoConvergence("wls_solve: Gauss-Newton did not converge");

    PvtSolution sol;
    sol.time = epoch.front().raw.time;
    sol.position = x.head<3>();
    sol.clock_bias = x(3);
    sol.glonass_bias = mixed ? x(4) : 0.0;
    sol.n_sats_used = n;
    sol.iterations = iter + 1;

    const Eigen::MatrixXd gtw = g.transpose() * w.asDiagonal();
    sol.covariance = (gtw * g).inverse();

    // velocity and clock drift from pseudorange rates against the converged geometry
    {
        Eigen::MatrixXd gv(n, 4);
        Eigen::VectorXd zv(n);
        for (int i = 0; i < n; ++i) {
            const auto& m = epoch[i];
            const Eigen::Vector3d d = m.sat_state.position - sol.position;
            const Eigen::Vector3d u = d.normalized();
            const double z = m.pseudorange_rate + SPEED_OF_LIGHT * m.sat_state.clock_drift -
                             u.dot(m.sat_state.velocity);
            zv(i) = z;
            gv.row(i).head<3>() = -u.transpose();
            gv(i, 3) = 1.0;
        }
        const Eigen::Vector4d v =
            (gv.transpose() * w.asDiagonal() * gv).ldlt().solve(gv.transpose() * w.asDiagonal() * zv);
        sol.velocity = v.head<3>();
        sol.clock_drift = v(3);
    }

    std::vector<Eigen::Vector3d> los;
    los.reserve(n);
    for (const auto& m : epoch) los.push_back((m.sat_state.position - sol.position).normalized());
    sol.dop = dop_of(los, ecef_to_geodetic(sol.position));
    return sol;
}

}  // namespace gnsskit
