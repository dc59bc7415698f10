#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gnsskit/corrections.hpp"
#include "gnsskit/wls.hpp"

namespace gnsskit {

struct TimeReversal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KfConfig {
    // horizontal acceleration: first-order Gauss-Markov
    double accel_sigma = 2.0;      // stationary sigma [m/s^2]
    double accel_tau = 10.0;       // correlation time [s]
    double vert_accel_sigma = 0.5; // white vertical acceleration [m/s^2 / sqrt(s)]
    double clock_q_bias = 0.1;     // [m^2/s]
    double clock_q_drift = 0.01;   // [m^2/s^3]
    double glonass_q = 1e-4;       // inter-system bias random walk [m^2/s]
    double rate_sigma = 0.2;       // pseudorange-rate measurement sigma [m/s]
    double gate_sigma = 5.0;       // innovation gate
    double max_predict_dt = 2.0;   // beyond this, reinitialize from WLS
    double max_speed = 100.0;      // plausibility gate [m/s]
    int max_all_gated = 10;        // consecutive all-gated epochs before reset
};

// State: [position(3) m, velocity(3) m/s, clock_bias m, clock_drift m/s,
//         glonass_bias m, accel_north m/s^2, accel_east m/s^2]
struct FilterState {
    static constexpr int N = 11;
    Eigen::Matrix<double, N, 1> x = Eigen::Matrix<double, N, 1>::Zero();
    Eigen::Matrix<double, N, N> p = Eigen::Matrix<double, N, N>::Identity();
    GnssTime last_time;
    bool initialized = false;

    EcefPosition position() const { return x.head<3>(); }
    Eigen::Vector3d velocity() const { return x.segment<3>(3); }
    double clock_bias() const { return x(6); }
    double clock_drift() const { return x(7); }
    double glonass_bias() const { return x(8); }
};

struct UpdateReport {
    int n_applied = 0;
    int n_gated = 0;
    bool all_gated = false;
    std::vector<double> normalized_innovations;  // innovation / sqrt(S), applied only
};

inline FilterState kf_init_from_wls(const PvtSolution& sol, const KfConfig& cfg = {}) {
    FilterState s;
    s.x.head<3>() = sol.position;
    s.x.segment<3>(3) = sol.velocity;
    s.x(6) = sol.clock_bias;
    s.x(7) = sol.clock_drift;
    s.x(8) = sol.glonass_bias;
    s.p.setZero();
    s.p.topLeftCorner<3, 3>() = sol.covariance.topLeftCorner<3, 3>() * 4.0;
    s.p.block<3, 3>(3, 3) = Eigen::Matrix3d::Identity() * 4.0;
    s.p(6, 6) = sol.covariance(3, 3) * 4.0;
    s.p(7, 7) = 1.0;
    s.p(8, 8) = sol.covariance.rows() > 4 ? sol.covariance(4, 4) * 4.0 : 100.0;
    s.p(9, 9) = cfg.accel_sigma * cfg.accel_sigma;
    s.p(10, 10) = cfg.accel_sigma * cfg.accel_sigma;
    s.last_time = sol.time;
    s.initialized = true;
    return s;
}

// Exact discretization of the linear model over dt via Van Loan, so
// propagation satisfies the semigroup property to machine precision.
inline FilterState kf_predict(const FilterState& state, const GnssTime& to, const KfConfig& cfg = {}) {
    const double dt = to - state.last_time;
    if (dt < 0.0) throw TimeReversal("kf_predict: target time before filter time");
    if (dt == 0.0) {
        FilterState s = state;
        s.last_time = to;
        return s;
    }

    constexpr int n = FilterState::N;
    // local axes at the current position estimate, frozen over the step
    const GeodeticPosition g = ecef_to_geodetic(state.position());
    const Eigen::Matrix3d ned = ned_matrix_at(g);
    const Eigen::Vector3d north = ned.row(0), east = ned.row(1), down = ned.row(2);

    Eigen::Matrix<double, n, n> a = Eigen::Matrix<double, n, n>::Zero();
    a.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity();
    a.block<3, 1>(3, 9) = north;
    a.block<3, 1>(3, 10) = east;
    a(6, 7) = 1.0;
    a(9, 9) = -1.0 / cfg.accel_tau;
    a(10, 10) = -1.0 / cfg.accel_tau;

    Eigen::Matrix<double, n, n> qc = Eigen::Matrix<double, n, n>::Zero();
    const double qv = cfg.vert_accel_sigma * cfg.vert_accel_sigma;
    qc.block<3, 3>(3, 3) = qv * (down * down.transpose());
    qc(6, 6) = cfg.clock_q_bias;
    qc(7, 7) = cfg.clock_q_drift;
    qc(8, 8) = cfg.glonass_q;
    const double qa = 2.0 * cfg.accel_sigma * cfg.accel_sigma / cfg.accel_tau;
    qc(9, 9) = qa;
    qc(10, 10) = qa;

    Eigen::Matrix<double, 2 * n, 2 * n> vl = Eigen::Matrix<double, 2 * n, 2 * n>::Zero();
    vl.topLeftCorner<n, n>() = -a * dt;
    vl.topRightCorner<n, n>() = qc * dt;
    vl.bottomRightCorner<n, n>() = a.transpose() * dt;
    const Eigen::Matrix<double, 2 * n, 2 * n> evl = vl.exp();
    const Eigen::Matrix<double, n, n> phi = evl.bottomRightCorner<n, n>().transpose();
    const Eigen::Matrix<double, n, n> qd = phi * evl.topRightCorner<n, n>();

    FilterState s = state;
    s.x = phi * state.x;
    s.p = phi * state.p * phi.transpose() + qd;
    s.p = ((s.p + s.p.transpose()) / 2.0).eval();
    s.last_time = to;
    return s;
}

namespace detail {

inline bool scalar_update(FilterState& s, double innovation, const Eigen::Matrix<double, FilterState::N, 1>& h,
                          double r, double gate_sigma, UpdateReport& rep) {
    const double sv = (h.transpose() * s.p * h)(0) + r;
    if (innovation * innovation > gate_sigma * gate_sigma * sv) {
        ++rep.n_gated;
        return false;
    }
    const Eigen::Matrix<double, FilterState::N, 1> k = s.p * h / sv;
    s.x += k * innovation;
    // Joseph form
    const Eigen::Matrix<double, FilterState::N, FilterState::N> ikh =
        Eigen::Matrix<double, FilterState::N, FilterState::N>::Identity() - k * h.transpose();
    s.p = ikh * s.p * ikh.transpose() + k * r * k.transpose();
    s.p = ((s.p + s.p.transpose()) / 2.0).eval();
    ++rep.n_applied;
    rep.normalized_innovations.push_back(innovation / std::sqrt(sv));
    return true;
}

}  // namespace detail

// Sequential scalar updates: pseudorange then pseudorange rate per satellite,
// innovation-gated; linearization point is the predicted state.
inline FilterState kf_update(const FilterState& state, const std::vector<ProcessedMeasurement>& epoch,
                             UpdateReport& rep, const KfConfig& cfg = {}) {
    FilterState s = state;
    rep = UpdateReport{};

    for (const auto& m : epoch) {
        const bool glo = m.sat.constellation == Constellation::GLONASS;

        {
            const Eigen::Vector3d d = m.sat_state.position - s.position();
            const double range = d.norm();
            const Eigen::Vector3d u = d / range;
            double pred = range + s.clock_bias();
            if (glo) pred += s.glonass_bias();
            const double z = m.corrected_pseudorange - m.iono_delay - m.tropo_delay;
            Eigen::Matrix<double, FilterState::N, 1> h = Eigen::Matrix<double, FilterState::N, 1>::Zero();
            h.head<3>() = -u;
            h(6) = 1.0;
            if (glo) h(8) = 1.0;
            const double r = m.weight > 0.0 ? 1.0 / m.weight : 100.0;
            detail::scalar_update(s, z - pred, h, r, cfg.gate_sigma, rep);
        }
        {
            const Eigen::Vector3d d = m.sat_state.position - s.position();
            const Eigen::Vector3d u = d.normalized();
            const double z = m.pseudorange_rate + SPEED_OF_LIGHT * m.sat_state.clock_drift;
            const double pred = u.dot(m.sat_state.velocity - s.velocity()) + s.clock_drift();
            Eigen::Matrix<double, FilterState::N, 1> h = Eigen::Matrix<double, FilterState::N, 1>::Zero();
            h.segment<3>(3) = -u;
            h(7) = 1.0;
            detail::scalar_update(s, z - pred, h, cfg.rate_sigma * cfg.rate_sigma, cfg.gate_sigma,
                                  rep);
        }
    }
    rep.all_gated = (rep.n_applied == 0 && rep.n_gated > 0);
    if (rep.all_gated) return state;  // unchanged, flagged
    return s;
}

}  // namespace gnsskit
