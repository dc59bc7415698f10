#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <variant>
#include <vector>

#include "gnsskit/constants.hpp"
#include "gnsskit/geodesy.hpp"
#include "gnsskit/time.hpp"

namespace gnsskit {

enum class Constellation { GPS, GLONASS };

struct SatId {
    Constellation constellation = Constellation::GPS;
    int prn_or_slot = 0;    // GPS PRN 1-32, GLONASS slot 1-24
    int freq_channel = 0;   // GLONASS -7..+6, always 0 for GPS

    bool operator<(const SatId& o) const {
        if (constellation != o.constellation) return constellation < o.constellation;
        return prn_or_slot < o.prn_or_slot;
    }
    bool operator==(const SatId& o) const {
        return constellation == o.constellation && prn_or_slot == o.prn_or_slot;
    }
};

inline double wavelength_of(const SatId& sat) {
    if (sat.constellation == Constellation::GPS) return SPEED_OF_LIGHT / GPS_L1_HZ;
    return SPEED_OF_LIGHT / (GLO_L1_BASE_HZ + sat.freq_channel * GLO_L1_STEP_HZ);
}

// Keplerian broadcast ephemeris (GPS), fields per the broadcast message.
struct KeplerEphemeris {
    GnssTime toe;
    double sqrt_a = 0.0;     // [m^0.5]
    double e = 0.0;
    double i0 = 0.0, omega0 = 0.0, omega = 0.0, m0 = 0.0;  // [rad]
    double delta_n = 0.0, idot = 0.0, omega_dot = 0.0;     // [rad/s]
    double cuc = 0.0, cus = 0.0, crc = 0.0, crs = 0.0, cic = 0.0, cis = 0.0;
    GnssTime toc;
    double af0 = 0.0, af1 = 0.0, af2 = 0.0;  // [s, s/s, s/s^2]
    double tgd = 0.0;                        // [s]
    double ura = 0.0;
    int health = 0;
    double fit_interval_s = 4.0 * 3600.0;
};

// GLONASS state-vector ephemeris. Positions are ECEF (PZ-90 treated as WGS84).
struct GlonassEphemeris {
    GnssTime tb;                          // on the GPS timescale
    Eigen::Vector3d position = Eigen::Vector3d::Zero();      // [m]
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();      // [m/s]
    Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();  // lunisolar [m/s^2]
    double tau_n = 0.0;    // clock bias [s]; bias = -tau_n + gamma_n*dt
    double gamma_n = 0.0;  // relative frequency bias [s/s]
    int freq_channel = 0;
    int health = 0;
    double validity_s = 15.0 * 60.0;
};

struct SatState {
    EcefPosition position = EcefPosition::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    double clock_bias = 0.0;   // [s]
    double clock_drift = 0.0;  // [s/s]
};

struct StaleEphemeris : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoEphemeris : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kepler's equation M = E - e sin E by Newton iteration.
inline double kepler_solve(double mean_anomaly, double ecc) {
    if (ecc < 0.0 || ecc >= 0.1) throw std::invalid_argument("kepler_solve: e out of [0, 0.1)");
    double big_e = mean_anomaly;
    for (int i = 0; i < 20; ++i) {
        const double f = big_e - ecc * std::sin(big_e) - mean_anomaly;
        if (std::abs(f) < 1e-13) return big_e;
        big_e -= f / (1.0 - ecc * std::cos(big_e));
    }
    if (std::abs(big_e - ecc * std::sin(big_e) - mean_anomaly) < 1e-12) return big_e;
    throw NoConvergence("kepler_solve: Newton iteration cap exceeded");
}

// Satellite position/velocity/clock from a Keplerian broadcast record at
// transmit time (satellite-clock time). Velocity is analytic, by
// differentiation of the closed-form position equations.
inline SatState gps_sat_state(const KeplerEphemeris& eph, const GnssTime& t_transmit) {
    const double tk = t_transmit - eph.toe;
    if (std::abs(tk) > eph.fit_interval_s)
        throw StaleEphemeris("gps_sat_state: transmit time outside fit interval");

    const double a = eph.sqrt_a * eph.sqrt_a;
    const double n = std::sqrt(GM_GPS / (a * a * a)) + eph.delta_n;
    const double mk = eph.m0 + n * tk;
    const double ek = kepler_solve(std::remainder(mk, 2.0 * PI), eph.e);
    const double ek_dot = n / (1.0 - eph.e * std::cos(ek));

    const double sin_e = std::sin(ek), cos_e = std::cos(ek);
    const double vk = std::atan2(std::sqrt(1.0 - eph.e * eph.e) * sin_e, cos_e - eph.e);
    const double vk_dot = ek_dot * std::sqrt(1.0 - eph.e * eph.e) / (1.0 - eph.e * cos_e);

    const double phik = vk + eph.omega;
    const double s2p = std::sin(2.0 * phik), c2p = std::cos(2.0 * phik);

    const double du = eph.cus * s2p + eph.cuc * c2p;
    const double dr = eph.crs * s2p + eph.crc * c2p;
    const double di = eph.cis * s2p + eph.cic * c2p;

    const double uk = phik + du;
    const double rk = a * (1.0 - eph.e * cos_e) + dr;
    const double ik = eph.i0 + di + eph.idot * tk;

    const double du_dot = 2.0 * vk_dot * (eph.cus * c2p - eph.cuc * s2p);
    const double dr_dot = 2.0 * vk_dot * (eph.crs * c2p - eph.crc * s2p);
    const double di_dot = 2.0 * vk_dot * (eph.cis * c2p - eph.cic * s2p);

    const double uk_dot = vk_dot + du_dot;
    const double rk_dot = a * eph.e * sin_e * ek_dot + dr_dot;
    const double ik_dot = eph.idot + di_dot;

    const double xo = rk * std::cos(uk), yo = rk * std::sin(uk);
    const double xo_dot = rk_dot * std::cos(uk) - yo * uk_dot;
    const double yo_dot = rk_dot * std::sin(uk) + xo * uk_dot;

    const double omegak = eph.omega0 + (eph.omega_dot - OMEGA_EARTH) * tk - OMEGA_EARTH * eph.toe.tow;
    const double omegak_dot = eph.omega_dot - OMEGA_EARTH;

    const double so = std::sin(omegak), co = std::cos(omegak);
    const double si = std::sin(ik), ci = std::cos(ik);

    SatState st;
    st.position = {xo * co - yo * ci * so, xo * so + yo * ci * co, yo * si};
    st.velocity = {
        xo_dot * co - yo_dot * ci * so + yo * si * so * ik_dot - st.position.y() * omegak_dot,
        xo_dot * so + yo_dot * ci * co - yo * si * co * ik_dot + st.position.x() * omegak_dot,
        yo_dot * si + yo * ci * ik_dot};

    const double dtc = t_transmit - eph.toc;
    const double rel = REL_CLOCK_F * eph.e * eph.sqrt_a * sin_e;
    st.clock_bias = eph.af0 + eph.af1 * dtc + eph.af2 * dtc * dtc + rel - eph.tgd;
    st.clock_drift = eph.af1 + 2.0 * eph.af2 * dtc + REL_CLOCK_F * eph.e * eph.sqrt_a * cos_e * ek_dot;
    return st;
}

namespace detail {

// GLONASS equations of motion in the rotating PZ-90 frame:
// central gravity + J2 + lunisolar acceleration + centrifugal/Coriolis.
inline void glonass_deriv(const Eigen::Vector3d& p, const Eigen::Vector3d& v,
                          const Eigen::Vector3d& acc_ls, Eigen::Vector3d& dp, Eigen::Vector3d& dv) {
    const double r = p.norm();
    const double r2 = r * r;
    const double gm_r3 = GM_GLO / (r2 * r);
    const double j2_term = 1.5 * PZ90_J2 * gm_r3 * (PZ90_AE * PZ90_AE) / r2;
    const double z2_r2 = p.z() * p.z() / r2;
    const double w = OMEGA_GLO;
    dp = v;
    dv.x() = -gm_r3 * p.x() - j2_term * p.x() * (1.0 - 5.0 * z2_r2) + w * w * p.x() + 2.0 * w * v.y() + acc_ls.x();
    dv.y() = -gm_r3 * p.y() - j2_term * p.y() * (1.0 - 5.0 * z2_r2) + w * w * p.y() - 2.0 * w * v.x() + acc_ls.y();
    dv.z() = -gm_r3 * p.z() - j2_term * p.z() * (3.0 - 5.0 * z2_r2) + acc_ls.z();
}

inline void glonass_rk4_step(Eigen::Vector3d& p, Eigen::Vector3d& v, const Eigen::Vector3d& acc_ls,
                             double h) {
    Eigen::Vector3d k1p, k1v, k2p, k2v, k3p, k3v, k4p, k4v;
    glonass_deriv(p, v, acc_ls, k1p, k1v);
    glonass_deriv(p + 0.5 * h * k1p, v + 0.5 * h * k1v, acc_ls, k2p, k2v);
    glonass_deriv(p + 0.5 * h * k2p, v + 0.5 * h * k2v, acc_ls, k3p, k3v);
    glonass_deriv(p + h * k3p, v + h * k3v, acc_ls, k4p, k4v);
    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

}  // namespace detail

// RK4 integration from the reference state, 60 s steps with a final
// fractional step.
inline SatState glonass_sat_state(const GlonassEphemeris& eph, const GnssTime& t_transmit,
                                  double step_s = 60.0) {
    const double dt = t_transmit - eph.tb;
    if (std::abs(dt) > eph.validity_s)
        throw StaleEphemeris("glonass_sat_state: transmit time outside validity window");

    Eigen::Vector3d p = eph.position, v = eph.velocity;
    double remaining = dt;
    const double sign = (dt >= 0.0) ? 1.0 : -1.0;
    while (std::abs(remaining) > 1e-12) {
        const double h = sign * std::min(step_s, std::abs(remaining));
        detail::glonass_rk4_step(p, v, eph.acceleration, h);
        remaining -= h;
    }

    SatState st;
    st.position = p;
    st.velocity = v;
    st.clock_bias = -eph.tau_n + eph.gamma_n * dt;
    st.clock_drift = eph.gamma_n;
    return st;
}

using AnyEphemeris = std::variant<KeplerEphemeris, GlonassEphemeris>;

inline GnssTime ephemeris_ref_time(const AnyEphemeris& e) {
    if (std::holds_alternative<KeplerEphemeris>(e)) return std::get<KeplerEphemeris>(e).toe;
    return std::get<GlonassEphemeris>(e).tb;
}

// Per-satellite record collection; selection picks the record with minimal
// |t - toe/tb|, ties broken in favor of the later-inserted record.
// Concurrent readers, exclusive insertion.
class EphemerisStore {
public:
    EphemerisStore() = default;
    EphemerisStore(const EphemerisStore& other) : store_(other.snapshot()) {}
    EphemerisStore(EphemerisStore&& other) noexcept : store_(other.take()) {}
    EphemerisStore& operator=(const EphemerisStore& other) {
        if (this != &other) {
            auto copy = other.snapshot();
            std::unique_lock lock(mutex_);
            store_ = std::move(copy);
        }
        return *this;
    }
    EphemerisStore& operator=(EphemerisStore&& other) noexcept {
        if (this != &other) {
            auto moved = other.take();
            std::unique_lock lock(mutex_);
            store_ = std::move(moved);
        }
        return *this;
    }

    void insert(const SatId& sat, AnyEphemeris eph) {
        std::unique_lock lock(mutex_);
        store_[sat].push_back(std::move(eph));
    }

    bool has(const SatId& sat) const {
        std::shared_lock lock(mutex_);
        return store_.count(sat) > 0;
    }

    AnyEphemeris select(const SatId& sat, const GnssTime& t) const {
        std::shared_lock lock(mutex_);
        auto it = store_.find(sat);
        if (it == store_.end() || it->second.empty())
            throw NoEphemeris("no ephemeris for satellite");
        const AnyEphemeris* best = nullptr;
        double best_dt = 0.0;
        for (const auto& e : it->second) {
            const double d = std::abs(t - ephemeris_ref_time(e));
            if (!best || d <= best_dt) {
                best = &e;
                best_dt = d;
            }
        }
        return *best;
    }

    SatState state_at(const SatId& sat, const GnssTime& t_transmit) const {
        const AnyEphemeris e = select(sat, t_transmit);
        if (std::holds_alternative<KeplerEphemeris>(e))
            return gps_sat_state(std::get<KeplerEphemeris>(e), t_transmit);
        return glonass_sat_state(std::get<GlonassEphemeris>(e), t_transmit);
    }

    // Frequency channel as carried by the selected GLONASS record.
    int freq_channel(const SatId& sat, const GnssTime& t) const {
        const AnyEphemeris e = select(sat, t);
        if (std::holds_alternative<GlonassEphemeris>(e))
            return std::get<GlonassEphemeris>(e).freq_channel;
        return 0;
    }

    size_t size() const {
        std::shared_lock lock(mutex_);
        size_t n = 0;
        for (const auto& [k, v] : store_) n += v.size();
        return n;
    }

private:
    std::map<SatId, std::vector<AnyEphemeris>> snapshot() const {
        std::shared_lock lock(mutex_);
        return store_;
    }
    std::map<SatId, std::vector<AnyEphemeris>> take() {
        std::unique_lock lock(mutex_);
        return std::move(store_);
    }

    mutable std::shared_mutex mutex_;
    std::map<SatId, std::vector<AnyEphemeris>> store_;
};

}  // namespace gnsskit
