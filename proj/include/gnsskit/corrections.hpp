#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "gnsskit/ephemeris.hpp"
#include "gnsskit/geodesy.hpp"
#include "gnsskit/raw.hpp"
#include "gnsskit/rinex.hpp"

namespace gnsskit {

struct ProcessedMeasurement {
    SatId sat;
    SatState sat_state;             // at corrected transmit time, earth-rotation compensated
    double corrected_pseudorange = 0.0;  // satellite clock applied [m]
    double pseudorange_rate = 0.0;       // -wavelength * doppler [m/s]
    double iono_delay = 0.0;             // [m]
    double tropo_delay = 0.0;            // [m]
    double weight = 0.0;                 // [1/m^2]
    double elevation = 0.0;              // [rad], 0 if no receiver estimate
    double azimuth = 0.0;                // [rad]
    RawGnssRecord raw;
};

struct TransmitSolution {
    SatState state;        // earth-rotation compensated to reception frame
    GnssTime t_transmit;
    double transit_time = 0.0;  // converged pseudorange/c + satellite clock [s]
};

// Rotate an ECEF vector into the frame of reception time, i.e. compensate
// earth rotation over the transit time (Sagnac).
inline Eigen::Vector3d sagnac_rotate(const Eigen::Vector3d& p, double transit_s) {
    const double theta = OMEGA_EARTH * transit_s;
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x() + s * p.y(), -s * p.x() + c * p.y(), p.z()};
}

// Fixed-point solve for the transmit time: tau_{k+1} = pr/c + sat_clock(t_rx - tau_k).
inline TransmitSolution transmit_time_solve(const RawGnssRecord& rec, const EphemerisStore& ephs) {
    double tau = rec.pseudorange / SPEED_OF_LIGHT;
    SatState st;
    bool converged = false;
    for (int i = 0; i < 10; ++i) {
        const GnssTime t_tx = rec.time - tau;
        st = ephs.state_at(rec.sat, t_tx);
        const double tau_next = rec.pseudorange / SPEED_OF_LIGHT + st.clock_bias;
        if (std::abs(tau_next - tau) < 1e-10) {
            tau = tau_next;
            converged = true;
            break;
        }
        tau = tau_next;
    }
    if (!converged) throw NoConvergence("transmit_time_solve: fixed point did not converge");

    TransmitSolution out;
    out.t_transmit = rec.time - tau;
    out.transit_time = tau;
    st.position = sagnac_rotate(st.position, tau);
    st.velocity = sagnac_rotate(st.velocity, tau);
    out.state = st;
    return out;
}

// Azimuth/elevation of a satellite from a receiver position.
inline void azel_of(const EcefPosition& rx, const EcefPosition& sat, double& az, double& el) {
    const GeodeticPosition g = ecef_to_geodetic(rx);
    const Eigen::Vector3d ned = ned_matrix_at(g) * (sat - rx).normalized();
    el = std::asin(-ned.z());
    az = std::atan2(ned.y(), ned.x());
}

// Klobuchar broadcast ionospheric model, L1 delay in meters.
inline double klobuchar_delay(const IonoParams& iono, const GeodeticPosition& receiver, double az,
                              double el, const GnssTime& t) {
    // semicircle units throughout, per the broadcast model definition
    const double el_sc = el / PI;
    const double psi = 0.0137 / (el_sc + 0.11) - 0.022;
    double phi_i = receiver.lat_deg / 180.0 + psi * std::cos(az);
    phi_i = std::clamp(phi_i, -0.416, 0.416);
    const double lambda_i = receiver.lon_deg / 180.0 + psi * std::sin(az) / std::cos(phi_i * PI);
    const double phi_m = phi_i + 0.064 * std::cos((lambda_i - 1.617) * PI);

    double lt = 4.32e4 * lambda_i + t.tow;
    lt = std::fmod(lt, 86400.0);
    if (lt < 0.0) lt += 86400.0;

    const double obliquity = 1.0 + 16.0 * std::pow(0.53 - el_sc, 3.0);

    double amp = 0.0, per = 0.0;
    double pm = 1.0;
    for (int i = 0; i < 4; ++i) {
        amp += iono.alpha[i] * pm;
        per += iono.beta[i] * pm;
        pm *= phi_m;
    }
    if (amp < 0.0) amp = 0.0;
    if (per < 72000.0) per = 72000.0;

    const double x = 2.0 * PI * (lt - 50400.0) / per;
    double t_iono;
    if (std::abs(x) < 1.57)
        t_iono = obliquity * (5e-9 + amp * (1.0 - x * x / 2.0 + x * x * x * x / 24.0));
    else
        t_iono = obliquity * 5e-9;
    return SPEED_OF_LIGHT * t_iono;
}

// Klobuchar obliquity factor alone (for tests and documentation).
inline double klobuchar_obliquity(double el) {
    const double el_sc = el / PI;
    return 1.0 + 16.0 * std::pow(0.53 - el_sc, 3.0);
}

// Saastamoinen zenith delay with standard-atmosphere met values at the
// receiver height, mapped by 1/sin(el).
inline double saastamoinen_delay(const GeodeticPosition& receiver, double el,
                                 double relative_humidity = 0.7) {
    const double h = std::clamp(receiver.height_m, 0.0, 11000.0);
    const double pressure = 1013.25 * std::pow(1.0 - 2.2557e-5 * h, 5.2568);  // [hPa]
    const double temp = 288.15 - 6.5e-3 * h;                                  // [K]
    const double e_w = 6.108 * relative_humidity *
                       std::exp((17.15 * temp - 4684.0) / (temp - 38.45));    // [hPa]
    const double zenith = 0.002277 * (pressure + (1255.0 / temp + 0.05) * e_w);
    return zenith / std::sin(el);
}

// Measurement weight [1/m^2]: reported sigma when present, else a C/N0 and
// elevation dependent model anchored at sigma = 1 m for 45 dB-Hz at zenith.
inline double weight_of(const RawGnssRecord& rec, double el) {
    double sigma;
    if (rec.pr_std)
        sigma = *rec.pr_std;
    else
        sigma = 1.0 * std::pow(10.0, -(rec.cn0 - 45.0) / 20.0) / std::sin(el);
    return 1.0 / (sigma * sigma);
}

struct ProcessConfig {
    double elevation_mask_deg = 10.0;
    double cn0_floor_dbhz = 20.0;
    bool apply_iono = true;
    bool apply_tropo = true;
};

struct EpochDiagnostics {
    int n_input = 0;
    int n_no_ephemeris = 0;
    int n_below_mask = 0;
    int n_low_cn0 = 0;
    int n_used = 0;
};

// Turn one raw epoch into corrected measurements. When rx_approx is absent
// (cold start) the elevation mask and atmospheric corrections are skipped;
// callers bootstrap a coarse position first and reprocess.
inline std::vector<ProcessedMeasurement> process_epoch(
    const RawEpoch& epoch, const EphemerisStore& ephs, const IonoParams& iono,
    const std::optional<EcefPosition>& rx_approx, const ProcessConfig& cfg = {},
    EpochDiagnostics* diag = nullptr) {
    std::vector<ProcessedMeasurement> out;
    EpochDiagnostics local;
    local.n_input = static_cast<int>(epoch.records.size());

    for (const auto& rec : epoch.records) {
        if (rec.cn0 < cfg.cn0_floor_dbhz) {
            ++local.n_low_cn0;
            continue;
        }
        TransmitSolution ts;
        try {
            ts = transmit_time_solve(rec, ephs);
        } catch (const NoEphemeris&) {
            ++local.n_no_ephemeris;
            continue;
        } catch (const StaleEphemeris&) {
            ++local.n_no_ephemeris;
            continue;
        }

        ProcessedMeasurement m;
        m.sat = rec.sat;
        m.sat_state = ts.state;
        m.raw = rec;
        m.corrected_pseudorange = rec.pseudorange + SPEED_OF_LIGHT * ts.state.clock_bias;
        m.pseudorange_rate = -wavelength_of(rec.sat) * rec.doppler;

        if (rx_approx) {
            azel_of(*rx_approx, ts.state.position, m.azimuth, m.elevation);
            if (m.elevation < cfg.elevation_mask_deg * DEG2RAD) {
                ++local.n_below_mask;
                continue;
            }
            const GeodeticPosition g = ecef_to_geodetic(*rx_approx);
            if (cfg.apply_iono && iono.valid)
                m.iono_delay = klobuchar_delay(iono, g, m.azimuth, m.elevation, rec.time);
            if (cfg.apply_tropo) m.tropo_delay = saastamoinen_delay(g, m.elevation);
            m.weight = weight_of(rec, m.elevation);
        } else {
            m.elevation = PI / 2.0;
            m.weight = weight_of(rec, m.elevation);
        }
        ++local.n_used;
        out.push_back(m);
    }
    if (diag) *diag = local;
    return out;
}

}  // namespace gnsskit
