#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gnsskit/corrections.hpp"
#include "gnsskit/pose.hpp"
#include "gnsskit/raw.hpp"
#include "gnsskit/refine.hpp"
#include "gnsskit/reproject.hpp"
#include "gnsskit/rinex.hpp"

namespace gnsskit {

// Declarative synthetic drive: a piecewise constant-velocity receiver on a
// local tangent plane under a generated GPS constellation. Identical seed
// and config give bit-identical output files.
struct SyntheticScene {
    std::uint64_t seed = 1;
    int n_sats = 24;
    GeodeticPosition start{37.4, -122.1, 30.0};
    double duration_s = 120.0;
    double rate_hz = 10.0;
    Eigen::Vector3d vel_ned{25.0, 0.0, 0.0};  // [m/s]
    double pr_sigma_m = 0.0;
    double rate_sigma_ms = 0.0;
    double clock_bias_m = 120.0;     // receiver clock bias at t0 [m]
    double clock_drift_ms = 0.05;    // receiver clock drift [m/s]
    bool atmosphere = false;         // apply Klobuchar/Saastamoinen in the forward model
    double elevation_mask_deg = 10.0;
    GnssTime t0{2100, 345600.0};
    double cn0_dbhz = 45.0;
    bool emit_pr_std = true;
};

struct SyntheticDrive {
    std::string raw_csv;
    std::string truth_pose_csv;
    std::string rinex_nav;
    std::vector<GlobalPose> truth;  // one per epoch
    EphemerisStore ephemeris;
    IonoParams iono;
};

namespace synth_detail {

// GPS-like constellation: 55 deg inclination, six planes, MEO radius, small
// seeded perturbations and harmonic terms so the propagation path is
// exercised end to end.
inline std::vector<std::pair<SatId, KeplerEphemeris>> make_constellation(const SyntheticScene& sc) {
    std::mt19937_64 rng(sc.seed ^ 0x5eed5a75ULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::pair<SatId, KeplerEphemeris>> out;
    for (int i = 0; i < sc.n_sats; ++i) {
        KeplerEphemeris e;
        e.toe = sc.t0;
        e.toc = sc.t0;
        e.sqrt_a = std::sqrt(26560e3) + 5.0 * u(rng);
        e.e = 0.005 + 0.005 * std::abs(u(rng));
        e.i0 = 55.0 * DEG2RAD + 0.02 * u(rng);
        e.omega0 = (i % 6) * 60.0 * DEG2RAD + 0.05 * u(rng);
        e.omega = 0.5 * u(rng) * PI;
        e.m0 = ((i / 6) * 90.0 + (i % 6) * 15.0) * DEG2RAD + 0.1 * u(rng);
        e.delta_n = 4.5e-9 * (1.0 + 0.2 * u(rng));
        e.omega_dot = -8.0e-9 * (1.0 + 0.1 * u(rng));
        e.idot = 4.0e-10 * u(rng);
        e.cus = 1.0e-5 * u(rng);
        e.cuc = 5.0e-6 * u(rng);
        e.crs = 60.0 * u(rng);
        e.crc = 200.0 * u(rng);
        e.cis = 1.0e-7 * u(rng);
        e.cic = 1.0e-7 * u(rng);
        e.af0 = 1e-5 * u(rng);
        e.af1 = 1e-12 * u(rng);
        e.af2 = 0.0;
        e.tgd = 3e-9 * u(rng);
        out.emplace_back(SatId{Constellation::GPS, i + 1, 0}, e);
    }
    return out;
}

}  // namespace synth_detail

inline EcefPosition scene_position_at(const SyntheticScene& sc, double t) {
    const EcefPosition p0 = geodetic_to_ecef(sc.start);
    const Eigen::Matrix3d ned = ned_matrix_at(sc.start);
    return p0 + ned.transpose() * (sc.vel_ned * t);
}

inline Eigen::Vector3d scene_velocity_ecef(const SyntheticScene& sc) {
    return ned_matrix_at(sc.start).transpose() * sc.vel_ned;
}

// Pseudorange such that the measurement-processing equations are inverted
// exactly: fixed point over the transit time and the applied corrections.
inline double forward_model_pseudorange(const EphemerisStore& ephs, const IonoParams& iono,
                                        const SatId& sat, const GnssTime& t_rx,
                                        const EcefPosition& rx, double clock_bias_m,
                                        bool atmosphere, double* elevation_out = nullptr) {
    const SatState coarse = ephs.state_at(sat, t_rx);
    double pr = (coarse.position - rx).norm();
    for (int outer = 0; outer < 12; ++outer) {
        double tau = pr / SPEED_OF_LIGHT;
        SatState st;
        for (int k = 0; k < 6; ++k) {
            st = ephs.state_at(sat, t_rx - tau);
            tau = pr / SPEED_OF_LIGHT + st.clock_bias;
        }
        const Eigen::Vector3d p = sagnac_rotate(st.position, tau);
        double az = 0.0, el = PI / 2.0;
        azel_of(rx, p, az, el);
        if (elevation_out) *elevation_out = el;
        double delay = 0.0;
        if (atmosphere) {
            const GeodeticPosition g = ecef_to_geodetic(rx);
            if (iono.valid) delay += klobuchar_delay(iono, g, az, el, t_rx);
            delay += saastamoinen_delay(g, el);
        }
        const double pr_new =
            (p - rx).norm() + clock_bias_m - SPEED_OF_LIGHT * st.clock_bias + delay;
        if (std::abs(pr_new - pr) < 1e-9) {
            pr = pr_new;
            break;
        }
        pr = pr_new;
    }
    return pr;
}

inline SyntheticDrive generate_drive(const SyntheticScene& sc) {
    SyntheticDrive out;
    const auto constellation = synth_detail::make_constellation(sc);
    out.iono.valid = sc.atmosphere;
    if (sc.atmosphere) {
        const double a[4] = {1.1e-8, -1.5e-8, -6.0e-8, 1.2e-7};
        const double b[4] = {1.2e5, -1.6e5, -6.6e4, 4.6e5};
        for (int i = 0; i < 4; ++i) {
            out.iono.alpha[i] = a[i];
            out.iono.beta[i] = b[i];
        }
    }
    {
        std::ostringstream ss;
        write_rinex3_gps_nav(ss, constellation, &out.iono);
        out.rinex_nav = ss.str();
    }
    for (const auto& [sat, eph] : constellation) out.ephemeris.insert(sat, eph);

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::ostringstream raw;
    raw << raw_csv_header() << "\n";

    const int n_epochs = static_cast<int>(sc.duration_s * sc.rate_hz);
    const double dt = 1.0 / sc.rate_hz;
    const Eigen::Vector3d v_ecef = scene_velocity_ecef(sc);

    for (int k = 0; k < n_epochs; ++k) {
        const double t = k * dt;
        const GnssTime t_rx = sc.t0 + t;
        const EcefPosition rx = scene_position_at(sc, t);
        const double cb = sc.clock_bias_m + sc.clock_drift_ms * t;

        GlobalPose pose;
        pose.time = t_rx;
        pose.position = rx;
        pose.orientation = ned_rotation_at(ecef_to_geodetic(rx));
        out.truth.push_back(pose);

        for (const auto& [sat, eph] : constellation) {
            double el = 0.0;
            const double pr = forward_model_pseudorange(out.ephemeris, out.iono, sat, t_rx, rx, cb,
                                                        sc.atmosphere, &el);
            if (el < sc.elevation_mask_deg * DEG2RAD) continue;

            // rate by central difference of the full pseudorange model, so the
            // doppler is consistent with the pseudorange time series
            const double delta = 0.05;
            const double pr_p = forward_model_pseudorange(
                out.ephemeris, out.iono, sat, t_rx + delta, scene_position_at(sc, t + delta),
                sc.clock_bias_m + sc.clock_drift_ms * (t + delta), sc.atmosphere);
            const double pr_m = forward_model_pseudorange(
                out.ephemeris, out.iono, sat, t_rx - delta, scene_position_at(sc, t - delta),
                sc.clock_bias_m + sc.clock_drift_ms * (t - delta), sc.atmosphere);
            const double rate = (pr_p - pr_m) / (2.0 * delta);

            RawGnssRecord rec;
            rec.time = t_rx;
            rec.sat = sat;
            rec.pseudorange = pr + sc.pr_sigma_m * (sc.pr_sigma_m > 0.0 ? gauss(rng) : 0.0);
            const double rate_noisy =
                rate + sc.rate_sigma_ms * (sc.rate_sigma_ms > 0.0 ? gauss(rng) : 0.0);
            rec.doppler = -rate_noisy / wavelength_of(sat);
            rec.cn0 = sc.cn0_dbhz;
            if (sc.emit_pr_std && sc.pr_sigma_m > 0.0) rec.pr_std = sc.pr_sigma_m;
            rec.carrier_phase = rec.pseudorange / wavelength_of(sat);  // carried, never solved
            raw << format_raw_line(rec) << "\n";
        }
    }
    out.raw_csv = raw.str();

    std::ostringstream poses;
    write_pose_csv(poses, out.truth);
    out.truth_pose_csv = poses.str();
    return out;
}

// ---------------------------------------------------------------------------
// Feature scenes: a straight road with ground-plane and roadside structure
// points, projected through true poses; pose and pixel noise applied on top.

struct FeatureSceneConfig {
    std::uint64_t seed = 7;
    int n_drives = 3;
    int n_frames = 12;
    int n_features = 60;
    double frame_spacing_m = 5.0;
    GeodeticPosition start{37.4, -122.1, 30.0};
    CameraIntrinsics camera{500.0, 500.0, 320.0, 240.0};
    double pos_noise_m = 0.0;
    double rot_noise_deg = 0.0;
    double pixel_noise_px = 0.0;
};

struct FeatureScene {
    CameraIntrinsics camera;
    std::vector<std::vector<GlobalPose>> true_poses;   // [drive][frame]
    std::vector<std::vector<GlobalPose>> noisy_poses;  // [drive][frame]
    std::vector<EcefPosition> world_points;            // [feature]
    // per drive: (frame, feature, pixel, depth) as projected through the TRUE pose
    std::vector<DepthFeatureFile> depth_files;
    // 2D-3D files per drive (world points attached), for orientation analysis
    std::vector<std::vector<Feature2D3D>> feature_obs;
};

inline FeatureScene generate_feature_scene(const FeatureSceneConfig& cfg) {
    FeatureScene out;
    out.camera = cfg.camera;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    const EcefPosition origin = geodetic_to_ecef(cfg.start);
    const Eigen::Matrix3d ned = ned_matrix_at(cfg.start);
    auto to_ecef = [&](const Eigen::Vector3d& ned_local) {
        return EcefPosition(origin + ned.transpose() * ned_local);
    };

    // features ahead of the first frame: road surface and roadside structure
    for (int i = 0; i < cfg.n_features; ++i) {
        const double along = 8.0 + uni(rng) * (cfg.frame_spacing_m * cfg.n_frames + 40.0);
        Eigen::Vector3d p;
        if (i % 2 == 0)
            p = {along, -4.0 + 8.0 * uni(rng), 1.5};                 // ground plane
        else
            p = {along, (uni(rng) < 0.5 ? -1.0 : 1.0) * (6.0 + 6.0 * uni(rng)),
                 -1.0 - 4.0 * uni(rng)};                             // poles / signs
        out.world_points.push_back(to_ecef(p));
    }

    for (int d = 0; d < cfg.n_drives; ++d) {
        std::vector<GlobalPose> truth, noisy;
        DepthFeatureFile df;
        df.camera = cfg.camera;
        std::vector<Feature2D3D> obs;
        for (int f = 0; f < cfg.n_frames; ++f) {
            GlobalPose pose;
            pose.time = GnssTime(2100, 400000.0 + f);
            pose.position = to_ecef({f * cfg.frame_spacing_m, 0.0, 0.0});
            // forward = north along the road
            pose.orientation = ned_rotation_at(ecef_to_geodetic(pose.position));
            truth.push_back(pose);

            GlobalPose np = pose;
            if (cfg.pos_noise_m > 0.0)
                np.position += cfg.pos_noise_m * Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
            if (cfg.rot_noise_deg > 0.0) {
                const Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
                np.orientation =
                    (Quaternion::from_axis_angle(axis, cfg.rot_noise_deg * DEG2RAD * gauss(rng)) *
                     np.orientation)
                        .normalized();
            }
            noisy.push_back(np);

            for (size_t i = 0; i < out.world_points.size(); ++i) {
                const Eigen::Vector3d pc = to_camera(pose, out.world_points[i]);
                if (pc.x() < 2.0) continue;  // behind or too close
                Eigen::Vector2d px = project(cfg.camera, pc);
                if (std::abs(px.x() - cfg.camera.cx) > 1.5 * cfg.camera.cx ||
                    std::abs(px.y() - cfg.camera.cy) > 1.5 * cfg.camera.cy)
                    continue;  // far outside the nominal image
                if (cfg.pixel_noise_px > 0.0)
                    px += cfg.pixel_noise_px * Eigen::Vector2d(gauss(rng), gauss(rng));
                df.observations.emplace_back(f, static_cast<int>(i), px, pc.x());
                Feature2D3D fo;
                fo.frame_id = f;
                fo.feature_id = static_cast<int>(i);
                fo.pixel = px;
                fo.world = out.world_points[i];
                obs.push_back(fo);
            }
        }
        out.true_poses.push_back(std::move(truth));
        out.noisy_poses.push_back(std::move(noisy));
        out.depth_files.push_back(std::move(df));
        out.feature_obs.push_back(std::move(obs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scene config file: flat "key = value" lines, '#' comments.

inline SyntheticScene parse_scene_config(std::istream& is) {
    SyntheticScene sc;
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) continue;
        if (key == "seed") sc.seed = std::stoull(val);
        else if (key == "n_sats") sc.n_sats = std::stoi(val);
        else if (key == "start_lat_deg") sc.start.lat_deg = std::stod(val);
        else if (key == "start_lon_deg") sc.start.lon_deg = std::stod(val);
        else if (key == "start_height_m") sc.start.height_m = std::stod(val);
        else if (key == "duration_s") sc.duration_s = std::stod(val);
        else if (key == "rate_hz") sc.rate_hz = std::stod(val);
        else if (key == "vel_north") sc.vel_ned.x() = std::stod(val);
        else if (key == "vel_east") sc.vel_ned.y() = std::stod(val);
        else if (key == "vel_down") sc.vel_ned.z() = std::stod(val);
        else if (key == "pr_sigma_m") sc.pr_sigma_m = std::stod(val);
        else if (key == "rate_sigma_ms") sc.rate_sigma_ms = std::stod(val);
        else if (key == "clock_bias_m") sc.clock_bias_m = std::stod(val);
        else if (key == "clock_drift_ms") sc.clock_drift_ms = std::stod(val);
        else if (key == "atmosphere") sc.atmosphere = (val == "1" || val == "true");
        else if (key == "elevation_mask_deg") sc.elevation_mask_deg = std::stod(val);
        else if (key == "week") sc.t0.week = std::stoi(val);
        else if (key == "tow") sc.t0 = GnssTime(sc.t0.week, std::stod(val));
        else if (key == "cn0_dbhz") sc.cn0_dbhz = std::stod(val);
        else throw std::runtime_error("scene config: unknown key '" + key + "'");
    }
    return sc;
}

}  // namespace gnsskit
