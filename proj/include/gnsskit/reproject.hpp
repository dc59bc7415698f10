#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gnsskit/pose.hpp"

namespace gnsskit {

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;  // [px]
};

struct Feature2D3D {
    int frame_id = 0;
    int feature_id = 0;
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    EcefPosition world = EcefPosition::Zero();
};

struct BehindCamera : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Underdetermined2D3D : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The camera axes are the pose's local [forward, right, down] axes:
// depth is the forward component, image x follows right, image y follows down.
inline Eigen::Vector3d to_camera(const GlobalPose& pose, const EcefPosition& world) {
    return pose.orientation.matrix() * (world - pose.position);
}

inline Eigen::Vector2d project(const CameraIntrinsics& cam, const Eigen::Vector3d& p_cam) {
    const double fwd = p_cam.x();
    if (fwd <= 0.0) throw BehindCamera("project: non-positive depth");
    return {cam.cx + cam.fx * p_cam.y() / fwd, cam.cy + cam.fy * p_cam.z() / fwd};
}

struct ReprojectionResidual {
    int feature_id = 0;
    Eigen::Vector2d residual = Eigen::Vector2d::Zero();  // projected - observed [px]
    bool behind_camera = false;
};

inline std::vector<ReprojectionResidual> reprojection_residuals(
    const GlobalPose& pose, const CameraIntrinsics& cam, const std::vector<Feature2D3D>& features) {
    std::vector<ReprojectionResidual> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        ReprojectionResidual r;
        r.feature_id = f.feature_id;
        const Eigen::Vector3d pc = to_camera(pose, f.world);
        if (pc.x() <= 0.0) {
            r.behind_camera = true;
        } else {
            r.residual = project(cam, pc) - f.pixel;
        }
        out.push_back(r);
    }
    return out;
}

// d(pixel)/d(p_cam), 2x3, with p_cam = (forward, right, down)
inline Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraIntrinsics& cam,
                                                       const Eigen::Vector3d& p_cam) {
    const double f = p_cam.x(), r = p_cam.y(), d = p_cam.z();
    Eigen::Matrix<double, 2, 3> j;
    j << -cam.fx * r / (f * f), cam.fx / f, 0.0,
         -cam.fy * d / (f * f), 0.0, cam.fy / f;
    return j;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

// Jacobian of the reprojection residual w.r.t. a small orientation
// perturbation applied in the local frame (components about the
// forward/right/down axes, i.e. roll, pitch, yaw). Perturbation convention:
// R' = exp([dtheta]x) R, so p_cam' = p_cam + dtheta x p_cam.
inline Eigen::Matrix<double, 2, 3> orientation_jacobian(const CameraIntrinsics& cam,
                                                        const Eigen::Vector3d& p_cam) {
    return projection_jacobian(cam, p_cam) * (-skew(p_cam));
}

struct FrameObservation {
    GlobalPose pose;
    std::vector<Feature2D3D> features;
};

struct OrientationErrorEstimate {
    std::vector<Eigen::Vector3d> per_frame;  // estimated (roll, pitch, yaw) error [rad]
    Eigen::Vector3d rmse = Eigen::Vector3d::Zero();
    int n_frames_used = 0;
    int n_frames_skipped = 0;
    int n_behind_camera = 0;
};

// Per frame: stack the 2x3 orientation Jacobians of all depth-positive
// features, solve the linear least squares for the small-angle orientation
// error, then aggregate a componentwise RMSE over frames.
inline Eigen::Vector3d orientation_error_of_frame(const FrameObservation& frame,
                                                  const CameraIntrinsics& cam,
                                                  int* behind_count = nullptr) {
    std::vector<Eigen::Vector3d> pcs;
    std::vector<Eigen::Vector2d> res;
    for (const auto& f : frame.features) {
        const Eigen::Vector3d pc = to_camera(frame.pose, f.world);
        if (pc.x() <= 0.0) {
            if (behind_count) ++(*behind_count);
            continue;
        }
        pcs.push_back(pc);
        res.push_back(project(cam, pc) - f.pixel);
    }
    if (pcs.size() < 2)
        throw Underdetermined2D3D("orientation_error_of_frame: fewer than 2 usable features");

    Eigen::MatrixXd j(2 * pcs.size(), 3);
    Eigen::VectorXd r(2 * pcs.size());
    for (size_t i = 0; i < pcs.size(); ++i) {
        j.block<2, 3>(2 * static_cast<int>(i), 0) = orientation_jacobian(cam, pcs[i]);
        r.segment<2>(2 * static_cast<int>(i)) = res[i];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(2) < 1e-9 * svd.singularValues()(0))
        throw RankDeficient("orientation_error_of_frame: stacked Jacobian rank < 3");
    return svd.solve(r);
}

inline OrientationErrorEstimate orientation_rmse(const std::vector<FrameObservation>& frames,
                                                 const CameraIntrinsics& cam) {
    OrientationErrorEstimate est;
    Eigen::Vector3d sum_sq = Eigen::Vector3d::Zero();
    for (const auto& frame : frames) {
        try {
            const Eigen::Vector3d dtheta =
                orientation_error_of_frame(frame, cam, &est.n_behind_camera);
            est.per_frame.push_back(dtheta);
            sum_sq += dtheta.cwiseProduct(dtheta);
            ++est.n_frames_used;
        } catch (const Underdetermined2D3D&) {
            ++est.n_frames_skipped;
        } catch (const RankDeficient&) {
            ++est.n_frames_skipped;
        }
    }
    if (est.n_frames_used == 0)
        throw Underdetermined2D3D("orientation_rmse: no usable frames");
    est.rmse = (sum_sq / static_cast<double>(est.n_frames_used)).cwiseSqrt();
    return est;
}

// Feature file: first line carries the intrinsics "fx,fy,cx,cy", then one
// observation per line: frame_id,feature_id,u_px,v_px,ecef_x,ecef_y,ecef_z
inline void write_feature_csv(std::ostream& os, const CameraIntrinsics& cam,
                              const std::vector<Feature2D3D>& features) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g", cam.fx, cam.fy, cam.cx, cam.cy);
    os << buf << "\n";
    for (const auto& f : features) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.12g,%.12g,%.12g", f.frame_id,
                      f.feature_id, f.pixel.x(), f.pixel.y(), f.world.x(), f.world.y(),
                      f.world.z());
        os << buf << "\n";
    }
}

inline std::pair<CameraIntrinsics, std::vector<Feature2D3D>> read_feature_csv(std::istream& is) {
    CameraIntrinsics cam;
    std::vector<Feature2D3D> feats;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> v;
        while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
        if (first) {
            if (v.size() != 4) throw std::runtime_error("feature file: bad intrinsics header");
            cam = {v[0], v[1], v[2], v[3]};
            first = false;
            continue;
        }
        if (v.size() != 7) continue;
        Feature2D3D f;
        f.frame_id = static_cast<int>(v[0]);
        f.feature_id = static_cast<int>(v[1]);
        f.pixel = {v[2], v[3]};
        f.world = {v[4], v[5], v[6]};
        feats.push_back(f);
    }
    return {cam, feats};
}

}  // namespace gnsskit
