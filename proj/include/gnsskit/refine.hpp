#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "gnsskit/pose.hpp"
#include "gnsskit/reproject.hpp"

namespace gnsskit {

struct FrameKey {
    int drive = 0;
    int frame = 0;
    bool operator<(const FrameKey& o) const {
        return drive != o.drive ? drive < o.drive : frame < o.frame;
    }
};

struct TrackObservation {
    FrameKey frame;
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    double depth = 0.0;  // meters along camera forward, carried in the feature file
};

struct FeatureTrack {
    int feature_id = 0;
    std::vector<TrackObservation> observations;
    EcefPosition world = EcefPosition::Zero();
    bool valid = false;
};

struct RefinementState {
    int iteration = 0;
    std::map<FrameKey, GlobalPose> poses;
    std::vector<FeatureTrack> map;
    CameraIntrinsics camera;
    std::vector<double> error_trace;  // mean reprojection error per accepted iteration [px]
    int n_tracks_dropped = 0;
    int n_frames_underconstrained = 0;
    int n_frames_unconverged = 0;
};

struct InsufficientObservations : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline EcefPosition back_project(const GlobalPose& pose, const CameraIntrinsics& cam,
                                 const Eigen::Vector2d& pixel, double depth) {
    const Eigen::Vector3d p_cam(depth, (pixel.x() - cam.cx) * depth / cam.fx,
                                (pixel.y() - cam.cy) * depth / cam.fy);
    return pose.position + pose.orientation.matrix().transpose() * p_cam;
}

inline double mean_reprojection_error(const RefinementState& state) {
    double sum = 0.0;
    long n = 0;
    for (const auto& track : state.map) {
        if (!track.valid) continue;
        for (const auto& obs : track.observations) {
            const auto it = state.poses.find(obs.frame);
            if (it == state.poses.end()) continue;
            const Eigen::Vector3d pc = to_camera(it->second, track.world);
            if (pc.x() <= 0.0) continue;
            sum += (project(state.camera, pc) - obs.pixel).norm();
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

// E step: each track's world estimate becomes the componentwise 3-sigma
// trimmed mean of the per-observation back-projected positions. Tracks not
// seen from at least two distinct drives are dropped.
inline void e_step_average(RefinementState& state, double trim_sigma = 3.0) {
    int dropped = 0;
    for (auto& track : state.map) {
        std::set<int> drives;
        for (const auto& obs : track.observations) drives.insert(obs.frame.drive);
        if (track.observations.size() < 2 || drives.size() < 2) {
            track.valid = false;
            ++dropped;
            continue;
        }
        std::vector<EcefPosition> pts;
        for (const auto& obs : track.observations) {
            const auto it = state.poses.find(obs.frame);
            if (it == state.poses.end()) continue;
            pts.push_back(back_project(it->second, state.camera, obs.pixel, obs.depth));
        }
        if (pts.size() < 2) {
            track.valid = false;
            ++dropped;
            continue;
        }
        Eigen::Vector3d est;
        for (int c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (const auto& p : pts) mean += p(c);
            mean /= pts.size();
            double var = 0.0;
            for (const auto& p : pts) var += (p(c) - mean) * (p(c) - mean);
            var /= pts.size();
            const double sd = std::sqrt(var);
            double sum = 0.0;
            int n = 0;
            for (const auto& p : pts) {
                if (sd > 0.0 && std::abs(p(c) - mean) > trim_sigma * sd) continue;
                sum += p(c);
                ++n;
            }
            est(c) = n > 0 ? sum / n : mean;
        }
        track.world = est;
        track.valid = true;
    }
    state.n_tracks_dropped = dropped;
}

namespace detail {

// 6-DOF Gauss-Newton relocalization of one frame against fixed world points.
// Parameterization: pose.position += dt, orientation R' = exp([dtheta]x) R.
inline bool relocalize_frame(GlobalPose& pose, const CameraIntrinsics& cam,
                             const std::vector<std::pair<Eigen::Vector2d, EcefPosition>>& corr,
                             int max_iters = 25, double tol = 1e-8) {
    for (int it = 0; it < max_iters; ++it) {
        Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
        const Eigen::Matrix3d r = pose.orientation.matrix();
        int n_used = 0;
        for (const auto& [pixel, world] : corr) {
            const Eigen::Vector3d pc = r * (world - pose.position);
            if (pc.x() <= 0.0) continue;
            const Eigen::Vector2d res = project(cam, pc) - pixel;
            const Eigen::Matrix<double, 2, 3> jp = projection_jacobian(cam, pc);
            Eigen::Matrix<double, 2, 6> j;
            j.leftCols<3>() = jp * (-r);           // d residual / d position
            j.rightCols<3>() = jp * (-skew(pc));   // d residual / d orientation
            jtj += j.transpose() * j;
            jtr += j.transpose() * res;
            ++n_used;
        }
        if (n_used < 4) return false;
        const Eigen::Matrix<double, 6, 1> delta = jtj.ldlt().solve(-jtr);
        if (!delta.allFinite()) return false;
        pose.position += delta.head<3>();
        pose.orientation = (Quaternion::from_rotvec(delta.tail<3>()) * pose.orientation).normalized();
        if (delta.norm() < tol) return true;
    }
    return false;
}

}  // namespace detail

// M step: relocalize every frame against the averaged map. Frames seeing
// fewer than 4 valid tracks or failing convergence keep their prior pose.
inline void m_step_relocalize(RefinementState& state) {
    std::map<FrameKey, std::vector<std::pair<Eigen::Vector2d, EcefPosition>>> per_frame;
    for (const auto& track : state.map) {
        if (!track.valid) continue;
        for (const auto& obs : track.observations)
            per_frame[obs.frame].emplace_back(obs.pixel, track.world);
    }
    state.n_frames_underconstrained = 0;
    state.n_frames_unconverged = 0;
    for (auto& [key, pose] : state.poses) {
        auto it = per_frame.find(key);
        if (it == per_frame.end() || it->second.size() < 4) {
            ++state.n_frames_underconstrained;
            continue;
        }
        GlobalPose candidate = pose;
        if (detail::relocalize_frame(candidate, state.camera, it->second))
            pose = candidate;
        else
            ++state.n_frames_unconverged;
    }
}

struct RefineConfig {
    int max_iters = 10;
    double min_relative_improvement = 1e-4;
    double trim_sigma = 3.0;
};

// Alternate E and M steps; an iteration that increases the mean reprojection
// error is rejected and terminates the loop, so the accepted trace is
// monotone non-increasing.
inline RefinementState refine(RefinementState state, const RefineConfig& cfg = {}) {
    e_step_average(state, cfg.trim_sigma);
    bool any_valid = false;
    for (const auto& t : state.map) any_valid |= t.valid;
    if (!any_valid)
        throw InsufficientObservations("refine: no track has observations from >= 2 drives");

    double err = mean_reprojection_error(state);
    state.error_trace.push_back(err);

    for (int it = 0; it < cfg.max_iters; ++it) {
        RefinementState trial = state;
        if (it > 0) e_step_average(trial, cfg.trim_sigma);
        m_step_relocalize(trial);
        const double new_err = mean_reprojection_error(trial);
        if (new_err > err) break;  // rejected iteration terminates the loop
        trial.error_trace = state.error_trace;
        trial.error_trace.push_back(new_err);
        trial.iteration = it + 1;
        state = std::move(trial);
        const double improvement = err > 0.0 ? (err - new_err) / err : 0.0;
        err = new_err;
        if (improvement < cfg.min_relative_improvement) break;
    }
    return state;
}

// Depth-carrying feature file for refinement: intrinsics line "fx,fy,cx,cy",
// then frame_id,feature_id,u_px,v_px,depth_m per observation.
struct DepthFeatureFile {
    CameraIntrinsics camera;
    std::vector<std::tuple<int, int, Eigen::Vector2d, double>> observations;  // frame, feature, px, depth
};

inline DepthFeatureFile read_depth_feature_csv(std::istream& is) {
    DepthFeatureFile out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> v;
        while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
        if (first) {
            if (v.size() != 4) throw std::runtime_error("depth feature file: bad intrinsics header");
            out.camera = {v[0], v[1], v[2], v[3]};
            first = false;
            continue;
        }
        if (v.size() != 5) continue;
        out.observations.emplace_back(static_cast<int>(v[0]), static_cast<int>(v[1]),
                                      Eigen::Vector2d(v[2], v[3]), v[4]);
    }
    return out;
}

inline void write_depth_feature_csv(std::ostream& os, const DepthFeatureFile& f) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g", f.camera.fx, f.camera.fy, f.camera.cx,
                  f.camera.cy);
    os << buf << "\n";
    for (const auto& [frame, feat, px, depth] : f.observations) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g", frame, feat, px.x(), px.y(), depth);
        os << buf << "\n";
    }
}

// Assemble a refinement state from per-drive poses (row i = frame id i) and
// per-drive depth feature files sharing one camera.
inline RefinementState build_refinement_state(
    const std::vector<std::vector<GlobalPose>>& drive_poses,
    const std::vector<DepthFeatureFile>& drive_features) {
    RefinementState state;
    if (drive_poses.size() != drive_features.size() || drive_poses.empty())
        throw std::invalid_argument("build_refinement_state: drive count mismatch");
    state.camera = drive_features.front().camera;
    std::map<int, FeatureTrack> tracks;
    for (size_t d = 0; d < drive_poses.size(); ++d) {
        for (size_t f = 0; f < drive_poses[d].size(); ++f)
            state.poses[FrameKey{static_cast<int>(d), static_cast<int>(f)}] = drive_poses[d][f];
        for (const auto& [frame, feat, px, depth] : drive_features[d].observations) {
            auto& tr = tracks[feat];
            tr.feature_id = feat;
            tr.observations.push_back({FrameKey{static_cast<int>(d), frame}, px, depth});
        }
    }
    for (auto& [id, tr] : tracks) state.map.push_back(std::move(tr));
    return state;
}

}  // namespace gnsskit
