#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gnsskit/geodesy.hpp"
#include "gnsskit/quaternion.hpp"
#include "gnsskit/time.hpp"

namespace gnsskit {

// Position in ECEF plus the quaternion rotating ECEF vectors into the
// local [forward, right, down] frame.
struct GlobalPose {
    EcefPosition position = EcefPosition::Zero();
    Quaternion orientation;  // ECEF -> local
    GnssTime time;
};

struct LocalAxes {
    Eigen::Vector3d forward, right, down;  // local basis expressed in ECEF
};

inline LocalAxes pose_local_axes(const GlobalPose& pose) {
    const Eigen::Matrix3d m = pose.orientation.matrix();
    return {m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()};
}

// Pose CSV: week,tow,ecef_x,ecef_y,ecef_z,qw,qx,qy,qz
inline std::string pose_csv_header() { return "week,tow,ecef_x,ecef_y,ecef_z,qw,qx,qy,qz"; }

inline std::string format_pose_line(const GlobalPose& p) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                  p.time.week, p.time.tow, p.position.x(), p.position.y(), p.position.z(),
                  p.orientation.w, p.orientation.x, p.orientation.y, p.orientation.z);
    return buf;
}

inline void write_pose_csv(std::ostream& os, const std::vector<GlobalPose>& poses) {
    os << pose_csv_header() << "\n";
    for (const auto& p : poses) os << format_pose_line(p) << "\n";
}

inline std::vector<GlobalPose> read_pose_csv(std::istream& is) {
    std::vector<GlobalPose> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (first) {  // header mandatory
            first = false;
            continue;
        }
        if (line.empty()) continue;
        std::array<double, 9> f{};
        std::stringstream ss(line);
        std::string tok;
        size_t i = 0;
        while (std::getline(ss, tok, ',') && i < f.size()) f[i++] = std::stod(tok);
        if (i != f.size()) continue;
        GlobalPose p;
        p.time = GnssTime(static_cast<int>(f[0]), f[1]);
        p.position = {f[2], f[3], f[4]};
        p.orientation = Quaternion{f[5], f[6], f[7], f[8]}.normalized();
        out.push_back(p);
    }
    return out;
}

}  // namespace gnsskit
