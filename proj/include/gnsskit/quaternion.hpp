#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace gnsskit {

// Unit quaternion, scalar-first (w, x, y, z) in all interfaces and files.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quaternion() = default;
    Quaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quaternion normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    Quaternion conjugate() const { return {w, -x, -y, -z}; }

    Quaternion operator*(const Quaternion& q) const {
        Quaternion r{w * q.w - x * q.x - y * q.y - z * q.z,
                     w * q.x + x * q.w + y * q.z - z * q.y,
                     w * q.y - x * q.z + y * q.w + z * q.x,
                     w * q.z + x * q.y - y * q.x + z * q.w};
        return r.normalized();
    }

    // Rotate a vector by this quaternion.
    Eigen::Vector3d rotate(const Eigen::Vector3d& v) const {
        return matrix() * v;
    }

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d m;
        const double ww = w * w, xx = x * x, yy = y * y, zz = z * z;
        m << ww + xx - yy - zz, 2 * (x * y - w * z), 2 * (x * z + w * y),
             2 * (x * y + w * z), ww - xx + yy - zz, 2 * (y * z - w * x),
             2 * (x * z - w * y), 2 * (y * z + w * x), ww - xx - yy + zz;
        return m;
    }

    static Quaternion from_matrix(const Eigen::Matrix3d& m) {
        Eigen::Quaterniond q(m);
        return Quaternion{q.w(), q.x(), q.y(), q.z()}.normalized();
    }

    // Rotation by angle about a unit axis.
    static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle) {
        const Eigen::Vector3d u = axis.normalized();
        const double s = std::sin(angle / 2.0);
        return Quaternion{std::cos(angle / 2.0), u.x() * s, u.y() * s, u.z() * s}.normalized();
    }

    // Small-angle rotation vector (rad) to quaternion.
    static Quaternion from_rotvec(const Eigen::Vector3d& r) {
        const double a = r.norm();
        if (a < 1e-14) return Quaternion{1.0, r.x() / 2.0, r.y() / 2.0, r.z() / 2.0}.normalized();
        return from_axis_angle(r, a);
    }

    // Double cover: q and -q represent the same rotation.
    bool same_rotation(const Quaternion& o, double tol = 1e-9) const {
        const double d = std::abs(w * o.w + x * o.x + y * o.y + z * o.z);
        return std::abs(d - 1.0) < tol;
    }
};

}  // namespace gnsskit
