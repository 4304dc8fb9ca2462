#include "mtquad/geom.hpp"

#include <algorithm>

namespace mtquad {

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion quat_normalize(const Quaternion& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw GeometryError("quat_normalize: degenerate attitude quaternion");
  }
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quaternion quat_from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw GeometryError("quat_from_axis_angle: zero axis");
  const Vec3 a = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quaternion quat_from_euler(double roll, double pitch, double yaw) {
  const Quaternion qz = quat_from_axis_angle(Vec3::UnitZ(), yaw);
  const Quaternion qy = quat_from_axis_angle(Vec3::UnitY(), pitch);
  const Quaternion qx = quat_from_axis_angle(Vec3::UnitX(), roll);
  return quat_normalize(qz * qy * qx);
}

Mat3 quat_to_rotmat(const Quaternion& q, double tol) {
  if (std::abs(q.norm() - 1.0) > tol) {
    throw GeometryError("quat_to_rotmat: quaternion is not unit");
  }
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Quaternion rotmat_to_quat(const Mat3& R) {
  // Shepperd's method: pivot on the largest diagonal combination.
  const double tr = R.trace();
  Quaternion q;
  if (tr > R(0, 0) && tr > R(1, 1) && tr > R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    q = {0.25 * s, (R(2, 1) - R(1, 2)) / s, (R(0, 2) - R(2, 0)) / s, (R(1, 0) - R(0, 1)) / s};
  } else if (R(0, 0) > R(1, 1) && R(0, 0) > R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
    q = {(R(2, 1) - R(1, 2)) / s, 0.25 * s, (R(0, 1) + R(1, 0)) / s, (R(0, 2) + R(2, 0)) / s};
  } else if (R(1, 1) > R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + R(1, 1) - R(0, 0) - R(2, 2));
    q = {(R(0, 2) - R(2, 0)) / s, (R(0, 1) + R(1, 0)) / s, 0.25 * s, (R(1, 2) + R(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + R(2, 2) - R(0, 0) - R(1, 1));
    q = {(R(1, 0) - R(0, 1)) / s, (R(0, 2) + R(2, 0)) / s, (R(1, 2) + R(2, 1)) / s, 0.25 * s};
  }
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  return quat_normalize(q);
}

Rot6D rotmat_to_6d(const Mat3& R) {
  Rot6D r;
  r << R.col(0), R.col(1);
  return r;
}

Mat3 rot6d_to_rotmat(const Rot6D& r) {
  const Vec3 a1 = r.head<3>();
  const Vec3 a2 = r.tail<3>();
  const double n1 = a1.norm();
  if (!(n1 > 0.0)) throw GeometryError("rot6d_to_rotmat: zero first column");
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (!(n2 > 0.0)) throw GeometryError("rot6d_to_rotmat: parallel columns");
  const Vec3 b2 = u2 / n2;
  Mat3 R;
  R << b1, b2, b1.cross(b2);
  return R;
}

Vec4 quat_derivative(const Quaternion& q, const Vec3& w) {
  return 0.5 * Vec4(-q.x * w.x() - q.y * w.y() - q.z * w.z(),
                    q.w * w.x() + q.y * w.z() - q.z * w.y(),
                    q.w * w.y() + q.z * w.x() - q.x * w.z(),
                    q.w * w.z() + q.x * w.y() - q.y * w.x());
}

double geodesic_angle(const Quaternion& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w));
}

double tilt_angle(const Quaternion& q) {
  // R(2,2) = 1 - 2(x^2 + y^2)
  const double c = 1.0 - 2.0 * (q.x * q.x + q.y * q.y) / (q.norm() * q.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace mtquad
