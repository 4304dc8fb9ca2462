#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace mtquad {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Rot6D = Eigen::Matrix<double, 6, 1>;

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Hamilton quaternion, scalar-first (w, x, y, z).
struct Quaternion {
  double w{1.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  static Quaternion identity() { return {}; }
  static Quaternion from_coeffs(const Vec4& c) { return {c[0], c[1], c[2], c[3]}; }

  Vec4 coeffs() const { return {w, x, y, z}; }
  Vec3 vec() const { return {x, y, z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);

/// Throws GeometryError on a zero (or non-finite) quaternion.
Quaternion quat_normalize(const Quaternion& q);

Quaternion quat_from_axis_angle(const Vec3& axis, double angle);

/// Intrinsic Z-Y-X (yaw, pitch, roll) composition.
Quaternion quat_from_euler(double roll, double pitch, double yaw);

/// Body-to-world rotation matrix. Rejects quaternions whose norm deviates
/// from one by more than `tol`.
Mat3 quat_to_rotmat(const Quaternion& q, double tol = 1e-6);

/// Inverse of quat_to_rotmat, returns the representative with w >= 0.
Quaternion rotmat_to_quat(const Mat3& R);

/// First two columns of R stacked: [R.col(0); R.col(1)].
Rot6D rotmat_to_6d(const Mat3& R);

/// Gram-Schmidt reconstruction of a rotation matrix from its 6-D form.
Mat3 rot6d_to_rotmat(const Rot6D& r);

/// q_dot = 0.5 * q ⊗ (0, omega_B) for body-frame angular velocity.
Vec4 quat_derivative(const Quaternion& q, const Vec3& omega_body);

/// Rotation angle of q away from identity, in [0, pi].
double geodesic_angle(const Quaternion& q);

/// Angle between the body z-axis and world z-axis, in [0, pi].
double tilt_angle(const Quaternion& q);

/// One classic 4th-order Runge-Kutta step of x_dot = f(x).
template <typename Vector, typename Derivative>
Vector rk4_step(Derivative&& f, const Vector& x, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  auto eval = [&f](const Vector& s) -> Vector {
    Vector d = f(s);
    if (!d.allFinite()) throw GeometryError("rk4_step: non-finite derivative");
    return d;
  };
  const Vector k1 = eval(x);
  const Vector k2 = eval(x + 0.5 * dt * k1);
  const Vector k3 = eval(x + 0.5 * dt * k2);
  const Vector k4 = eval(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace mtquad
