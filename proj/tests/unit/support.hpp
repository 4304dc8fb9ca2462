#pragma once

#include <cmath>

#include "mtquad/geom.hpp"
#include "mtquad/rng.hpp"

namespace testing {

inline mtquad::Quaternion random_unit_quaternion(mtquad::Rng& rng) {
  // uniform on S^3 by normalizing a 4-D Gaussian
  mtquad::Vec4 c;
  for (int i = 0; i < 4; ++i) c[i] = rng.normal();
  return mtquad::Quaternion::from_coeffs(c.normalized());
}

inline mtquad::Vec3 random_vec3(mtquad::Rng& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

/// v' = q (0, v) q*, written out with the Hamilton product independently of the library.
inline mtquad::Vec3 sandwich(const mtquad::Quaternion& q, const mtquad::Vec3& v) {
  auto mul = [](const mtquad::Vec4& a, const mtquad::Vec4& b) {
    return mtquad::Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
  };
  const mtquad::Vec4 qc(q.w, q.x, q.y, q.z);
  const mtquad::Vec4 conj(q.w, -q.x, -q.y, -q.z);
  const mtquad::Vec4 r = mul(mul(qc, mtquad::Vec4(0, v.x(), v.y(), v.z())), conj);
  return r.tail<3>();
}

}  // namespace testing
