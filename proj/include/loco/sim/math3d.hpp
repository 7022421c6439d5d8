#pragma once

#include <cmath>

#include "loco/sim/types.hpp"

namespace loco::sim {

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) {
  a[0] += b[0];
  a[1] += b[1];
  a[2] += b[2];
  return a;
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double quat_norm(const Quat& q) {
  return std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
}

inline Quat quat_normalize(const Quat& q) {
  const double n = quat_norm(q);
  return {q[0] / n, q[1] / n, q[2] / n, q[3] / n};
}

inline Quat quat_multiply(const Quat& a, const Quat& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

// rotate a body-frame vector into the world frame
inline Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  const Vec3 u = {q[1], q[2], q[3]};
  const double w = q[0];
  const Vec3 t = 2.0 * cross(u, v);
  return v + w * t + cross(u, t);
}

// world -> body
inline Vec3 quat_rotate_inverse(const Quat& q, const Vec3& v) {
  return quat_rotate({q[0], -q[1], -q[2], -q[3]}, v);
}

// exact exponential-map integration of body-frame angular velocity over dt
inline Quat quat_integrate(const Quat& q, const Vec3& omega_body, double dt) {
  const double w = norm(omega_body);
  const double angle = w * dt;
  if (angle < 1e-12) return q;
  const Vec3 axis = (1.0 / w) * omega_body;
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  const Quat dq = {std::cos(half), s * axis[0], s * axis[1], s * axis[2]};
  return quat_multiply(q, dq);
}

inline Quat quat_from_yaw(double yaw) {
  return {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)};
}

inline double yaw_of(const Quat& q) {
  return std::atan2(2.0 * (q[0] * q[3] + q[1] * q[2]), 1.0 - 2.0 * (q[2] * q[2] + q[3] * q[3]));
}

inline Vec3 rotate_x(double angle, const Vec3& v) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]};
}

}  // namespace loco::sim
