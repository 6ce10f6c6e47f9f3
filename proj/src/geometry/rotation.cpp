#include "polymap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace polymap {

std::string_view to_string(Frame frame) {
  switch (frame) {
    case Frame::World: return "W";
    case Frame::Base: return "B";
    case Frame::Lidar: return "L";
    case Frame::Camera: return "C";
  }
  return "?";
}

void require_frame(Frame actual, Frame expected, std::string_view what) {
  if (actual != expected) {
    throw ValidationError(std::string(what) + ": expected frame " + std::string(to_string(expected)) +
                          ", got " + std::string(to_string(actual)));
  }
}

double orthonormality_error(const Mat3& m) {
  const Mat3 e = m * m.transpose() - Mat3::Identity();
  return e.cwiseAbs().maxCoeff() + std::abs(m.determinant() - 1.0);
}

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  if (!m.allFinite()) throw ValidationError("rotation: non-finite entries");
  const double err = orthonormality_error(m);
  if (err > tol) {
    throw ValidationError("rotation: matrix is not orthonormal (error " + std::to_string(err) + ")");
  }
  return Rotation(m);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || n < 1e-12) throw ValidationError("rotation: degenerate quaternion");
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::about_x(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return Rotation(m);
}

Rotation Rotation::about_y(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return Rotation(m);
}

Rotation Rotation::about_z(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return Rotation(m);
}

Eigen::Quaterniond Rotation::quaternion() const {
  Eigen::Quaterniond q(m_);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

double Rotation::yaw() const { return std::atan2(m_(1, 0), m_(0, 0)); }

Rotation Rotation::operator*(const Rotation& rhs) const {
  const Mat3 p = m_ * rhs.m_;
  // One Newton step towards the polar factor: R <- R (3I - R^T R) / 2.
  // Quadratic convergence keeps round-off at machine precision indefinitely.
  return Rotation(0.5 * p * (3.0 * Mat3::Identity() - p.transpose() * p));
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Vec3 rotation_log(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 vee(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double s = 0.5 * vee.norm();  // sin(theta)
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, c);

  if (theta < 1e-5) {
    // theta / sin(theta) ~ 1 + theta^2 / 6
    return 0.5 * (1.0 + theta * theta / 6.0) * vee;
  }
  if (std::numbers::pi - theta > 1e-6) {
    return (theta / (2.0 * s)) * vee;
  }

  // Near pi the antisymmetric part vanishes; use R + I = 2 a a^T (approx.).
  const Mat3 b = 0.5 * (m + Mat3::Identity());
  int k = 0;
  b.diagonal().maxCoeff(&k);
  Vec3 axis = b.col(k) / std::sqrt(std::max(b(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(vee) < 0) axis = -axis;
  return theta * axis;
}

Rotation rotation_exp(const Vec3& w) {
  if (!w.allFinite()) throw ValidationError("rotation_exp: non-finite input");
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;  // sin(theta)/theta, (1 - cos(theta))/theta^2
  if (theta < 1e-5) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = hat(w);
  return Rotation::trusted(Mat3::Identity() + a * k + b * k * k);
}

double wrap_angle(double a) {
  if (a >= -std::numbers::pi && a <= std::numbers::pi) return a;
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

}  // namespace polymap
