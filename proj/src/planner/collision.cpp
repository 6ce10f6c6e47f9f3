#include "polymap/footstep_planner.hpp"

#include <algorithm>
#include <cmath>

namespace polymap {

void OrientedRectangle::validate() const {
  if (!(w > 0.0 && h > 0.0)) throw ValidationError("rectangle: w and h must be positive");
}

std::array<Vec2, 4> OrientedRectangle::corners() const {
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec2 ax(c * w / 2, s * w / 2), ay(-s * h / 2, c * h / 2);
  return {center + ax + ay, center - ax + ay, center - ax - ay, center + ax - ay};
}

bool OrientedRectangle::contains(const Vec2& p, double eps) const {
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec2 d = p - center;
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= w / 2 + eps && std::abs(ly) <= h / 2 + eps;
}

namespace {

bool separated_along(const Vec2& axis, const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  double amin = axis.dot(a[0]), amax = amin, bmin = axis.dot(b[0]), bmax = bmin;
  for (int i = 1; i < 4; ++i) {
    const double pa = axis.dot(a[i]), pb = axis.dot(b[i]);
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

}  // namespace

bool rect_intersect(const OrientedRectangle& a, const OrientedRectangle& b) {
  a.validate();
  b.validate();
  const auto ca = a.corners(), cb = b.corners();
  const Vec2 axes[4] = {{std::cos(a.theta), std::sin(a.theta)},
                        {-std::sin(a.theta), std::cos(a.theta)},
                        {std::cos(b.theta), std::sin(b.theta)},
                        {-std::sin(b.theta), std::cos(b.theta)}};
  for (const Vec2& axis : axes) {
    if (separated_along(axis, ca, cb)) return false;
  }
  return true;
}

OrientedRectangle foot_rectangle(const Vec3& p_f, double yaw, const FootGeometry& foot) {
  return {Vec2(p_f.x(), p_f.y()), foot.length, foot.width, yaw};
}

}  // namespace polymap
