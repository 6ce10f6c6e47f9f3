#include "polymap/geometry.hpp"

namespace polymap {

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose invert(const Pose& a) {
  const Rotation rt = a.rotation.inverse();
  return {rt, -(rt * a.translation)};
}

}  // namespace polymap
