#include "polymap/state_estimator.hpp"

#include <cmath>
#include <limits>

namespace polymap {

double FusionParams::alpha(double dt) const {
  if (!(dt > 0.0)) throw ValidationError("fusion: dt must be positive");
  if (std::isinf(tau)) return 1.0;
  return tau / (tau + dt);
}

void FusionParams::validate() const {
  if (!(tau >= 0.0)) throw ConfigError("fusion: tau must be >= 0");
}

Pose lio_to_base(const Pose& T_W_lidar, const Pose& T_B_lidar) { return compose(T_W_lidar, invert(T_B_lidar)); }

Pose fuse_pose(const Pose& kinematic, const Pose& lio, const FusionParams& fp, double dt) {
  fp.validate();
  const double a = fp.alpha(dt);
  const Rotation delta = kinematic.rotation.inverse() * lio.rotation;
  const Vec3 w = rotation_log(delta);
  if (w.norm() >= 3.14159265358979323846 - 1e-6) {
    throw ValidationError("fuse_pose: kinematic and LIO attitudes differ by ~pi");
  }
  Pose out;
  out.translation = a * kinematic.translation + (1.0 - a) * lio.translation;
  out.rotation = a == 1.0 ? kinematic.rotation : kinematic.rotation * rotation_exp((1.0 - a) * w);
  return out;
}

ComplementaryFusion::ComplementaryFusion(const FusionParams& fp) : fp_(fp) { fp_.validate(); }

const Pose& ComplementaryFusion::on_kinematic(const Pose& kinematic) {
  if (!initialized_) {
    fused_ = kinematic;
    initialized_ = true;
  } else if (have_kinematic_) {
    fused_ = compose(fused_, compose(invert(last_kinematic_), kinematic));
  }
  last_kinematic_ = kinematic;
  have_kinematic_ = true;
  return fused_;
}

const Pose& ComplementaryFusion::on_lio(const Pose& lio, double dt) {
  if (!initialized_) {
    fused_ = lio;
    initialized_ = true;
    return fused_;
  }
  fused_ = fuse_pose(fused_, lio, fp_, dt);
  return fused_;
}

}  // namespace polymap
