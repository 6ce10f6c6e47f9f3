#include "polymap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polymap {

void NoiseModel::validate() const {
  if (!(depth_sigma >= 0.0 && drift_rate >= 0.0 && lio_sigma >= 0.0 && lio_sigma_rot >= 0.0 &&
        actuation_sigma >= 0.0 && proprio_sigma >= 0.0)) {
    throw ConfigError("noise: all sigmas and rates must be >= 0");
  }
  if (!(depth_dropout >= 0.0 && depth_dropout <= 1.0)) throw ConfigError("noise: depth_dropout must lie in [0, 1]");
}

RenderResult render_depth(const Scene& scene, const Pose& camera_pose_W, const CameraIntrinsics& intr,
                          const NoiseModel& noise, std::uint64_t frame) {
  intr.validate();
  noise.validate();
  const int w = intr.width, h = intr.height;
  RenderResult out{DepthImage(w, h), std::vector<int>(static_cast<std::size_t>(w) * h, -1)};
  std::vector<double>& depth = out.depth.data();

  // Work in the scene frame; the ray parameter along (x, y, 1) in camera
  // coordinates equals the camera-frame depth of the hit.
  const Pose to_scene = invert(scene.pose);
  const Vec3 origin = to_scene.apply(camera_pose_W.translation);
  const Mat3 M = (to_scene.rotation * camera_pose_W.rotation).matrix();
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Vec3 d = M * Vec3((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      int label = -1;
      for (std::size_t b = 0; b < scene.boxes.size(); ++b) {
        const auto hit = ray_box(origin, d, scene.boxes[b]);
        if (hit && hit->t < best) {
          best = hit->t;
          label = static_cast<int>(b) * 6 + hit->face;
        }
      }
      if (label >= 0) {
        const std::size_t i = out.depth.index(u, v);
        depth[i] = best;
        out.label[i] = label;
      }
    }
  }

  if (noise.depth_sigma > 0.0 || noise.depth_dropout > 0.0) {
    Rng rng = make_stream(noise.seed, "render", frame);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& d : depth) {
      if (!(d > 0.0)) continue;
      if (noise.depth_sigma > 0.0) d = std::max(1e-3, d + noise.depth_sigma * gauss(rng));
      if (noise.depth_dropout > 0.0 && unit(rng) < noise.depth_dropout) d = DepthImage::kInvalid;
    }
  }
  return out;
}

RenderResult render_depth(const StaircaseScene& scene, const Pose& camera_pose_W, const CameraIntrinsics& intr,
                          const NoiseModel& noise, std::uint64_t frame) {
  return render_depth(scene.build(), camera_pose_W, intr, noise, frame);
}

}  // namespace polymap
