#include "polymap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polymap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ValidationError("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw ValidationError("intrinsics: principal point outside the image");
  }
}

DepthImage::DepthImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw ValidationError("depth image: negative size");
  if (!std::isfinite(fill) || fill < 0.0) throw ValidationError("depth image: invalid fill value");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

DepthImage::DepthImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0) throw ValidationError("depth image: negative size");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ValidationError("depth image: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(width) + "x" + std::to_string(height));
  }
  for (double d : data_) {
    if (!std::isfinite(d) || d < 0.0) throw ValidationError("depth image: non-finite or negative depth");
  }
}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](double d) { return d > kInvalid; }));
}

std::optional<Vec3> backproject(const DepthImage& depth, const CameraIntrinsics& intr, int u, int v) {
  if (!depth.contains(u, v)) {
    throw std::out_of_range("backproject: pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") outside " + std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
  }
  const double d = depth.at(u, v);
  if (!(d > DepthImage::kInvalid)) return std::nullopt;
  return backproject_depth(d, intr, u, v);
}

}  // namespace polymap
