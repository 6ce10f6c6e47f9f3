#pragma once

// Frames, rigid transforms and pinhole backprojection shared by every module.
//
// Conventions:
//   - Rotations are stored as 3x3 matrices acting on column vectors
//     (p_parent = R * p_child). Eigen's default column-major storage is used.
//   - A Pose T_A_B maps coordinates expressed in frame B into frame A.
//   - Camera frames are optical: z forward along the optical axis, x right,
//     y down. This is an assumption of the pinhole model, not a property of
//     any particular sensor.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polymap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Input failed a documented invariant (non-orthonormal rotation, bad
/// intrinsics, wrong frame tag, ...). Command line tools map it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter block is outside its admissible range.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Frame { World, Base, Lidar, Camera };

std::string_view to_string(Frame frame);

/// Throws ValidationError unless `actual == expected`.
void require_frame(Frame actual, Frame expected, std::string_view what);

// ---------------------------------------------------------------------------

/// Proper rotation. Construction from a raw matrix validates
/// orthonormality; products are re-orthonormalised with one polar
/// correction step, so chains of compositions do not drift away from SO(3).
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : m_(Mat3::Identity()) {}

  /// Throws ValidationError if |R R^T - I| or |det R - 1| exceeds `tol`.
  static Rotation from_matrix(const Mat3& m, double tol = kTolerance);
  /// The quaternion is normalised first; a zero quaternion is rejected.
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation about_x(double angle);
  static Rotation about_y(double angle);
  static Rotation about_z(double angle);

  const Mat3& matrix() const { return m_; }
  /// Unit quaternion with non-negative w.
  Eigen::Quaterniond quaternion() const;
  Rotation inverse() const { return Rotation(m_.transpose()); }
  /// Heading about world z, atan2(R10, R00).
  double yaw() const;

  Rotation operator*(const Rotation& rhs) const;
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  static Rotation trusted(const Mat3& m) { return Rotation(m); }
  friend Rotation rotation_exp(const Vec3& w);

  Mat3 m_;
};

/// max |R R^T - I| entry, plus |det R - 1|.
double orthonormality_error(const Mat3& m);

/// Axis-angle vector of R. For angles within ~1e-6 of pi the axis is
/// recovered from the symmetric part of R and its sign is arbitrary;
/// the returned vector is still a valid preimage of R.
Vec3 rotation_log(const Rotation& r);

/// Rodrigues formula. Throws ValidationError for non-finite input.
Rotation rotation_exp(const Vec3& w);

/// Skew-symmetric matrix with hat(a) * b = a x b.
Mat3 hat(const Vec3& w);

// ---------------------------------------------------------------------------

struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Rotation(), t}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  /// Homogeneous 4x4 matrix.
  Eigen::Matrix4d matrix() const;
};

/// a * b: maps frame-b coordinates through b, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

// ---------------------------------------------------------------------------

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ValidationError unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;
};

/// Row-major depth grid in metres. A value of 0 marks an invalid pixel.
class DepthImage {
 public:
  static constexpr double kInvalid = 0.0;

  DepthImage() = default;
  DepthImage(int width, int height, double fill = kInvalid);
  /// Takes ownership of `data`; throws ValidationError on size mismatch,
  /// non-finite or negative entries.
  DepthImage(int width, int height, std::vector<double> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }

  double at(int u, int v) const { return data_[index(u, v)]; }
  double& at(int u, int v) { return data_[index(u, v)]; }
  bool valid(int u, int v) const { return data_[index(u, v)] > kInvalid; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  std::size_t valid_count() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::World;
};

/// Pinhole backprojection of pixel (u, v). Throws std::out_of_range for a
/// pixel outside the image; returns nullopt for an invalid (0) depth.
std::optional<Vec3> backproject(const DepthImage& depth, const CameraIntrinsics& intr, int u, int v);

/// The same mapping for a known-valid depth value.
inline Vec3 backproject_depth(double d, const CameraIntrinsics& intr, double u, double v) {
  return {(u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d};
}

/// Wraps an angle into [-pi, pi].
double wrap_angle(double a);

/// 2D convex hull (monotone chain). Counter-clockwise, starting at the
/// lexicographically smallest point, without collinear boundary points.
/// Fewer than three distinct non-collinear inputs give a degenerate result
/// with fewer than three vertices.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

/// Boundary-inclusive point-in-convex-polygon test for a CCW hull; `eps` is
/// a distance tolerance in the units of the points.
bool hull_contains(const std::vector<Vec2>& hull, const Vec2& p, double eps = 1e-9);

}  // namespace polymap
