#pragma once

// Depth frame -> world-frame polygonal plane segments.
//
// Stages: edge-preserving diffusion, per-pixel normals, contour-bounded
// regions, per-region RANSAC plane fit, polygon outline in the plane,
// transform to world.

#include "polymap/geometry.hpp"
#include "polymap/io.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace polymap {

struct DiffusionParams {
  double lambda = 0.25;  // step weight, 0 < lambda <= 0.25 for a 4-neighbourhood
  int iterations = 10;
  double kappa = 0.03;  // conduction scale in metres

  /// Throws ConfigError outside the stability bound.
  void validate() const;
};

/// Perona-Malik diffusion, c = exp(-(|dI|/kappa)^2). Invalid pixels stay
/// invalid and exchange no flux with their neighbours.
DepthImage diffuse(const DepthImage& img, const DiffusionParams& p);

struct NormalMap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;     // camera frame, unit length where valid
  std::vector<std::uint8_t> valid;

  bool is_valid(int u, int v) const { return valid[static_cast<std::size_t>(v) * width + u] != 0; }
  const Vec3& at(int u, int v) const { return normals[static_cast<std::size_t>(v) * width + u]; }
};

/// n = a x b / |a x b| with a, b the horizontal and vertical derivatives of
/// the backprojected point image, taken with 3x3 Sobel weights over valid
/// neighbour pairs. Normals are oriented towards the camera (n . P < 0),
/// which gives n_z < 0 for surfaces facing the sensor.
NormalMap compute_normals(const DepthImage& img, const CameraIntrinsics& intr);

struct RegionParams {
  double canny_low = 0.05;
  double canny_high = 0.15;
  /// Relative depth change per pixel that maps to edge strength 1.
  double depth_edge_scale = 0.1;
  /// Normal angle change (radians, across two pixels) that maps to strength 1.
  double normal_edge_scale = 3.14159265358979323846;
  int min_region_pixels = 400;
};

struct PixelRegion {
  std::vector<std::size_t> pixels;  // row-major indices, ascending
};

/// Canny over the fused edge strength max(depth term, normal term), then
/// 4-connected components of non-contour pixels with valid normals.
/// Regions are disjoint and returned in order of their first pixel.
std::vector<PixelRegion> detect_plane_regions(const NormalMap& normals, const DepthImage& img,
                                              const RegionParams& p = {});

/// Binary contour map produced by the Canny stage (1 = contour).
std::vector<std::uint8_t> contour_map(const NormalMap& normals, const DepthImage& img,
                                      const RegionParams& p = {});

struct RansacParams {
  int max_iterations = 200;
  double inlier_threshold = 0.010;  // metres
  int min_inliers = 50;
  std::uint64_t seed = 1;
  /// Early exit once this many hypotheses would find a better model with
  /// probability below 1 - confidence.
  double confidence = 0.999;

  void validate() const;
};

/// Plane n . p + d = 0 with unit n oriented so that d >= 0 (the origin of
/// the fitting frame lies on the positive side).
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double d = 0.0;
  std::size_t inlier_count = 0;
  double rms_residual = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + d; }
};

struct PlaneFit {
  PlaneModel plane;
  std::vector<std::size_t> inliers;  // ascending indices into the input cloud
};

/// Least-squares plane through `points` (smallest-eigenvalue direction of
/// the scatter matrix). Requires >= 3 points.
PlaneModel fit_plane_least_squares(const std::vector<Vec3>& points);

/// 3-point RANSAC followed by a least-squares refit on the inliers.
/// Returns nullopt for fewer than 3 points or fewer than min_inliers.
std::optional<PlaneFit> fit_plane_ransac(const PointCloud& cloud, const RansacParams& p);

struct PolygonSegment {
  std::vector<Vec3> vertices;  // world frame, ordered around the outline
  PlaneModel plane;            // world frame
  double stamp = 0.0;
  bool tread = false;          // near-horizontal support surface

  double mean_height() const;
};

struct PolygonMapConfig {
  DiffusionParams diffusion;
  RegionParams regions;
  RansacParams ransac;
  double max_tilt_deg = 15.0;
  double simplify_tolerance = 0.01;  // Douglas-Peucker, metres
  /// Regions larger than this are subsampled with a fixed stride for the
  /// plane fit; the outline still uses every inlier of the final model.
  std::size_t max_fit_points = 6000;
};

/// Whole per-frame pipeline. Regions whose plane fit fails are dropped.
std::vector<PolygonSegment> extract_polygon_map(const DepthImage& img, const CameraIntrinsics& intr,
                                                const Pose& camera_pose_W, const PolygonMapConfig& cfg,
                                                double stamp = 0.0);

/// Douglas-Peucker simplification of a closed 2D ring.
std::vector<Vec2> simplify_ring(const std::vector<Vec2>& ring, double tolerance);

Json to_json(const PolygonSegment& seg);
PolygonSegment polygon_from_json(const Json& j);

}  // namespace polymap
