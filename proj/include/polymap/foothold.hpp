#pragma once

// Polygon map -> dense height cells in the base frame -> layered erosion ->
// safe foothold candidates.
//
// Heights in GridCloud, FootState and FootholdCandidate are base-frame z.

#include "polymap/depth_pipeline.hpp"
#include "polymap/geometry.hpp"
#include "polymap/io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace polymap {

struct FootholdParams {
  double g_res = 0.02;    // cell pitch, metres
  double g_range = 1.0;   // XY half-range around the base, metres
  double g_z = 0.18;      // max step-up above the sole, metres
  double h_layer = 0.05;  // layer height, metres
  int n_erosion = 2;
  double delta_foot = 0.02;  // half-width of the sole-height band, metres
  /// Dense-cloud points per cell edge in generate_footholds. The world
  /// lattice is not aligned with the base grid; at 2 or more every cell
  /// under a polygon receives at least one point.
  int supersample = 2;

  void validate() const;
};

struct FootState {
  double lltoe = 0.0;
  double rrtoe = 0.0;
  double llheel = 0.0;
  double rrheel = 0.0;

  static FootState flat(double z) { return {z, z, z, z}; }
  double z_foot() const;
};

struct GridCell {
  Vec3 point = Vec3::Zero();  // highest point binned into the cell
  int layer = 0;
};

using CellIndex = std::pair<int, int>;

struct GridCloud {
  std::map<CellIndex, GridCell> cells;  // ordered by (i, j)
  Frame frame = Frame::Base;
  double g_res = 0.02;

  std::size_t size() const { return cells.size(); }
  bool contains(const CellIndex& c) const { return cells.count(c) != 0; }
  CellIndex index_of(double x, double y) const;
};

/// Union over polygons of the boundary-inclusive lattice points (world
/// multiples of g_res) inside each polygon's XY convex hull, at the mean
/// vertex height. Polygons with a degenerate hull are skipped and counted
/// in `skipped` when it is non-null.
PointCloud build_dense_cloud(const std::vector<PolygonSegment>& polygons, double g_res,
                             std::size_t* skipped = nullptr);

/// World cloud -> base frame, range box, per-cell maximum, step-up limit.
/// Cells are indexed by rounding x / g_res and y / g_res.
GridCloud filter_cloud(const PointCloud& cloud, const Pose& base_pose, const FootState& foot,
                       const FootholdParams& p);

/// floor(z / h_layer) for every cell.
int layer_index(double z, double h_layer);

/// Binary 8-neighbourhood erosion of an occupancy bitmap, `passes` times.
/// Pixels outside the bitmap count as empty.
std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& bitmap, int width, int height, int passes);

/// Assigns layers, erodes every layer n_erosion times and gives the cells of
/// the sole-height band one additional pass. Returns the surviving cells.
GridCloud layer_and_erode(const GridCloud& grid, const FootState& foot, const FootholdParams& p);

struct FootholdCandidate {
  Vec3 p_star = Vec3::Zero();
  std::optional<Vec3> p_star2;
  double theta_rel = 0.0;
};

/// Nearest eligible cell to the base (z > z_foot + delta_foot), ties broken
/// by (x, y); p_star2 is the nearest cell more than h_layer / 2 above p_star.
/// Returns nullopt when no cell is eligible.
std::optional<FootholdCandidate> select_candidates(const GridCloud& eroded, const Pose& base_pose,
                                                   const FootState& foot, const FootholdParams& p);

/// Everything the planner needs to place a foot on the candidate's layer:
/// the pre-erosion support cells, the eroded cells, and the base pose the
/// grid was built in.
struct FootholdRegion {
  FootholdCandidate candidate;
  GridCloud support;
  GridCloud eroded;
  Pose base_pose;
  double stamp = 0.0;

  /// World coordinates of a base-frame cell point.
  Vec3 to_world(const Vec3& p_base) const { return base_pose.apply(p_base); }
  /// Layer of the candidate.
  int layer() const;
  /// True if the world XY point falls into a support cell of the candidate
  /// layer (eroded = false) or a surviving cell of it (eroded = true).
  bool covers(const Vec2& xy_world, bool eroded) const;
};

/// Full chain from a polygon map to a foothold region. Uses tread polygons
/// only, rasterised at g_res / supersample. Returns nullopt when no candidate exists.
std::optional<FootholdRegion> generate_footholds(const std::vector<PolygonSegment>& polygons, const Pose& base_pose,
                                                 const FootState& foot, const FootholdParams& p,
                                                 double stamp = 0.0);

Json to_json(const FootholdCandidate& c, double stamp, std::size_t n_cells);

/// Columns i, j, x, y, z, k, eroded_flag; one row per support cell.
void write_grid_csv(const std::filesystem::path& path, const GridCloud& support, const GridCloud& eroded);

}  // namespace polymap
