#pragma once

// Slow, independent reference implementations used only by the tests.

#include "polymap/geometry.hpp"
#include "polymap/footstep_planner.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

using polymap::Vec2;
using polymap::Vec3;

/// Hull vertices by brute force: a point is on the hull iff it is an
/// endpoint of some pair (a, b) with every other point on one side, and it
/// is not strictly inside the segment. Returned as a sorted set.
std::vector<Vec2> hull_vertices_cubic(const std::vector<Vec2>& pts);

/// Per-pixel 3x3 scan: a pixel survives a pass when it and all eight
/// neighbours are set; out-of-bounds counts as empty.
std::vector<std::uint8_t> erode_naive(const std::vector<std::uint8_t>& bitmap, int w, int h, int passes);

/// Dense point sampling: true if some sample of `a` (n x n grid, edges
/// included) lies inside `b` or vice versa.
bool rect_overlap_sampled(const polymap::OrientedRectangle& a, const polymap::OrientedRectangle& b, int n = 200);

/// Total least-squares plane by SVD of the centred points: unit normal with
/// n.z >= 0 and offset d so that n.p + d = 0.
std::pair<Vec3, double> plane_svd(const std::vector<Vec3>& pts);

/// Slab method, written independently: nearest t > 0 of origin + t dir in
/// the box, or nullopt.
std::optional<double> ray_box_slab(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi);

/// Scalar Perona-Malik reference, one pixel at a time in double precision.
std::vector<double> diffuse_scalar(const std::vector<double>& img, int w, int h, double lambda, double kappa,
                                   int iterations);

/// Forward-difference normal at (u, v) from backprojected neighbours
/// (u+1, v) and (u, v+1); oriented towards the camera.
std::optional<Vec3> normal_forward(const std::vector<double>& depth, int w, int h, double fx, double fy, double cx,
                                   double cy, int u, int v);

}  // namespace oracle
