#include "polymap/foothold.hpp"

#include <cmath>

namespace polymap {

PointCloud build_dense_cloud(const std::vector<PolygonSegment>& polygons, double g_res, std::size_t* skipped) {
  if (!(g_res > 0.0)) throw ConfigError("build_dense_cloud: g_res must be positive");
  PointCloud out;
  out.frame = Frame::World;
  if (skipped) *skipped = 0;

  constexpr double kSnap = 1e-9;
  for (const PolygonSegment& poly : polygons) {
    if (poly.vertices.size() < 3) throw ValidationError("build_dense_cloud: polygon with fewer than 3 vertices");
    std::vector<Vec2> flat;
    flat.reserve(poly.vertices.size());
    double zsum = 0.0;
    for (const Vec3& v : poly.vertices) {
      flat.emplace_back(v.x(), v.y());
      zsum += v.z();
    }
    const std::vector<Vec2> hull = convex_hull(std::move(flat));
    if (hull.size() < 3) {
      if (skipped) ++*skipped;
      continue;
    }
    const double z = zsum / static_cast<double>(poly.vertices.size());

    Vec2 lo = hull.front(), hi = hull.front();
    for (const Vec2& h : hull) {
      lo = lo.cwiseMin(h);
      hi = hi.cwiseMax(h);
    }
    const int i0 = static_cast<int>(std::ceil(lo.x() / g_res - kSnap));
    const int i1 = static_cast<int>(std::floor(hi.x() / g_res + kSnap));
    const int j0 = static_cast<int>(std::ceil(lo.y() / g_res - kSnap));
    const int j1 = static_cast<int>(std::floor(hi.y() / g_res + kSnap));
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        const Vec2 q(i * g_res, j * g_res);
        if (hull_contains(hull, q)) out.points.emplace_back(q.x(), q.y(), z);
      }
    }
  }
  return out;
}

}  // namespace polymap
