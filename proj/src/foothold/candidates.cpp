#include "polymap/foothold.hpp"

#include <cmath>

namespace polymap {
namespace {

// Strict ordering: XY distance to the base, then x, then y.
bool closer(const Vec3& a, const Vec3& b) {
  const double da = a.head<2>().squaredNorm(), db = b.head<2>().squaredNorm();
  if (da != db) return da < db;
  if (a.x() != b.x()) return a.x() < b.x();
  return a.y() < b.y();
}

}  // namespace

std::optional<FootholdCandidate> select_candidates(const GridCloud& eroded, const Pose& base_pose,
                                                   const FootState& foot, const FootholdParams& p) {
  require_frame(eroded.frame, Frame::Base, "select_candidates grid");
  const double threshold = foot.z_foot() + p.delta_foot;
  const Vec3* best = nullptr;
  for (const auto& [ij, cell] : eroded.cells) {
    if (cell.point.z() > threshold && (!best || closer(cell.point, *best))) best = &cell.point;
  }
  if (!best) return std::nullopt;

  FootholdCandidate c;
  c.p_star = *best;
  const Vec3* second = nullptr;
  const double above = best->z() + 0.5 * p.h_layer;
  for (const auto& [ij, cell] : eroded.cells) {
    if (cell.point.z() > above && (!second || closer(cell.point, *second))) second = &cell.point;
  }
  if (second) c.p_star2 = *second;

  // Direction of p* seen from the base, measured in the world and relative
  // to the base heading.
  const Vec3 offset_W = base_pose.rotation * c.p_star;
  c.theta_rel = wrap_angle(std::atan2(offset_W.y(), offset_W.x()) - base_pose.rotation.yaw());
  return c;
}

int FootholdRegion::layer() const {
  const auto it = eroded.cells.find(eroded.index_of(candidate.p_star.x(), candidate.p_star.y()));
  if (it == eroded.cells.end()) throw std::logic_error("FootholdRegion: candidate is not an eroded cell");
  return it->second.layer;
}

bool FootholdRegion::covers(const Vec2& xy_world, bool use_eroded) const {
  const GridCloud& g = use_eroded ? eroded : support;
  const Vec3 w(xy_world.x(), xy_world.y(), to_world(candidate.p_star).z());
  const Vec3 b = invert(base_pose).apply(w);
  const auto it = g.cells.find(g.index_of(b.x(), b.y()));
  return it != g.cells.end() && it->second.layer == layer();
}

std::optional<FootholdRegion> generate_footholds(const std::vector<PolygonSegment>& polygons, const Pose& base_pose,
                                                 const FootState& foot, const FootholdParams& p, double stamp) {
  std::vector<PolygonSegment> treads;
  for (const PolygonSegment& s : polygons) {
    if (s.tread) treads.push_back(s);
  }
  FootholdRegion r;
  r.base_pose = base_pose;
  r.stamp = stamp;
  r.support = filter_cloud(build_dense_cloud(treads, p.g_res / p.supersample), base_pose, foot, p);
  r.eroded = layer_and_erode(r.support, foot, p);
  const auto c = select_candidates(r.eroded, base_pose, foot, p);
  if (!c) return std::nullopt;
  r.candidate = *c;
  return r;
}

Json to_json(const FootholdCandidate& c, double stamp, std::size_t n_cells) {
  return Json{{"stamp", stamp},
              {"p_star", to_json(c.p_star)},
              {"p_star2", c.p_star2 ? to_json(*c.p_star2) : Json(nullptr)},
              {"theta_rel", c.theta_rel},
              {"n_cells", n_cells}};
}

}  // namespace polymap
