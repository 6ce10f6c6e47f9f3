#include "polymap/depth_pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace polymap {
namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double len2 = e.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(e) / len2, 0.0, 1.0);
  return (p - (a + t * e)).norm();
}

// Open-chain Douglas-Peucker over pts[first..last], appending kept interior
// vertices (not the endpoints) in order.
void dp_chain(const std::vector<Vec2>& pts, std::size_t first, std::size_t last, double tol,
              std::vector<std::size_t>& keep) {
  if (last <= first + 1) return;
  double worst = -1.0;
  std::size_t at = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double dist = point_segment_distance(pts[i], pts[first], pts[last]);
    if (dist > worst) {
      worst = dist;
      at = i;
    }
  }
  if (worst <= tol) return;
  dp_chain(pts, first, at, tol, keep);
  keep.push_back(at);
  dp_chain(pts, at, last, tol, keep);
}

// Orthonormal basis (e1, e2) of the plane with normal n.
std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = n.cross(helper).normalized();
  return {e1, n.cross(e1)};
}

}  // namespace

double PolygonSegment::mean_height() const {
  if (vertices.empty()) return 0.0;
  double s = 0.0;
  for (const Vec3& v : vertices) s += v.z();
  return s / static_cast<double>(vertices.size());
}

std::vector<Vec2> simplify_ring(const std::vector<Vec2>& ring, double tolerance) {
  const std::size_t n = ring.size();
  if (n <= 3 || tolerance <= 0.0) return ring;

  // Anchor the ring at vertex 0 and the vertex farthest from it, then
  // simplify both chains between the anchors.
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = (ring[i] - ring[0]).squaredNorm();
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<Vec2> closed(ring);
  closed.push_back(ring[0]);

  std::vector<std::size_t> keep{0};
  dp_chain(closed, 0, far, tolerance, keep);
  keep.push_back(far);
  dp_chain(closed, far, n, tolerance, keep);

  std::vector<Vec2> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(ring[i]);
  if (out.size() < 3) return ring;
  return out;
}

std::vector<PolygonSegment> extract_polygon_map(const DepthImage& img, const CameraIntrinsics& intr,
                                                const Pose& camera_pose_W, const PolygonMapConfig& cfg,
                                                double stamp) {
  intr.validate();
  if (img.width() != intr.width || img.height() != intr.height) {
    throw ValidationError("extract_polygon_map: depth image does not match intrinsics");
  }
  cfg.ransac.validate();

  const DepthImage smooth = diffuse(img, cfg.diffusion);
  const NormalMap normals = compute_normals(smooth, intr);
  const std::vector<PixelRegion> regions = detect_plane_regions(normals, smooth, cfg.regions);

  const int w = img.width();
  const double cos_tilt = std::cos(cfg.max_tilt_deg * 3.14159265358979323846 / 180.0);
  std::vector<PolygonSegment> out;

  std::vector<Vec3> pts;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& pix = regions[r].pixels;
    pts.clear();
    pts.reserve(pix.size());
    for (std::size_t i : pix) {
      pts.push_back(backproject_depth(smooth.data()[i], intr, static_cast<double>(i % w),
                                      static_cast<double>(i / w)));
    }

    PointCloud fit_cloud;
    fit_cloud.frame = Frame::Camera;
    const std::size_t stride =
        cfg.max_fit_points > 0 ? std::max<std::size_t>(1, (pts.size() + cfg.max_fit_points - 1) / cfg.max_fit_points) : 1;
    if (stride == 1) {
      fit_cloud.points = pts;
    } else {
      for (std::size_t i = 0; i < pts.size(); i += stride) fit_cloud.points.push_back(pts[i]);
    }

    RansacParams rp = cfg.ransac;
    rp.seed = cfg.ransac.seed + r;
    const std::optional<PlaneFit> fit = fit_plane_ransac(fit_cloud, rp);
    if (!fit) continue;
    const PlaneModel& plane = fit->plane;

    // Hull candidates: leftmost and rightmost inlier pixel of every image
    // row. A plane maps to the image by a homography, which preserves
    // convexity, so these contain the hull of the inlier footprint.
    std::vector<Vec2> cand;
    std::size_t inliers = 0;
    double ss = 0.0;
    const auto [e1, e2] = plane_basis(plane.normal);
    long row = -1;
    std::size_t row_first = 0, row_last = 0;
    auto flush_row = [&]() {
      if (row < 0) return;
      for (std::size_t k : {row_first, row_last}) {
        const Vec3& p = pts[k];
        cand.emplace_back(e1.dot(p), e2.dot(p));
      }
    };
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double dist = plane.signed_distance(pts[k]);
      if (std::abs(dist) > rp.inlier_threshold) continue;
      ++inliers;
      ss += dist * dist;
      const long v = static_cast<long>(pix[k] / w);
      if (v != row) {
        flush_row();
        row = v;
        row_first = k;
      }
      row_last = k;
    }
    flush_row();
    if (inliers < static_cast<std::size_t>(rp.min_inliers)) continue;

    std::vector<Vec2> ring = convex_hull(std::move(cand));
    if (ring.size() < 3) continue;
    ring = simplify_ring(ring, cfg.simplify_tolerance);

    PolygonSegment seg;
    seg.stamp = stamp;
    const Vec3 origin = -plane.d * plane.normal;
    seg.vertices.reserve(ring.size());
    for (const Vec2& q : ring) {
      seg.vertices.push_back(camera_pose_W.apply(origin + q.x() * e1 + q.y() * e2));
    }
    seg.plane.normal = camera_pose_W.rotation * plane.normal;
    seg.plane.d = plane.d - seg.plane.normal.dot(camera_pose_W.translation);
    seg.plane.inlier_count = inliers;
    seg.plane.rms_residual = std::sqrt(ss / static_cast<double>(inliers));
    seg.tread = std::abs(seg.plane.normal.z()) >= cos_tilt;
    out.push_back(std::move(seg));
  }
  return out;
}

Json to_json(const PolygonSegment& seg) {
  Json verts = Json::array();
  for (const Vec3& v : seg.vertices) verts.push_back(to_json(v));
  return Json{{"stamp", seg.stamp},
              {"vertices", verts},
              {"normal", to_json(seg.plane.normal)},
              {"d", seg.plane.d},
              {"inliers", seg.plane.inlier_count},
              {"rms", seg.plane.rms_residual},
              {"tread", seg.tread}};
}

PolygonSegment polygon_from_json(const Json& j) {
  PolygonSegment seg;
  try {
    seg.stamp = j.value("stamp", 0.0);
    for (const Json& v : j.at("vertices")) seg.vertices.push_back(vec3_from_json(v));
    seg.plane.normal = vec3_from_json(j.at("normal"));
    seg.plane.d = j.at("d").get<double>();
    seg.plane.inlier_count = j.value("inliers", std::size_t{0});
    seg.plane.rms_residual = j.value("rms", 0.0);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("polygon json: ") + e.what());
  }
  if (seg.vertices.size() < 3) throw ValidationError("polygon json: need at least 3 vertices");
  const double len = seg.plane.normal.norm();
  if (!(std::abs(len - 1.0) < 1e-6)) throw ValidationError("polygon json: normal is not unit length");
  seg.plane.normal /= len;
  seg.tread = j.value("tread", std::abs(seg.plane.normal.z()) >= std::cos(15.0 * 3.14159265358979323846 / 180.0));
  return seg;
}

}  // namespace polymap
