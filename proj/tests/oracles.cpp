#include "oracles.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

std::vector<Vec2> hull_vertices_cubic(const std::vector<Vec2>& pts) {
  const std::size_t n = pts.size();
  std::vector<Vec2> out;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  for (std::size_t i = 0; i < n; ++i) {
    bool vertex = false;
    for (std::size_t j = 0; j < n && !vertex; ++j) {
      if (pts[i] == pts[j]) continue;
      // Supporting line through i and j: all points on one closed side.
      bool left = true, right = true;
      bool strictly_between = false;
      for (std::size_t k = 0; k < n; ++k) {
        if (pts[k] == pts[i] || pts[k] == pts[j]) continue;  // FMA contraction makes these nonzero
        const double c = cross(pts[i], pts[j], pts[k]);
        if (c > 0) right = false;
        if (c < 0) left = false;
        if (c == 0) {
          // i must be an extreme point of the collinear set on this line.
          const Vec2 d = pts[j] - pts[i];
          const double t = (pts[k] - pts[i]).dot(d);
          if (t < 0) strictly_between = true;  // k lies beyond i, so i is interior
        }
      }
      if ((left || right) && !strictly_between) vertex = true;
    }
    if (vertex) out.push_back(pts[i]);
  }
  std::sort(out.begin(), out.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint8_t> erode_naive(const std::vector<std::uint8_t>& bitmap, int w, int h, int passes) {
  std::vector<std::uint8_t> cur = bitmap;
  for (int p = 0; p < passes; ++p) {
    std::vector<std::uint8_t> next(cur.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        bool keep = true;
        for (int dy = -1; dy <= 1 && keep; ++dy) {
          for (int dx = -1; dx <= 1 && keep; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !cur[ny * w + nx]) keep = false;
          }
        }
        next[y * w + x] = keep ? 1 : 0;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

bool inside(const polymap::OrientedRectangle& r, const Vec2& p) {
  const double c = std::cos(r.theta), s = std::sin(r.theta);
  const Vec2 d = p - r.center;
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= r.w / 2 && std::abs(ly) <= r.h / 2;
}

bool any_sample_inside(const polymap::OrientedRectangle& a, const polymap::OrientedRectangle& b, int n) {
  const double c = std::cos(a.theta), s = std::sin(a.theta);
  for (int i = 0; i < n; ++i) {
    const double lx = -a.w / 2 + a.w * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double ly = -a.h / 2 + a.h * j / (n - 1);
      const Vec2 p = a.center + Vec2(c * lx - s * ly, s * lx + c * ly);
      if (inside(b, p)) return true;
    }
  }
  return false;
}

}  // namespace

bool rect_overlap_sampled(const polymap::OrientedRectangle& a, const polymap::OrientedRectangle& b, int n) {
  return any_sample_inside(a, b, n) || any_sample_inside(b, a, n);
}

std::pair<Vec3, double> plane_svd(const std::vector<Vec3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::MatrixXd m(pts.size(), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = (pts[i] - mean).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  Vec3 n = svd.matrixV().col(2);
  if (n.z() < 0) n = -n;
  return {n, -n.dot(mean)};
}

std::optional<double> ray_box_slab(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - origin[a]) / dir[a];
    double tb = (hi[a] - origin[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t0 <= 0.0) return std::nullopt;
  return t0;
}

std::vector<double> diffuse_scalar(const std::vector<double>& img, int w, int h, double lambda, double kappa,
                                   int iterations) {
  std::vector<double> cur = img;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> next = cur;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double c = cur[y * w + x];
        if (c <= 0.0) continue;
        double sum = 0.0;
        const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
        for (const auto& q : nb) {
          if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
          const double n = cur[q[1] * w + q[0]];
          if (n <= 0.0) continue;
          const double g = n - c;
          sum += std::exp(-(g / kappa) * (g / kappa)) * g;
        }
        next[y * w + x] = c + lambda * sum;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

std::optional<Vec3> normal_forward(const std::vector<double>& depth, int w, int h, double fx, double fy, double cx,
                                   double cy, int u, int v) {
  if (u + 1 >= w || v + 1 >= h) return std::nullopt;
  auto P = [&](int x, int y) -> std::optional<Vec3> {
    const double d = depth[y * w + x];
    if (d <= 0.0) return std::nullopt;
    return Vec3((x - cx) * d / fx, (y - cy) * d / fy, d);
  };
  const auto p = P(u, v), pu = P(u + 1, v), pv = P(u, v + 1);
  if (!p || !pu || !pv) return std::nullopt;
  Vec3 n = (*pu - *p).cross(*pv - *p);
  if (n.norm() < 1e-12) return std::nullopt;
  n.normalize();
  if (n.dot(*p) > 0) n = -n;
  return n;
}

}  // namespace oracle
