#include "polymap/depth_pipeline.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace polymap {
namespace {

std::vector<std::size_t> collect_inliers(const std::vector<Vec3>& pts, const Vec3& n, double d, double thr) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(n.dot(pts[i]) + d) <= thr) out.push_back(i);
  }
  return out;
}

PlaneModel fit_subset(const std::vector<Vec3>& pts, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> sel;
  sel.reserve(idx.size());
  for (std::size_t i : idx) sel.push_back(pts[i]);
  return fit_plane_least_squares(sel);
}

}  // namespace

void RansacParams::validate() const {
  if (max_iterations < 1) throw ConfigError("ransac: max_iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw ConfigError("ransac: inlier_threshold must be positive");
  if (min_inliers < 3) throw ConfigError("ransac: min_inliers must be >= 3");
  if (!(confidence > 0.0 && confidence <= 1.0)) throw ConfigError("ransac: confidence must lie in (0, 1]");
}

PlaneModel fit_plane_least_squares(const std::vector<Vec3>& points) {
  if (points.size() < 3) throw ValidationError("fit_plane_least_squares: need at least 3 points");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 scatter = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 q = p - mean;
    scatter.noalias() += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  Vec3 n = es.eigenvectors().col(0).normalized();
  double d = -n.dot(mean);
  if (d < 0.0) {
    n = -n;
    d = -d;
  }
  PlaneModel m;
  m.normal = n;
  m.d = d;
  m.inlier_count = points.size();
  double ss = 0.0;
  for (const Vec3& p : points) {
    const double r = n.dot(p) + d;
    ss += r * r;
  }
  m.rms_residual = std::sqrt(ss / static_cast<double>(points.size()));
  return m;
}

std::optional<PlaneFit> fit_plane_ransac(const PointCloud& cloud, const RansacParams& p) {
  p.validate();
  const auto& pts = cloud.points;
  const std::size_t n = pts.size();
  if (n < 3) return std::nullopt;

  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  Vec3 best_n = Vec3::UnitZ();
  double best_d = 0.0;
  std::size_t best_count = 0;
  double needed = static_cast<double>(p.max_iterations);

  for (int it = 0; it < p.max_iterations && it < needed; ++it) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    std::size_t c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Vec3 normal = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = normal.norm();
    if (!(len > 1e-12)) continue;
    normal /= len;
    const double d = -normal.dot(pts[a]);

    std::size_t count = 0;
    for (const Vec3& q : pts) {
      if (std::abs(normal.dot(q) + d) <= p.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_n = normal;
      best_d = d;
      const double w = static_cast<double>(count) / static_cast<double>(n);
      const double miss = 1.0 - w * w * w;
      if (miss <= 0.0) {
        needed = 0.0;
      } else if (p.confidence < 1.0) {
        needed = std::ceil(std::log(1.0 - p.confidence) / std::log(miss));
      }
    }
  }
  if (best_count < static_cast<std::size_t>(p.min_inliers)) return std::nullopt;

  // Two rounds of refit-then-reselect against the least-squares plane.
  std::vector<std::size_t> inliers = collect_inliers(pts, best_n, best_d, p.inlier_threshold);
  PlaneModel model;
  for (int round = 0; round < 2; ++round) {
    if (inliers.size() < 3) return std::nullopt;
    model = fit_subset(pts, inliers);
    std::vector<std::size_t> next = collect_inliers(pts, model.normal, model.d, p.inlier_threshold);
    if (next == inliers) break;
    inliers = std::move(next);
  }
  if (inliers.size() < static_cast<std::size_t>(p.min_inliers)) return std::nullopt;

  // Report statistics of the final model over its own inlier set.
  double ss = 0.0;
  for (std::size_t i : inliers) {
    const double r = model.signed_distance(pts[i]);
    ss += r * r;
  }
  model.inlier_count = inliers.size();
  model.rms_residual = std::sqrt(ss / static_cast<double>(inliers.size()));
  return PlaneFit{model, std::move(inliers)};
}

}  // namespace polymap
