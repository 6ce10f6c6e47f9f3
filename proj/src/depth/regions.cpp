#include "polymap/depth_pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace polymap {
namespace {

struct EdgeField {
  std::vector<float> magnitude;
  std::vector<std::uint8_t> direction;  // 0: horizontal gradient, 1: 45, 2: vertical, 3: 135
};

std::uint8_t quantize_direction(double gx, double gy) {
  // Gradient angle folded into [0, 180) and binned at 22.5 / 67.5 degrees.
  constexpr double kTan22 = 0.41421356237309503;
  constexpr double kTan67 = 2.4142135623730949;
  const double ax = std::abs(gx), ay = std::abs(gy);
  if (ay <= kTan22 * ax) return 0;
  if (ay >= kTan67 * ax) return 2;
  return (gx > 0.0) == (gy > 0.0) ? 1 : 3;
}

// One image row of the fused edge terms. r0 points at the row above.
void edge_row(const double* __restrict r0, const double* __restrict X, const double* __restrict Y,
              const double* __restrict Z, const double* __restrict M, int w, double inv_depth_scale,
              double inv_normal_scale, double* __restrict gxs, double* __restrict gys, double* __restrict axs,
              double* __restrict ays, double* __restrict mds, double* __restrict mns) {
  const double* __restrict r1 = r0 + w;
  const double* __restrict r2 = r1 + w;
  for (int u = 1; u + 1 < w; ++u) {
    const double c = r1[u];
    // Depth term: Sobel gradient with invalid neighbours replaced by the
    // centre value, expressed as a relative change per pixel.
    const double a00 = r0[u - 1] > 0.0 ? r0[u - 1] : c, a01 = r0[u] > 0.0 ? r0[u] : c,
                 a02 = r0[u + 1] > 0.0 ? r0[u + 1] : c;
    const double a10 = r1[u - 1] > 0.0 ? r1[u - 1] : c, a12 = r1[u + 1] > 0.0 ? r1[u + 1] : c;
    const double a20 = r2[u - 1] > 0.0 ? r2[u - 1] : c, a21 = r2[u] > 0.0 ? r2[u] : c,
                 a22 = r2[u + 1] > 0.0 ? r2[u + 1] : c;
    const double gx = (a02 + 2 * a12 + a22) - (a00 + 2 * a10 + a20);
    const double gy = (a20 + 2 * a21 + a22) - (a00 + 2 * a01 + a02);
    const double md = c > 0.0 ? std::min(1.0, std::sqrt(gx * gx + gy * gy) / c * inv_depth_scale) : 0.0;

    // Normal term: angle between the unit normals on either side of the
    // pixel, 2 asin(|a - b| / 2), zero unless both are valid.
    const double hx = X[u + 1] - X[u - 1], hy = Y[u + 1] - Y[u - 1], hz = Z[u + 1] - Z[u - 1];
    const double vx = X[u + w] - X[u - w], vy = Y[u + w] - Y[u - w], vz = Z[u + w] - Z[u - w];
    const double ax =
        M[u - 1] * M[u + 1] * 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(hx * hx + hy * hy + hz * hz)));
    const double ay =
        M[u - w] * M[u + w] * 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(vx * vx + vy * vy + vz * vz)));
    const double mn = c > 0.0 ? std::min(1.0, std::sqrt(ax * ax + ay * ay) * inv_normal_scale) : 0.0;
    gxs[u] = gx;
    gys[u] = gy;
    axs[u] = ax;
    ays[u] = ay;
    mds[u] = md;
    mns[u] = mn;
  }
}

EdgeField edge_strength(const NormalMap& nm, const DepthImage& img, const RegionParams& p) {
  const int w = img.width();
  const int h = img.height();
  EdgeField f;
  f.magnitude.assign(img.size(), 0.0f);
  f.direction.assign(img.size(), 0);
  const double inv_depth_scale = 1.0 / (8.0 * p.depth_edge_scale);
  const double inv_normal_scale = 1.0 / p.normal_edge_scale;

  // Structure-of-arrays copies keep the row loop vectorisable. Invalid
  // depth is replaced by the centre value below; invalid normals carry a
  // zero mask.
  const std::size_t n = img.size();
  thread_local std::vector<double> nxv, nyv, nzv, nmv;
  nxv.resize(n), nyv.resize(n), nzv.resize(n), nmv.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& q = nm.normals[i];
    nxv[i] = q.x(), nyv[i] = q.y(), nzv[i] = q.z();
    nmv[i] = nm.valid[i] ? 1.0 : 0.0;
  }

  std::vector<double> gxs(w), gys(w), axs(w), ays(w), mds(w), mns(w);
  for (int v = 1; v + 1 < h; ++v) {
    const std::size_t row = static_cast<std::size_t>(v) * w;
    edge_row(img.data().data() + row - w, nxv.data() + row, nyv.data() + row, nzv.data() + row,
             nmv.data() + row, w, inv_depth_scale, inv_normal_scale, gxs.data(), gys.data(), axs.data(), ays.data(),
             mds.data(), mns.data());
    for (int u = 1; u + 1 < w; ++u) {
      const std::size_t i = row + u;
      const bool depth_wins = mds[u] >= mns[u];
      const double m = depth_wins ? mds[u] : mns[u];
      f.magnitude[i] = static_cast<float>(m);
      if (m >= p.canny_low) {
        f.direction[i] = depth_wins ? quantize_direction(gxs[u], gys[u]) : quantize_direction(axs[u], ays[u]);
      }
    }
  }
  return f;
}

}  // namespace

std::vector<std::uint8_t> contour_map(const NormalMap& nm, const DepthImage& img, const RegionParams& p) {
  const int w = img.width();
  const int h = img.height();
  const EdgeField f = edge_strength(nm, img, p);
  const auto& m = f.magnitude;

  // Non-maximum suppression along the quantised gradient direction.
  // Plateaus are kept (>= on both sides) so ridges stay closed.
  std::vector<std::uint8_t> cls(img.size(), 0);  // 0 none, 1 weak, 2 strong
  const std::ptrdiff_t offs[4][2] = {{-1, 1}, {-(w + 1), w + 1}, {-w, w}, {-(w - 1), w - 1}};
  for (int v = 1; v + 1 < h; ++v) {
    for (int u = 1; u + 1 < w; ++u) {
      const std::size_t i = img.index(u, v);
      const float mi = m[i];
      if (mi < p.canny_low) continue;
      const auto& o = offs[f.direction[i]];
      if (mi < m[i + o[0]] || mi < m[i + o[1]]) continue;
      cls[i] = mi >= p.canny_high ? 2 : 1;
    }
  }

  // Hysteresis: keep weak pixels 8-connected to a strong one.
  std::vector<std::uint8_t> edge(img.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (cls[i] != 2 || edge[i]) continue;
    edge[i] = 1;
    stack.push_back(i);
    while (!stack.empty()) {
      const std::size_t j = stack.back();
      stack.pop_back();
      const int ju = static_cast<int>(j % w), jv = static_cast<int>(j / w);
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int nu = ju + du, nv = jv + dv;
          if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
          const std::size_t k = img.index(nu, nv);
          if (cls[k] && !edge[k]) {
            edge[k] = 1;
            stack.push_back(k);
          }
        }
      }
    }
  }

  // One dilation pass closes diagonal gaps for 4-connected region growing.
  std::vector<std::uint8_t> out(img.size(), 0);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!edge[img.index(u, v)]) continue;
      for (int dv = -1; dv <= 1; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          const int nu = u + du, nv = v + dv;
          if (nu >= 0 && nv >= 0 && nu < w && nv < h) out[img.index(nu, nv)] = 1;
        }
      }
    }
  }
  return out;
}

std::vector<PixelRegion> detect_plane_regions(const NormalMap& nm, const DepthImage& img, const RegionParams& p) {
  if (nm.width != img.width() || nm.height != img.height()) {
    throw ValidationError("detect_plane_regions: normal map and depth image differ in size");
  }
  const int w = img.width();
  const int h = img.height();
  const std::vector<std::uint8_t> contour = contour_map(nm, img, p);

  // Two-pass 4-connected labelling with union-find. Scanning in raster
  // order yields every region's pixels already sorted.
  const std::size_t n = img.size();
  std::vector<std::int32_t> label(n, -1);
  std::vector<std::int32_t> parent;
  auto find = [&](std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t i = img.index(u, v);
      if (contour[i] || !nm.valid[i]) continue;
      const std::int32_t left = u > 0 ? label[i - 1] : -1;
      const std::int32_t up = v > 0 ? label[i - w] : -1;
      if (left < 0 && up < 0) {
        label[i] = static_cast<std::int32_t>(parent.size());
        parent.push_back(label[i]);
      } else if (left < 0 || up < 0) {
        label[i] = left < 0 ? up : left;
      } else {
        const std::int32_t a = find(left), b = find(up);
        label[i] = std::min(a, b);
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  std::vector<std::int32_t> root_size(parent.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) {
      label[i] = find(label[i]);
      ++root_size[label[i]];
    }
  }
  std::vector<std::int32_t> slot(parent.size(), -1);
  std::vector<PixelRegion> regions;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t r = label[i];
    if (r < 0 || root_size[r] < p.min_region_pixels) continue;
    if (slot[r] < 0) {
      slot[r] = static_cast<std::int32_t>(regions.size());
      regions.emplace_back();
      regions.back().pixels.reserve(static_cast<std::size_t>(root_size[r]));
    }
    regions[slot[r]].pixels.push_back(i);
  }
  return regions;
}

}  // namespace polymap
