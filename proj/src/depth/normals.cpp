#include "polymap/depth_pipeline.hpp"

#include <cmath>

namespace polymap {
namespace {

struct Planes {
  const double* X;
  const double* Y;
  const double* Z;
  const double* M;
};

// Sobel-weighted central differences over pairs where both ends are valid,
// for one row of the padded point grid. `c` is the padded index of u = 0.
// With a full neighbourhood this is the classic 3x3 kernel.
void normal_row(Planes g, std::size_t c, int w, int pw, double* __restrict nx, double* __restrict ny,
                double* __restrict nz, double* __restrict ok) {
  const double* __restrict X = g.X + c;
  const double* __restrict Y = g.Y + c;
  const double* __restrict Z = g.Z + c;
  const double* __restrict M = g.M + c;
  for (int u = 0; u < w; ++u) {
    // Horizontal pairs (u-1, u+1) in rows -1, 0, +1 and vertical pairs
    // (v-1, v+1) in columns -1, 0, +1.
    const int l0 = u - 1 - pw, l1 = u - 1, l2 = u - 1 + pw;
    const int t0 = u - 1 - pw, t1 = u - pw, t2 = u + 1 - pw;
    const double h0 = M[l0] * M[l0 + 2], h1 = 2.0 * M[l1] * M[l1 + 2], h2 = M[l2] * M[l2 + 2];
    const double v0 = M[t0] * M[t0 + 2 * pw], v1 = 2.0 * M[t1] * M[t1 + 2 * pw], v2 = M[t2] * M[t2 + 2 * pw];
    const double wa = h0 + h1 + h2, wb = v0 + v1 + v2;
    const double ax = h0 * (X[l0 + 2] - X[l0]) + h1 * (X[l1 + 2] - X[l1]) + h2 * (X[l2 + 2] - X[l2]);
    const double ay = h0 * (Y[l0 + 2] - Y[l0]) + h1 * (Y[l1 + 2] - Y[l1]) + h2 * (Y[l2 + 2] - Y[l2]);
    const double az = h0 * (Z[l0 + 2] - Z[l0]) + h1 * (Z[l1 + 2] - Z[l1]) + h2 * (Z[l2 + 2] - Z[l2]);
    const int s = 2 * pw;
    const double bx = v0 * (X[t0 + s] - X[t0]) + v1 * (X[t1 + s] - X[t1]) + v2 * (X[t2 + s] - X[t2]);
    const double by = v0 * (Y[t0 + s] - Y[t0]) + v1 * (Y[t1 + s] - Y[t1]) + v2 * (Y[t2 + s] - Y[t2]);
    const double bz = v0 * (Z[t0 + s] - Z[t0]) + v1 * (Z[t1 + s] - Z[t1]) + v2 * (Z[t2 + s] - Z[t2]);
    // The positive 1 / (2 w) scales do not change the normal's direction
    // but keep the degenerate-length test in metric units.
    const double sa = wa > 0.0 ? 0.5 / wa : 0.0;
    const double sb = wb > 0.0 ? 0.5 / wb : 0.0;
    const double k = sa * sb;
    const double cx = k * (ay * bz - az * by);
    const double cy = k * (az * bx - ax * bz);
    const double cz = k * (ax * by - ay * bx);
    const double len = std::sqrt(cx * cx + cy * cy + cz * cz);
    const bool good = M[u] > 0.0 && wa > 0.0 && wb > 0.0 && len >= 1e-12;
    const double inv = good ? 1.0 / len : 0.0;
    // Orient towards the camera.
    const double sign = (cx * X[u] + cy * Y[u] + cz * Z[u]) > 0.0 ? -inv : inv;
    nx[u] = cx * sign;
    ny[u] = cy * sign;
    nz[u] = cz * sign;
    ok[u] = good ? 1.0 : 0.0;
  }
}

void backproject_row(const double* __restrict d, int w, double v, const CameraIntrinsics& intr,
                     double* __restrict X, double* __restrict Y, double* __restrict Z, double* __restrict M) {
  const double ifx = 1.0 / intr.fx, ify = 1.0 / intr.fy;
  const double yv = (v - intr.cy) * ify;
  for (int u = 0; u < w; ++u) {
    const double z = d[u] > 0.0 ? d[u] : 0.0;
    X[u] = (u - intr.cx) * ifx * z;
    Y[u] = yv * z;
    Z[u] = z;
    M[u] = z > 0.0 ? 1.0 : 0.0;
  }
}

}  // namespace

NormalMap compute_normals(const DepthImage& img, const CameraIntrinsics& intr) {
  const int w = img.width();
  const int h = img.height();
  NormalMap out;
  out.width = w;
  out.height = h;
  out.normals.assign(img.size(), Vec3::Zero());
  out.valid.assign(img.size(), 0);
  if (img.size() == 0) return out;

  // Backprojected points on a grid padded by one invalid pixel on each side.
  const int pw = w + 2;
  const std::size_t pn = static_cast<std::size_t>(pw) * (h + 2);
  // Per-thread buffers: fresh multi-megabyte allocations cost more in page
  // faults than the arithmetic below.
  thread_local std::vector<double> X, Y, Z, M;
  X.assign(pn, 0.0), Y.assign(pn, 0.0), Z.assign(pn, 0.0), M.assign(pn, 0.0);
  for (int v = 0; v < h; ++v) {
    const std::size_t j = static_cast<std::size_t>(v + 1) * pw + 1;
    backproject_row(img.data().data() + img.index(0, v), w, v, intr, &X[j], &Y[j], &Z[j], &M[j]);
  }

  std::vector<double> nx(w), ny(w), nz(w), ok(w);
  const Planes g{X.data(), Y.data(), Z.data(), M.data()};
  for (int v = 0; v < h; ++v) {
    normal_row(g, static_cast<std::size_t>(v + 1) * pw + 1, w, pw, nx.data(), ny.data(), nz.data(), ok.data());
    for (int u = 0; u < w; ++u) {
      if (ok[u] == 0.0) continue;
      const std::size_t i = img.index(u, v);
      out.normals[i] = Vec3(nx[u], ny[u], nz[u]);
      out.valid[i] = 1;
    }
  }
  return out;
}

}  // namespace polymap
