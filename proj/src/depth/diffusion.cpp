#include "polymap/depth_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace polymap {

void DiffusionParams::validate() const {
  if (!(lambda > 0.0 && lambda <= 0.25)) {
    throw ConfigError("diffusion: lambda must lie in (0, 0.25], got " + std::to_string(lambda));
  }
  if (iterations < 0) throw ConfigError("diffusion: iterations must be >= 0");
  if (!(kappa > 0.0)) throw ConfigError("diffusion: kappa must be positive");
}

DepthImage diffuse(const DepthImage& img, const DiffusionParams& p) {
  p.validate();
  DepthImage out = img;
  if (p.iterations == 0 || img.size() == 0) return out;

  const int w = img.width();
  const int h = img.height();
  const std::size_t n = img.size();
  const float inv_k2 = static_cast<float>(1.0 / (p.kappa * p.kappa));
  const float lambda = static_cast<float>(p.lambda);
  // exp(-80) is still a normal float; larger arguments only cost time.
  constexpr float kMaxExponent = 80.0f;

  // Single precision working copy; the mask zeroes every flux that touches
  // an invalid pixel, so the loops below stay branch-free.
  thread_local std::vector<float> cur, mask, fx, fy;
  cur.resize(n), mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = img.data()[i] > 0.0;
    cur[i] = ok ? static_cast<float>(img.data()[i]) : 0.0f;
    mask[i] = ok ? 1.0f : 0.0f;
  }

  // Flux through the edge between a pixel and its right / lower neighbour.
  fx.assign(n, 0.0f), fy.assign(n, 0.0f);
  for (int it = 0; it < p.iterations; ++it) {
    for (int v = 0; v < h; ++v) {
      const std::size_t row = static_cast<std::size_t>(v) * w;
      const float* c = cur.data() + row;
      const float* m = mask.data() + row;
      float* ox = fx.data() + row;
      for (int u = 0; u + 1 < w; ++u) {
        const float g = m[u] * m[u + 1] * (c[u + 1] - c[u]);
        ox[u] = g * std::exp(-std::min(g * g * inv_k2, kMaxExponent));
      }
      if (v + 1 < h) {
        float* oy = fy.data() + row;
        const float* c2 = c + w;
        const float* m2 = m + w;
        for (int u = 0; u < w; ++u) {
          const float g = m[u] * m2[u] * (c2[u] - c[u]);
          oy[u] = g * std::exp(-std::min(g * g * inv_k2, kMaxExponent));
        }
      }
    }
    for (int v = 0; v < h; ++v) {
      const std::size_t row = static_cast<std::size_t>(v) * w;
      float* c = cur.data() + row;
      const float* m = mask.data() + row;
      const float* ox = fx.data() + row;
      const float* oy = fy.data() + row;
      c[0] += m[0] * lambda * (ox[0] + oy[0] - (v > 0 ? oy[-w] : 0.0f));
      if (v > 0) {
        const float* up = oy - w;
        for (int u = 1; u < w; ++u) c[u] += m[u] * lambda * (ox[u] - ox[u - 1] + oy[u] - up[u]);
      } else {
        for (int u = 1; u < w; ++u) c[u] += m[u] * lambda * (ox[u] - ox[u - 1] + oy[u]);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] != 0.0f) out.data()[i] = static_cast<double>(cur[i]);
  }
  return out;
}

}  // namespace polymap
