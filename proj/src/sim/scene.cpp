#include "polymap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polymap {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a, so stream names map to fixed constants on every platform.
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s) ^ hash_name(name);
  std::uint64_t b = splitmix64(a) ^ (index * 0xD1B54A32D192ED03ull);
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Rng(seq);
}

std::optional<RayHit> ray_box(const Vec3& o, const Vec3& d, const Box& box, double t_min) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < box.lo[a] || o[a] > box.hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / d[a];
    double t0 = (box.lo[a] - o[a]) * inv;
    double t1 = (box.hi[a] - o[a]) * inv;
    int f = 2 * a;  // entering through the low face
    if (t0 > t1) {
      std::swap(t0, t1);
      f = 2 * a + 1;
    }
    if (t0 > t_near) {
      t_near = t0;
      face = f;
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (face < 0 || t_near <= t_min) return std::nullopt;  // parallel to all slabs, or origin inside
  return RayHit{t_near, -1, face};
}

std::optional<RayHit> Scene::cast(const Vec3& origin_W, const Vec3& dir_W) const {
  const Pose to_scene = invert(pose);
  const Vec3 o = to_scene.apply(origin_W);
  const Vec3 d = to_scene.rotation * dir_W;
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    auto h = ray_box(o, d, boxes[i]);
    if (h && (!best || h->t < best->t)) {
      h->box = static_cast<int>(i);
      best = h;
    }
  }
  return best;
}

void StaircaseScene::validate() const {
  if (n_steps < 1) throw ConfigError("scene: n_steps must be >= 1");
  if (!(rise > 0.0 && tread > 0.0 && width > 0.0)) throw ConfigError("scene: rise, tread and width must be positive");
  if (!(landing >= 0.0 && nosing >= 0.0 && nosing_thickness > 0.0 && floor_extent > 0.0)) {
    throw ConfigError("scene: landing and nosing must be >= 0, nosing_thickness and floor_extent > 0");
  }
  if (nosing >= tread) throw ConfigError("scene: nosing must be shorter than the tread");
}

Scene StaircaseScene::build() const {
  validate();
  Scene s;
  s.pose = first_riser;
  const double x_end = n_steps * tread + landing;
  s.boxes.push_back({Vec3(-floor_extent, -floor_extent, -0.1), Vec3(x_end + floor_extent, floor_extent, 0.0)});
  for (int k = 1; k <= n_steps; ++k) {
    s.boxes.push_back({Vec3((k - 1) * tread, -width / 2, 0.0), Vec3(x_end, width / 2, k * rise)});
  }
  if (nosing > 0.0) {
    for (int k = 1; k <= n_steps; ++k) {
      s.boxes.push_back({Vec3((k - 1) * tread - nosing, -width / 2, k * rise - nosing_thickness),
                         Vec3((k - 1) * tread, width / 2, k * rise)});
    }
  }
  return s;
}

std::pair<double, double> StaircaseScene::tread_x_range(int k) const {
  if (k <= 0) return {-floor_extent, -nosing};
  if (k >= n_steps) return {(n_steps - 1) * tread - nosing, n_steps * tread + landing};
  return {(k - 1) * tread - nosing, k * tread - nosing};
}

int StaircaseScene::level_at(double x, double y) const {
  if (std::abs(y) > width / 2 || x < -nosing || x > n_steps * tread + landing) return 0;
  const int k = static_cast<int>(std::floor((x + nosing) / tread)) + 1;
  return std::clamp(k, 1, n_steps);
}

bool StaircaseScene::rectangle_on_level(const OrientedRectangle& rect_W, int k) const {
  const Pose to_stair = invert(first_riser);
  const auto [x0, x1] = tread_x_range(k);
  for (const Vec2& c : rect_W.corners()) {
    const Vec3 p = to_stair.apply(Vec3(c.x(), c.y(), 0.0));
    if (p.x() < x0 || p.x() > x1) return false;
    if (k >= 1 && std::abs(p.y()) > width / 2) return false;
  }
  return true;
}

double StaircaseScene::height_at(const Vec2& xy_W) const {
  const Vec3 p = invert(first_riser).apply(Vec3(xy_W.x(), xy_W.y(), 0.0));
  return first_riser.apply(Vec3(p.x(), p.y(), level_height(level_at(p.x(), p.y())))).z();
}

}  // namespace polymap
