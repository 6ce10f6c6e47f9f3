#pragma once

#include "polymap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace support {

using namespace polymap;

/// Optical frame pitched down by `pitch_deg` from the base heading.
inline Rotation pitched_camera(double pitch_deg) {
  const double p = pitch_deg * 3.14159265358979323846 / 180.0;
  const Vec3 zc(std::cos(p), 0.0, -std::sin(p));
  const Vec3 xc(0.0, -1.0, 0.0);
  Mat3 m;
  m.col(0) = xc;
  m.col(1) = zc.cross(xc);
  m.col(2) = zc;
  return Rotation::from_matrix(m);
}

/// Camera 1.2 m above the floor at the scenario start, pitched 45 degrees:
/// every tread of the default staircase is in view.
inline Pose staircase_camera(const ScenarioConfig& cfg, double pitch_deg = 45.0) {
  const Pose base = start_base_pose(cfg);
  return compose(base, Pose{pitched_camera(pitch_deg), Vec3(0.0, 0.0, 1.2 - cfg.gait.z_t)});
}

/// Configuration with every noise source off.
inline ScenarioConfig noiseless() {
  ScenarioConfig c = ScenarioConfig::defaults();
  c.noise = NoiseModel{};
  return c;
}

/// Ground-truth tread polygons of the staircase, floor patch included.
inline std::vector<PolygonSegment> true_treads(const StaircaseScene& sc, double floor_from = -1.0) {
  std::vector<PolygonSegment> out;
  for (int k = 0; k <= sc.n_steps; ++k) {
    auto [x0, x1] = sc.tread_x_range(k);
    if (k == 0) x0 = floor_from;
    const double z = sc.level_height(k);
    PolygonSegment s;
    for (const Vec2& c : {Vec2(x0, -sc.width / 2), Vec2(x1, -sc.width / 2), Vec2(x1, sc.width / 2), Vec2(x0, sc.width / 2)}) {
      s.vertices.push_back(sc.first_riser.apply(Vec3(c.x(), c.y(), z)));
    }
    s.plane.normal = Vec3::UnitZ();
    s.plane.d = -s.vertices[0].z();
    s.tread = true;
    out.push_back(s);
  }
  return out;
}

struct RandomPlan {
  GaitParams gait;
  StanceState start;
  std::vector<TorsoPose> path;
  FootstepPlan plan;
};

/// Open-floor plan with random gait timing and a random torso path that
/// climbs, descends and turns. No swing has to rise above its apex.
inline RandomPlan random_plan(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double a, double b) { return a + (b - a) * u(rng); };
  RandomPlan r;
  GaitParams& g = r.gait;
  const double dts[] = {0.005, 0.01, 0.02, 0.03};
  g.dt = dts[static_cast<int>(u(rng) * 4) % 4];
  g.t_lift = in(0.2, 0.6);
  g.t_land = in(0.2, 0.6);
  g.z_max = in(0.05, 0.3);
  g.stance_time = in(0.0, 0.5);
  g.mode = u(rng) < 0.5 ? GaitMode::DS : GaitMode::SS;
  TorsoPose t{in(-1, 1), in(-1, 1), g.z_t + in(-0.5, 0.5), in(-3, 3)};
  r.start.left = foot_from_torso(t, Side::Left, g);
  r.start.right = foot_from_torso(t, Side::Right, g);
  r.start.yaw = t.phi;
  r.start.next_side = u(rng) < 0.5 ? Side::Left : Side::Right;
  r.start.start_tick = static_cast<long>(in(0, 100));
  const int levels = 1 + static_cast<int>(u(rng) * 6);
  for (int k = 0; k < levels; ++k) {
    const double stride = in(0.1, 0.35), lateral = in(-0.05, 0.05);
    t.x += stride * std::cos(t.phi) - lateral * std::sin(t.phi);
    t.y += stride * std::sin(t.phi) + lateral * std::cos(t.phi);
    // Climbs stay below the apex: an SS foot can rise two levels in one swing.
    t.z += in(-0.15, std::min(0.15, 0.5 * g.z_max));
    t.phi = wrap_angle(t.phi + in(-0.3, 0.3));
    r.path.push_back(t);
  }
  r.plan = plan_steps(r.path, std::nullopt, FootGeometry{}, g, r.start);
  return r;
}

/// Checks the plan invariants; returns an empty string or the first failure.
inline std::string plan_violation(const RandomPlan& r, const FootGeometry& foot = {}) {
  const GaitParams& g = r.gait;
  const double T = g.swing_time();
  Vec3 pos[2] = {r.start.left, r.start.right};
  double yaw[2] = {r.start.yaw, r.start.yaw};
  long prev_tick = r.start.start_tick - g.step_ticks();
  for (const FootStep& s : r.plan.steps) {
    const int me = s.side == Side::Left ? 0 : 1, them = 1 - me;
    const std::string at = "step " + std::to_string(s.index) + ": ";
    if (s.tick != prev_tick + g.step_ticks()) return at + "tick off the step grid";
    if (std::abs(s.t - s.tick * g.dt) > 1e-9) return at + "stamp not tick * dt";
    prev_tick = s.tick;
    if ((s.p_start - pos[me]).norm() > 1e-12) return at + "swing does not start at the foot";
    if (s.swing.empty()) return at + "no swing samples";
    double peak = -1e300;
    for (std::size_t i = 0; i < s.swing.size(); ++i) {
      const double ts = s.swing[i].t;
      const double k = ts / g.dt;
      const bool on_grid = std::abs(k - std::round(k)) < 1e-9 || ts == g.t_lift || ts == T;
      if (!on_grid) return at + "swing sample off the grid";
      if (i > 0 && !(ts > s.swing[i - 1].t)) return at + "swing samples not increasing";
      peak = std::max(peak, s.swing[i].z);
    }
    const double z0 = s.p_f.z() - s.p_start.z();
    if (std::abs(peak - g.z_max) > 1e-12 * std::max(1.0, g.z_max)) return at + "swing peak is not z_max";
    if (s.swing.back().t != T || s.swing.back().z != z0) return at + "swing does not end at z0 at T";
    if (std::abs(s.swing.back().x - s.p_f.x()) > 1e-12) return at + "swing does not end at the target x";
    if (rect_intersect(foot_rectangle(s.p_f, s.yaw, foot), foot_rectangle(pos[them], yaw[them], foot))) {
      return at + "foot rectangles overlap";
    }
    pos[me] = s.p_f;
    yaw[me] = s.yaw;
  }
  if (g.mode == GaitMode::DS) {
    for (std::size_t i = 0; i + 1 < r.plan.steps.size(); i += 2) {
      if (r.plan.steps[i].p_f.z() != r.plan.steps[i + 1].p_f.z()) return "DS level with unequal foot heights";
    }
  }
  return {};
}

}  // namespace support
