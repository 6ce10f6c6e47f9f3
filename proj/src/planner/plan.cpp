#include "polymap/footstep_planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace polymap {
namespace {

struct Offset {
  double dx, dy, r2;
};

std::vector<Offset> snap_offsets(const PlannerParams& pp) {
  std::vector<Offset> out;
  const int n = static_cast<int>(std::floor(pp.snap_radius / pp.snap_pitch + 1e-9));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      const double dx = i * pp.snap_pitch, dy = j * pp.snap_pitch;
      const double r2 = dx * dx + dy * dy;
      if (r2 <= pp.snap_radius * pp.snap_radius + 1e-12) out.push_back({dx, dy, r2});
    }
  }
  std::sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) {
    if (a.r2 != b.r2) return a.r2 < b.r2;
    if (a.dx != b.dx) return a.dx < b.dx;
    return a.dy < b.dy;
  });
  return out;
}

// Cell lookups for one foothold region, with the base transform cached.
class RegionView {
 public:
  RegionView(const FootholdRegion& r, double tolerance)
      : r_(r), tol_(tolerance), to_base_(invert(r.base_pose)), layer_(r.layer()), z_world_(r.to_world(r.candidate.p_star).z()) {}

  double z_world() const { return z_world_; }

  bool covered(const Vec2& xy, const GridCloud& g) const {
    const Vec3 b = to_base_.apply(Vec3(xy.x(), xy.y(), z_world_));
    const auto it = g.cells.find(g.index_of(b.x(), b.y()));
    return it != g.cells.end() && it->second.layer == layer_;
  }

  bool supports(const OrientedRectangle& rect) const {
    if (!covered(rect.center, r_.eroded)) return false;
    const double pitch = 0.5 * r_.support.g_res;
    const double lw = std::max(0.0, rect.w - 2.0 * tol_), lh = std::max(0.0, rect.h - 2.0 * tol_);
    const int nl = std::max(1, static_cast<int>(std::ceil(lw / pitch)));
    const int nw = std::max(1, static_cast<int>(std::ceil(lh / pitch)));
    const double c = std::cos(rect.theta), s = std::sin(rect.theta);
    for (int a = 0; a <= nl; ++a) {
      const double lx = -lw / 2 + lw * a / nl;
      for (int b = 0; b <= nw; ++b) {
        const double ly = -lh / 2 + lh * b / nw;
        const Vec2 p = rect.center + Vec2(c * lx - s * ly, s * lx + c * ly);
        if (!covered(p, r_.support)) return false;
      }
    }
    return true;
  }

 private:
  const FootholdRegion& r_;
  double tol_;
  Pose to_base_;
  int layer_;
  double z_world_;
};

TorsoPose lerp(const TorsoPose& a, const TorsoPose& b, double s) {
  return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.z + s * (b.z - a.z),
          wrap_angle(a.phi + s * wrap_angle(b.phi - a.phi))};
}

struct Feet {
  Vec3 pos[2];
  double yaw[2];
  Vec3& operator[](Side s) { return pos[s == Side::Left ? 0 : 1]; }
  const Vec3& operator[](Side s) const { return pos[s == Side::Left ? 0 : 1]; }
  double& heading(Side s) { return yaw[s == Side::Left ? 0 : 1]; }
  double heading(Side s) const { return yaw[s == Side::Left ? 0 : 1]; }
};

struct Placement {
  Side side;
  Vec3 p_f;
};

std::optional<Vec3> place(const TorsoPose& target, Side side, const Feet& feet, const RegionView* region,
                          const FootGeometry& foot, const GaitParams& g, const std::vector<Offset>& offsets) {
  const Vec3 nominal = foot_from_torso(target, side, g);
  const OrientedRectangle other_rect = foot_rectangle(feet[other(side)], feet.heading(other(side)), foot);
  if (!region) {
    if (rect_intersect(foot_rectangle(nominal, target.phi, foot), other_rect)) return std::nullopt;
    return nominal;
  }
  for (const Offset& o : offsets) {
    const Vec3 p(nominal.x() + o.dx, nominal.y() + o.dy, region->z_world());
    const OrientedRectangle rect = foot_rectangle(p, target.phi, foot);
    if (rect_intersect(rect, other_rect)) continue;
    if (region->supports(rect)) return p;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::Ok: return "ok";
    case PlanStatus::Truncated: return "truncated";
    case PlanStatus::NoFootholds: return "no footholds";
  }
  return "?";
}

FootstepPlan plan_steps(const std::vector<TorsoPose>& torso_path,
                        const std::optional<std::vector<FootholdRegion>>& footholds, const FootGeometry& foot,
                        const GaitParams& g, const StanceState& start, const PlannerParams& pp) {
  g.validate();
  if (!(pp.containment_tolerance >= 0.0)) throw ValidationError("plan_steps: containment_tolerance must be >= 0");
  if (torso_path.empty()) throw ValidationError("plan_steps: empty torso path");
  if (!(foot.length > 0.0 && foot.width > 0.0)) throw ValidationError("plan_steps: foot size must be positive");

  FootstepPlan plan;
  if (footholds && footholds->empty()) {
    plan.status = PlanStatus::NoFootholds;
    plan.message = "no footholds";
    return plan;
  }
  const std::vector<Offset> offsets = snap_offsets(pp);
  std::vector<RegionView> views;
  if (footholds) {
    views.reserve(footholds->size());
    for (const FootholdRegion& r : *footholds) views.emplace_back(r, pp.containment_tolerance);
  }

  Feet feet{{start.left, start.right}, {start.yaw, start.yaw}};
  const double zs = std::min(start.left.z(), start.right.z());
  TorsoPose prev{0.5 * (start.left.x() + start.right.x()), 0.5 * (start.left.y() + start.right.y()), zs + g.z_t,
                 start.yaw};
  Side side = start.next_side;
  long tick = start.start_tick;
  const long step_ticks = g.step_ticks();
  const std::size_t levels = footholds ? std::min(torso_path.size(), footholds->size()) : torso_path.size();

  auto emit = [&](const Placement& pl, const TorsoPose& target) {
    FootStep s;
    s.index = static_cast<int>(plan.steps.size());
    s.tick = tick;
    s.t = static_cast<double>(tick) * g.dt;
    s.side = pl.side;
    s.p_start = feet[pl.side];
    s.p_f = pl.p_f;
    s.yaw = target.phi;
    s.swing = sample_swing(s.p_start.x(), s.p_f.x(), s.p_f.z() - s.p_start.z(), g);
    feet[pl.side] = pl.p_f;
    feet.heading(pl.side) = target.phi;
    s.p_t = {0.5 * (feet[Side::Left].x() + feet[Side::Right].x()), 0.5 * (feet[Side::Left].y() + feet[Side::Right].y()),
             0.5 * (feet[Side::Left].z() + feet[Side::Right].z()) + g.z_t, target.phi};
    plan.steps.push_back(std::move(s));
    tick += step_ticks;
  };

  // Tries the nominal stride and then the shorter ones; on success commits
  // the placements for this level.
  auto plan_level = [&](const TorsoPose& goal, const RegionView* region, const std::vector<Side>& sides) {
    std::vector<double> factors{1.0};
    factors.insert(factors.end(), pp.rescales.begin(), pp.rescales.end());
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const TorsoPose target = lerp(prev, goal, factors[f]);
      Feet trial = feet;
      std::vector<Placement> placed;
      for (Side sd : sides) {
        const auto p = place(target, sd, trial, region, foot, g, offsets);
        if (!p) break;
        trial[sd] = *p;
        trial.heading(sd) = target.phi;
        placed.push_back({sd, *p});
      }
      if (placed.size() != sides.size()) continue;
      if (f > 0) ++plan.rescales;
      for (const Placement& pl : placed) emit(pl, target);
      prev = target;
      return true;
    }
    return false;
  };

  for (std::size_t k = 0; k < levels; ++k) {
    const RegionView* region = footholds ? &views[k] : nullptr;
    const std::vector<Side> sides =
        g.mode == GaitMode::DS ? std::vector<Side>{side, other(side)} : std::vector<Side>{side};
    if (!plan_level(torso_path[k], region, sides)) {
      plan.status = PlanStatus::Truncated;
      plan.message = "no feasible placement for level " + std::to_string(k);
      return plan;
    }
    if (g.mode == GaitMode::SS) side = other(side);
  }
  if (g.mode == GaitMode::SS && pp.ss_closing_step && levels > 0) {
    const RegionView* region = footholds ? &views[levels - 1] : nullptr;
    const std::optional<Vec3> p = place(prev, side, feet, region, foot, g, offsets);
    if (!p) {
      plan.status = PlanStatus::Truncated;
      plan.message = "no feasible closing step";
      return plan;
    }
    emit({side, *p}, prev);
  }
  return plan;
}

Json to_json(const FootStep& s) {
  Json swing = Json::array();
  for (const SwingSample& q : s.swing) swing.push_back(Json::array({q.t, q.x, q.z}));
  const auto pt = s.p_t.as_array();
  return Json{{"i", s.index},
              {"t", s.t},
              {"side", std::string(to_string(s.side))},
              {"p_f", to_json(s.p_f)},
              {"p_t", Json::array({pt[0], pt[1], pt[2], pt[3]})},
              {"swing", swing}};
}

void write_plan_jsonl(const std::filesystem::path& path, const FootstepPlan& plan) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const FootStep& s : plan.steps) f << to_json(s).dump() << '\n';
}

}  // namespace polymap
