#pragma once

// Torso poses + foothold regions -> timed, collision-checked footsteps with
// sampled swing profiles.

#include "polymap/foothold.hpp"
#include "polymap/geometry.hpp"
#include "polymap/io.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace polymap {

enum class GaitMode { DS, SS };
enum class Side { Left, Right };

std::string_view to_string(GaitMode m);
GaitMode gait_mode_from_string(std::string_view s);
std::string_view to_string(Side s);
inline Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

struct TorsoPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double phi = 0.0;  // yaw

  Vec3 position() const { return {x, y, z}; }
  std::array<double, 4> as_array() const { return {x, y, z, phi}; }
};

struct GaitParams {
  double y_b = 0.1;     // lateral foot offset
  double z_t = 0.8;     // torso height above the sole
  double z_max = 0.18;  // swing apex above the start height
  double t_lift = 0.4;
  double t_land = 0.4;
  double dt = 0.01;           // plan discretisation
  double stance_time = 0.4;   // pause between steps
  GaitMode mode = GaitMode::DS;

  /// Swing duration T = t_lift + t_land; also the x interpolation period.
  double swing_time() const { return t_lift + t_land; }
  double t_step() const { return swing_time(); }
  /// Ticks from one step start to the next.
  long step_ticks() const;
  void validate() const;
};

/// p_f = p_t + Rz(phi) [0, +-y_b, -z_t]; + for the left foot.
Vec3 foot_from_torso(const TorsoPose& p_t, Side side, const GaitParams& g);

struct SwingSample {
  double t = 0.0;  // since the step start
  double x = 0.0;
  double z = 0.0;  // above the start height
};

/// Swing at time t in [0, T]. Lift: z = z_max sin(pi t / (2 t_lift)).
/// Landing: z = z0 + (z_max - z0) cos(pi (t - t_lift) / (2 t_land)).
/// x moves linearly over t_step = T. Throws std::out_of_range outside [0, T].
SwingSample swing_profile(double t, double x_start, double x_end, double z0, const GaitParams& g);

/// Samples at k * dt, plus t_lift and T when they are not on that grid.
std::vector<SwingSample> sample_swing(double x_start, double x_end, double z0, const GaitParams& g);

struct OrientedRectangle {
  Vec2 center = Vec2::Zero();
  double w = 0.0;  // extent along the heading
  double h = 0.0;  // extent across the heading
  double theta = 0.0;

  void validate() const;
  std::array<Vec2, 4> corners() const;
  /// Closed containment.
  bool contains(const Vec2& p, double eps = 0.0) const;
};

/// Separating-axis test over the four edge normals. Touching rectangles
/// intersect.
bool rect_intersect(const OrientedRectangle& a, const OrientedRectangle& b);

struct FootGeometry {
  double length = 0.26;
  double width = 0.096;
};

OrientedRectangle foot_rectangle(const Vec3& p_f, double yaw, const FootGeometry& foot);

struct FootStep {
  int index = 0;
  long tick = 0;
  double t = 0.0;  // tick * dt
  Side side = Side::Left;
  Vec3 p_start = Vec3::Zero();
  Vec3 p_f = Vec3::Zero();
  double yaw = 0.0;
  TorsoPose p_t;
  std::vector<SwingSample> swing;
};

enum class PlanStatus { Ok, Truncated, NoFootholds };
std::string_view to_string(PlanStatus s);

struct FootstepPlan {
  std::vector<FootStep> steps;
  PlanStatus status = PlanStatus::Ok;
  std::string message;
  int rescales = 0;
};

/// Where the feet are when planning starts.
struct StanceState {
  Vec3 left = Vec3::Zero();
  Vec3 right = Vec3::Zero();
  double yaw = 0.0;
  Side next_side = Side::Left;
  long start_tick = 0;
};

struct PlannerParams {
  double snap_radius = 0.05;
  double snap_pitch = 0.005;
  /// The foot rectangle may overhang the support cells by this much on
  /// every side. Perceived treads lose up to one cell per edge to the grid.
  double containment_tolerance = 0.015;
  /// Stride factors tried after the nominal stride fails.
  std::vector<double> rescales{0.75, 0.5, 0.25};
  /// SS only: bring the trailing foot onto the last level at the end.
  bool ss_closing_step = true;
};

/// One torso pose per stair level. DS emits two steps per level (both feet
/// on it), SS one step per level plus a closing step for the trailing foot.
/// `footholds[k]` supplies the support for level k; nullopt plans on open
/// floor at the nominal positions. A foot target must keep the whole foot
/// rectangle (less containment_tolerance per side) on support cells of the
/// candidate layer, put its centre on an
/// eroded cell, stay within snap_radius of nominal, and not touch the other
/// foot. A level that fails at every stride factor truncates the plan.
FootstepPlan plan_steps(const std::vector<TorsoPose>& torso_path,
                        const std::optional<std::vector<FootholdRegion>>& footholds, const FootGeometry& foot,
                        const GaitParams& g, const StanceState& start, const PlannerParams& pp = {});

Json to_json(const FootStep& s);
void write_plan_jsonl(const std::filesystem::path& path, const FootstepPlan& plan);

}  // namespace polymap
