#pragma once

// Deterministic desk-scale world: box staircase, depth rendering, noisy
// odometry, kinematic plan execution and the scenario loop that ties the
// pipeline together.

#include "polymap/depth_pipeline.hpp"
#include "polymap/foothold.hpp"
#include "polymap/footstep_planner.hpp"
#include "polymap/geometry.hpp"
#include "polymap/io.hpp"
#include "polymap/state_estimator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace polymap {

using Rng = std::mt19937_64;

/// Independent generator for a named purpose ("render", "odometry",
/// "actuation", "lio", ...). Changing the draws of one stream leaves the
/// others untouched.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

// ---------------------------------------------------------------------------

struct Box {
  Vec3 lo;
  Vec3 hi;
};

/// Ray hit against a set of boxes: parameter t along the (unnormalised)
/// direction, box index and face (0..5 = -x, +x, -y, +y, -z, +z).
struct RayHit {
  double t = 0.0;
  int box = -1;
  int face = -1;
};

/// Slab test; returns the nearest entry hit with t > t_min.
std::optional<RayHit> ray_box(const Vec3& origin, const Vec3& dir, const Box& box, double t_min = 1e-9);

struct Scene {
  std::vector<Box> boxes;  // in the scene frame
  Pose pose;               // scene frame -> world

  std::optional<RayHit> cast(const Vec3& origin_W, const Vec3& dir_W) const;
};

/// Straight staircase rising along +x of its frame. The first riser is the
/// plane x = 0; step k (1-based) has its top at z = k * rise and its front
/// edge at x = (k - 1) * tread; the top step carries an extra `landing`
/// depth. A nosing protrudes the front edge of every step by `nosing`.
struct StaircaseScene {
  int n_steps = 4;
  double rise = 0.13;
  double tread = 0.28;
  double width = 1.0;
  double landing = 0.6;
  double nosing = 0.0;
  double nosing_thickness = 0.03;
  double floor_extent = 20.0;
  Pose first_riser;  // staircase frame -> world

  void validate() const;
  Scene build() const;

  /// Height of the top surface of level k (0 = floor).
  double level_height(int k) const { return k * rise; }
  /// Usable XY extent of level k in the staircase frame: x range
  /// [x0, x1] and y range [-width/2, width/2] for k >= 1. The next step's
  /// nosing shadows the back of a tread.
  std::pair<double, double> tread_x_range(int k) const;
  /// Level whose top surface is under the staircase-frame XY point.
  int level_at(double x, double y) const;
  /// True if the world-frame rectangle lies on the usable area of level k.
  bool rectangle_on_level(const OrientedRectangle& rect_W, int k) const;
  /// Surface height under a world XY point.
  double height_at(const Vec2& xy_W) const;
};

struct NoiseModel {
  double depth_sigma = 0.0;
  double depth_dropout = 0.0;
  double drift_rate = 0.0;       // m/s, along a random unit direction
  double lio_sigma = 0.0;        // m, per axis
  double lio_sigma_rot = 0.0;    // rad, per axis
  double actuation_sigma = 0.0;  // m, per horizontal axis
  double proprio_sigma = 0.0;    // m (and m/s) on the synthesized observations
  std::uint64_t seed = 0;

  void validate() const;
};

/// Ground-truth label per pixel: box * 6 + face, or -1 for a miss.
struct RenderResult {
  DepthImage depth;
  std::vector<int> label;
};

/// Casts one ray per pixel. Depth is the z of the hit in the camera frame;
/// noise is added and dropout applied with the "render" stream of
/// `noise.seed` and the given frame index.
RenderResult render_depth(const Scene& scene, const Pose& camera_pose_W, const CameraIntrinsics& intr,
                          const NoiseModel& noise, std::uint64_t frame = 0);
RenderResult render_depth(const StaircaseScene& scene, const Pose& camera_pose_W, const CameraIntrinsics& intr,
                          const NoiseModel& noise, std::uint64_t frame = 0);

/// Kinematic stream: truth + drift_rate * (t - t0) along a unit direction
/// drawn once per run from the "odometry" stream. LIO stream: truth with iid
/// position and attitude noise from the "lio" stream. Returns
/// {kinematic, lio}; stamps are copied from the truth.
std::pair<std::vector<OdomSample>, std::vector<OdomSample>> simulate_odometry(
    const std::vector<OdomSample>& truth, const NoiseModel& noise);

/// Unit drift direction used by simulate_odometry for this seed.
Vec3 drift_direction(std::uint64_t seed);

/// Straight walk with a lateral sway and a small vertical bounce, sampled
/// at `rate` Hz for `duration` seconds.
std::vector<OdomSample> synthesize_walk(double duration, double rate, double speed = 0.3);

// ---------------------------------------------------------------------------

struct ExecutedStep {
  int index = 0;
  Side side = Side::Left;
  double t_planned = 0.0;
  double t_executed = 0.0;
  Vec3 planned_W = Vec3::Zero();   // target in the estimate frame
  Vec3 intended = Vec3::Zero();    // where the plan meant to go, true world
  Vec3 executed = Vec3::Zero();    // where the foot landed, true world
  double error = 0.0;              // XY distance intended <-> executed, m
  int level = 0;
  bool on_tread = true;
};

/// Kinematic execution: each target is mapped to the true world by
/// `to_true` at execution and by `plan_to_true` at planning, then the
/// landing receives iid Gaussian XY noise from the "actuation" stream.
/// With a scene, each landing is checked against the usable area of the
/// level nearest to the planned height.
std::vector<ExecutedStep> execute_plan(const FootstepPlan& plan, const NoiseModel& noise, Rng& actuation,
                                       const FootGeometry& foot, const StaircaseScene* scene = nullptr,
                                       const Pose& plan_to_true = Pose(), const Pose& to_true = Pose());

/// Desired vs executed swing traces: step, side, t, x_des, z_des, x_exec,
/// z_exec. The executed trace is the desired one with the landing offset
/// blended in linearly over the swing.
void write_tracking_csv(const std::filesystem::path& path, const FootstepPlan& plan,
                        const std::vector<ExecutedStep>& executed);

// ---------------------------------------------------------------------------

enum class PerceptionMode { Continuous, OnReplan };

struct ScenarioConfig {
  StaircaseScene scene;
  NoiseModel noise;
  CameraIntrinsics intrinsics{460.0, 460.0, 320.0, 240.0, 640, 480};
  Pose camera_mount;  // base -> camera
  Pose lidar_mount;   // base -> lidar
  EstimatorParams estimator = EstimatorParams::defaults(0.005);
  FusionParams fusion;
  PolygonMapConfig perception;
  FootholdParams foothold;
  GaitParams gait;
  FootGeometry foot;
  PlannerParams planner;
  double perception_hz = 20.0;
  /// Frames whose torso goals are combined (median) when planning.
  int goal_frames = 5;
  double estimator_hz = 200.0;
  double lio_hz = 50.0;
  PerceptionMode perception_mode = PerceptionMode::Continuous;
  /// SS: the controller holds the plan-time estimate and only integrates
  /// kinematic odometry until the step lands.
  bool inter_plan_drift = true;
  double settle_time = 0.5;      // standing time before the first plan
  double start_clearance = 0.12; // toe-to-first-riser distance at start
  double torso_margin = 0.02;    // foot heel clearance from the tread front
  bool record_traces = true;

  /// Camera 1.2 m above the sole, pitched 60 degrees down.
  static ScenarioConfig defaults();
  void validate() const;
};

ScenarioConfig scenario_from_json(const Json& j);
Json to_json(const ScenarioConfig& cfg);

struct TrackingSample {
  double t = 0.0;
  Vec3 error = Vec3::Zero();  // fused - truth, base position
};

struct RunReport {
  std::string status = "ok";  // ok | fall | stall
  std::string message;
  double T_total = 0.0;
  int steps_planned = 0;
  int steps_completed = 0;
  int levels_completed = 0;
  bool all_on_tread = true;
  double e_m_mm = 0.0;
  std::vector<double> step_errors_mm;
  std::vector<TrackingSample> tracking;
  std::vector<ExecutedStep> executed;
  FootstepPlan plan;  // all executed plan steps, concatenated

  // Wall-clock measurements; excluded from the deterministic part.
  std::size_t frames = 0;
  double perception_seconds = 0.0;
  double frame_seconds_max = 0.0;
  double detection_hz_mean() const;
  double detection_hz_min() const;

  /// Report without wall-clock fields (byte-identical across reruns).
  Json deterministic_json() const;
  Json to_json() const;
};

/// True base pose at the start: standing on the floor, toes
/// start_clearance short of the first riser, facing up the stairs.
Pose start_base_pose(const ScenarioConfig& cfg);

/// Torso goal for the level of a foothold candidate. Along the heading the
/// heels clear the front of the tread polygon under p* by `margin` (capped
/// at the polygon middle); across it the torso stays between the feet.
TorsoPose level_torso_goal(const std::vector<PolygonSegment>& polygons, const FootholdRegion& region,
                           const Pose& base_pose, const Vec3& left, const Vec3& right, const FootGeometry& foot,
                           const GaitParams& g, double margin);

/// Throws ValidationError for an invalid config (exit code 2 in the CLI).
RunReport run_scenario(const ScenarioConfig& cfg);

}  // namespace polymap
