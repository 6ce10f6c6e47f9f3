#include "polymap/sim.hpp"

#include <cmath>
#include <set>

namespace polymap {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Reads optional keys of one JSON object and rejects keys nobody asked for.
class Block {
 public:
  Block(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Block child(const char* key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return Block(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  const Json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Rotation camera_rotation(double pitch_deg) {
  // Optical axes in the base frame (x forward, y left, z up): z_c points
  // forward and down, x_c to the right, y_c = z_c x x_c.
  const double p = pitch_deg * kPi / 180.0;
  const Vec3 zc(std::cos(p), 0.0, -std::sin(p));
  const Vec3 xc(0.0, -1.0, 0.0);
  Mat3 m;
  m.col(0) = xc;
  m.col(1) = zc.cross(xc);
  m.col(2) = zc;
  return Rotation::from_matrix(m);
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig c;
  c.noise.depth_sigma = 0.005;
  c.noise.depth_dropout = 0.05;
  c.noise.drift_rate = 0.01;
  c.noise.lio_sigma = 0.003;
  c.noise.lio_sigma_rot = 0.001;
  c.noise.actuation_sigma = 0.003;
  c.noise.proprio_sigma = 0.001;
  c.noise.seed = 1;
  c.camera_mount = Pose{camera_rotation(60.0), Vec3(0.0, 0.0, 0.4)};
  c.lidar_mount = Pose::from_translation(Vec3(0.05, 0.0, 0.3));
  return c;
}

void ScenarioConfig::validate() const {
  scene.validate();
  noise.validate();
  intrinsics.validate();
  estimator.validate();
  fusion.validate();
  perception.diffusion.validate();
  perception.ransac.validate();
  foothold.validate();
  gait.validate();
  if (!(foot.length > 0.0 && foot.width > 0.0)) throw ConfigError("foot: length and width must be positive");
  if (!(perception_hz > 0.0 && estimator_hz > 0.0 && lio_hz > 0.0)) throw ConfigError("rates must be positive");
  if (lio_hz > estimator_hz || perception_hz > estimator_hz) {
    throw ConfigError("lio and perception rates must not exceed the estimator rate");
  }
  if (std::abs(estimator.dt * estimator_hz - 1.0) > 1e-9) throw ConfigError("estimator dt must equal 1 / rate_hz");
  if (goal_frames < 1) throw ConfigError("perception.goal_frames must be >= 1");
  if (!(settle_time >= 0.0 && start_clearance >= 0.0 && torso_margin >= 0.0)) {
    throw ConfigError("settle_time, start_clearance and torso_margin must be >= 0");
  }
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig c = ScenarioConfig::defaults();
  Block root(j, "config");
  int schema = 0;
  root.get("schema", schema);
  if (schema != 1) throw ConfigError("config: schema must be 1");
  root.get("seed", c.noise.seed);

  {
    Block b = root.child("scene");
    b.get("n_steps", c.scene.n_steps);
    b.get("rise", c.scene.rise);
    b.get("tread", c.scene.tread);
    b.get("width", c.scene.width);
    b.get("landing", c.scene.landing);
    b.get("nosing", c.scene.nosing);
    b.get("nosing_thickness", c.scene.nosing_thickness);
    if (b.has("pose")) c.scene.first_riser = pose_from_json(b.raw("pose"));
    b.finish();
  }
  {
    Block b = root.child("noise");
    b.get("depth_sigma", c.noise.depth_sigma);
    b.get("depth_dropout", c.noise.depth_dropout);
    b.get("drift_rate", c.noise.drift_rate);
    b.get("lio_sigma", c.noise.lio_sigma);
    b.get("lio_sigma_rot", c.noise.lio_sigma_rot);
    b.get("actuation_sigma", c.noise.actuation_sigma);
    b.get("proprio_sigma", c.noise.proprio_sigma);
    b.finish();
  }
  {
    Block b = root.child("camera");
    if (b.has("intrinsics")) c.intrinsics = intrinsics_from_json(b.raw("intrinsics"));
    double pitch = 60.0, height = 0.4, forward = 0.0;
    b.get("pitch_deg", pitch);
    b.get("height", height);
    b.get("forward", forward);
    c.camera_mount = Pose{camera_rotation(pitch), Vec3(forward, 0.0, height)};
    b.finish();
  }
  {
    Block b = root.child("lidar");
    if (b.has("mount")) c.lidar_mount = pose_from_json(b.raw("mount"));
    b.finish();
  }
  {
    Block b = root.child("estimator");
    b.get("rate_hz", c.estimator_hz);
    double qp = 1e-4, qv = 1e-3, qc = 1e-6, r = 1e-4;
    b.get("q_position", qp);
    b.get("q_velocity", qv);
    b.get("q_contact", qc);
    b.get("r", r);
    c.estimator = EstimatorParams::defaults(1.0 / c.estimator_hz);
    for (int i = 0; i < 3; ++i) {
      c.estimator.Q(i, i) = qp;
      c.estimator.Q(3 + i, 3 + i) = qv;
    }
    for (int i = 6; i < kStateDim; ++i) c.estimator.Q(i, i) = qc;
    c.estimator.R = ObservationCovariance::Identity() * r;
    b.get("swing_inflation", c.estimator.swing_inflation);
    b.get("swing_contact_variance", c.estimator.swing_contact_variance);
    b.finish();
  }
  {
    Block b = root.child("fusion");
    b.get("tau", c.fusion.tau);
    b.get("lio_hz", c.lio_hz);
    b.finish();
  }
  {
    Block b = root.child("perception");
    b.get("rate_hz", c.perception_hz);
    b.get("goal_frames", c.goal_frames);
    std::string mode = "continuous";
    b.get("mode", mode);
    if (mode == "continuous") {
      c.perception_mode = PerceptionMode::Continuous;
    } else if (mode == "on_replan") {
      c.perception_mode = PerceptionMode::OnReplan;
    } else {
      throw ConfigError("perception.mode must be 'continuous' or 'on_replan'");
    }
    PolygonMapConfig& p = c.perception;
    b.get("lambda", p.diffusion.lambda);
    b.get("iterations", p.diffusion.iterations);
    b.get("kappa", p.diffusion.kappa);
    b.get("canny_low", p.regions.canny_low);
    b.get("canny_high", p.regions.canny_high);
    b.get("min_region_pixels", p.regions.min_region_pixels);
    b.get("ransac_iterations", p.ransac.max_iterations);
    b.get("inlier_threshold", p.ransac.inlier_threshold);
    b.get("min_inliers", p.ransac.min_inliers);
    b.get("max_tilt_deg", p.max_tilt_deg);
    b.get("simplify_tolerance", p.simplify_tolerance);
    b.get("max_fit_points", p.max_fit_points);
    b.finish();
  }
  {
    Block b = root.child("foothold");
    b.get("g_res", c.foothold.g_res);
    b.get("g_range", c.foothold.g_range);
    b.get("g_z", c.foothold.g_z);
    b.get("h_layer", c.foothold.h_layer);
    b.get("n_erosion", c.foothold.n_erosion);
    b.get("delta_foot", c.foothold.delta_foot);
    b.get("supersample", c.foothold.supersample);
    b.finish();
  }
  {
    Block b = root.child("gait");
    std::string mode = std::string(to_string(c.gait.mode));
    b.get("mode", mode);
    c.gait.mode = gait_mode_from_string(mode);
    b.get("y_b", c.gait.y_b);
    b.get("z_t", c.gait.z_t);
    b.get("z_max", c.gait.z_max);
    b.get("t_lift", c.gait.t_lift);
    b.get("t_land", c.gait.t_land);
    b.get("dt", c.gait.dt);
    b.get("stance_time", c.gait.stance_time);
    b.get("inter_plan_drift", c.inter_plan_drift);
    b.get("foot_length", c.foot.length);
    b.get("foot_width", c.foot.width);
    b.get("snap_radius", c.planner.snap_radius);
    b.get("snap_pitch", c.planner.snap_pitch);
    b.get("containment_tolerance", c.planner.containment_tolerance);
    b.get("rescales", c.planner.rescales);
    b.finish();
  }
  root.get("settle_time", c.settle_time);
  root.get("start_clearance", c.start_clearance);
  root.get("torso_margin", c.torso_margin);
  root.get("record_traces", c.record_traces);
  root.finish();
  c.validate();
  return c;
}

Json to_json(const ScenarioConfig& c) {
  const Vec3 zc = c.camera_mount.rotation.matrix().col(2);
  const double pitch = std::atan2(-zc.z(), zc.x()) * 180.0 / kPi;
  return Json{
      {"schema", 1},
      {"seed", c.noise.seed},
      {"scene",
       {{"n_steps", c.scene.n_steps}, {"rise", c.scene.rise}, {"tread", c.scene.tread}, {"width", c.scene.width},
        {"landing", c.scene.landing}, {"nosing", c.scene.nosing}, {"nosing_thickness", c.scene.nosing_thickness},
        {"pose", to_json(c.scene.first_riser)}}},
      {"noise",
       {{"depth_sigma", c.noise.depth_sigma}, {"depth_dropout", c.noise.depth_dropout},
        {"drift_rate", c.noise.drift_rate}, {"lio_sigma", c.noise.lio_sigma},
        {"lio_sigma_rot", c.noise.lio_sigma_rot}, {"actuation_sigma", c.noise.actuation_sigma},
        {"proprio_sigma", c.noise.proprio_sigma}}},
      {"camera",
       {{"intrinsics", to_json(c.intrinsics)}, {"pitch_deg", pitch}, {"height", c.camera_mount.translation.z()},
        {"forward", c.camera_mount.translation.x()}}},
      {"lidar", {{"mount", to_json(c.lidar_mount)}}},
      {"estimator",
       {{"rate_hz", c.estimator_hz}, {"q_position", c.estimator.Q(0, 0)}, {"q_velocity", c.estimator.Q(3, 3)},
        {"q_contact", c.estimator.Q(6, 6)}, {"r", c.estimator.R(0, 0)},
        {"swing_inflation", c.estimator.swing_inflation},
        {"swing_contact_variance", c.estimator.swing_contact_variance}}},
      {"fusion", {{"tau", c.fusion.tau}, {"lio_hz", c.lio_hz}}},
      {"perception",
       {{"rate_hz", c.perception_hz}, {"goal_frames", c.goal_frames},
        {"mode", c.perception_mode == PerceptionMode::Continuous ? "continuous" : "on_replan"},
        {"lambda", c.perception.diffusion.lambda}, {"iterations", c.perception.diffusion.iterations},
        {"kappa", c.perception.diffusion.kappa}, {"canny_low", c.perception.regions.canny_low},
        {"canny_high", c.perception.regions.canny_high},
        {"min_region_pixels", c.perception.regions.min_region_pixels},
        {"ransac_iterations", c.perception.ransac.max_iterations},
        {"inlier_threshold", c.perception.ransac.inlier_threshold},
        {"min_inliers", c.perception.ransac.min_inliers}, {"max_tilt_deg", c.perception.max_tilt_deg},
        {"simplify_tolerance", c.perception.simplify_tolerance},
        {"max_fit_points", c.perception.max_fit_points}}},
      {"foothold",
       {{"g_res", c.foothold.g_res}, {"g_range", c.foothold.g_range}, {"g_z", c.foothold.g_z},
        {"h_layer", c.foothold.h_layer}, {"n_erosion", c.foothold.n_erosion},
        {"delta_foot", c.foothold.delta_foot},
        {"supersample", c.foothold.supersample}}},
      {"gait",
       {{"mode", std::string(to_string(c.gait.mode))}, {"y_b", c.gait.y_b}, {"z_t", c.gait.z_t},
        {"z_max", c.gait.z_max}, {"t_lift", c.gait.t_lift}, {"t_land", c.gait.t_land}, {"dt", c.gait.dt},
        {"stance_time", c.gait.stance_time}, {"inter_plan_drift", c.inter_plan_drift},
        {"foot_length", c.foot.length}, {"foot_width", c.foot.width}, {"snap_radius", c.planner.snap_radius},
        {"snap_pitch", c.planner.snap_pitch},
        {"containment_tolerance", c.planner.containment_tolerance}, {"rescales", c.planner.rescales}}},
      {"settle_time", c.settle_time},
      {"start_clearance", c.start_clearance},
      {"torso_margin", c.torso_margin},
      {"record_traces", c.record_traces}};
}

}  // namespace polymap
