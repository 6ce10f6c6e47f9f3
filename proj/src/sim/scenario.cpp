#include "polymap/sim.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <cmath>

namespace polymap {
namespace {

int side_index(Side s) { return s == Side::Left ? 0 : 1; }

// Toe-left, toe-right, heel-left, heel-right.
std::array<Vec3, 4> foot_corners(const Vec3& c, double yaw, const FootGeometry& f) {
  const Rotation r = Rotation::about_z(yaw);
  return {c + r * Vec3(f.length / 2, f.width / 2, 0), c + r * Vec3(f.length / 2, -f.width / 2, 0),
          c + r * Vec3(-f.length / 2, f.width / 2, 0), c + r * Vec3(-f.length / 2, -f.width / 2, 0)};
}

struct Swing {
  bool active = false;
  Side side = Side::Left;
  long start_tick = 0;
  long swing_ticks = 0;
  Vec3 from = Vec3::Zero();     // true start
  Vec3 target_W = Vec3::Zero(); // planned target, estimate frame
  Vec3 torso_from = Vec3::Zero();
  Vec3 torso_to = Vec3::Zero();
  // Controller frame held from the plan (SS with inter-plan drift).
  bool hold_frame = false;
  Pose fused_at_plan;
  Pose kin_at_plan;
};

class Runner {
 public:
  explicit Runner(const ScenarioConfig& cfg)
      : cfg_(cfg),
        scene_(cfg.scene.build()),
        dt_(1.0 / cfg.estimator_hz),
        drift_dir_(drift_direction(cfg.noise.seed)),
        proprio_rng_(make_stream(cfg.noise.seed, "proprio")),
        lio_rng_(make_stream(cfg.noise.seed, "lio")),
        actuation_rng_(make_stream(cfg.noise.seed, "actuation")),
        fusion_(cfg.fusion),
        kf_(make_filter()) {}

  RunReport run();

 private:
  // ---- truth and estimation --------------------------------------------
  double now() const { return static_cast<double>(tick_) * dt_; }
  Vec3 drift(double t) const { return cfg_.noise.drift_rate * t * drift_dir_; }
  Pose true_base() const { return Pose{Rotation::about_z(yaw_), torso_}; }
  Pose kinematic_pose() const { return Pose{Rotation::about_z(yaw_), kf_.base_position()}; }

  ContactKalmanFilter make_filter();
  void init_truth();
  void step_tick();
  void land(const Pose& ctrl);
  Pose controller_frame() const;

  // ---- perception and planning -----------------------------------------
  void perceive();
  bool plan(Side lead, bool closing, const std::optional<Vec3>& leading_target, long start_plan_tick);
  void execute_step(const FootStep& step);

  const ScenarioConfig& cfg_;
  Scene scene_;
  double dt_;
  Vec3 drift_dir_;
  Rng proprio_rng_, lio_rng_, actuation_rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  ComplementaryFusion fusion_;

  long tick_ = 0;
  double yaw_ = 0.0;
  Vec3 torso_ = Vec3::Zero();
  Vec3 torso_vel_ = Vec3::Zero();
  Vec3 feet_[2];
  std::array<Vec3, kContacts> contacts_drift_{};
  Vec3 swing_prev_ = Vec3::Zero();
  Swing swing_;
  ContactKalmanFilter kf_;

  std::vector<PolygonSegment> polygons_;
  std::deque<std::vector<PolygonSegment>> recent_;  // newest last
  bool have_frame_ = false;
  std::size_t frame_index_ = 0;

  // Pending plan and its plan-time frames.
  FootstepPlan pending_;
  Pose pending_plan_to_true_;
  Pose pending_fused_;
  Pose pending_kin_;
  Vec3 pending_torso_goal_ = Vec3::Zero();

  RunReport report_;
};

ContactKalmanFilter Runner::make_filter() {
  init_truth();
  StateVector x0 = StateVector::Zero();
  x0.segment<3>(state_index::kPosition) = torso_;
  for (int i = 0; i < kContacts; ++i) x0.segment<3>(state_index::contact(i)) = contacts_drift_[i];
  return ContactKalmanFilter(cfg_.estimator, x0, StateCovariance::Identity() * 1e-6);
}

void Runner::init_truth() {
  const Pose base = start_base_pose(cfg_);
  yaw_ = base.rotation.yaw();
  torso_ = base.translation;
  feet_[0] = base.apply(Vec3(0.0, cfg_.gait.y_b, -cfg_.gait.z_t));
  feet_[1] = base.apply(Vec3(0.0, -cfg_.gait.y_b, -cfg_.gait.z_t));
  for (int f = 0; f < 2; ++f) {
    const auto c = foot_corners(feet_[f], yaw_, cfg_.foot);
    for (int k = 0; k < 4; ++k) contacts_drift_[4 * f + k] = c[k];
  }
}

Pose Runner::controller_frame() const {
  if (swing_.hold_frame) {
    return compose(swing_.fused_at_plan, compose(invert(swing_.kin_at_plan), kinematic_pose()));
  }
  return fusion_.pose();
}

void Runner::land(const Pose& ctrl) {
  const int f = side_index(swing_.side);
  Vec3 p = compose(true_base(), invert(ctrl)).apply(swing_.target_W);
  if (cfg_.noise.actuation_sigma > 0.0) {
    const double dx = gauss_(actuation_rng_), dy = gauss_(actuation_rng_);
    p += cfg_.noise.actuation_sigma * Vec3(dx, dy, 0.0);
  }
  p.z() = cfg_.scene.height_at(p.head<2>());
  feet_[f] = p;
  const auto c = foot_corners(p, yaw_, cfg_.foot);
  for (int k = 0; k < 4; ++k) contacts_drift_[4 * f + k] = c[k] + drift(now());
  swing_.active = false;
}

void Runner::step_tick() {
  ++tick_;
  const double t = now();
  const Vec3 torso_prev = torso_;
  ContactFlags contact;
  contact.fill(true);

  Pose ctrl = controller_frame();
  if (swing_.active) {
    const long k = tick_ - swing_.start_tick;
    const double T = cfg_.gait.swing_time();
    const double tau = std::min(T, static_cast<double>(k) * dt_);
    const double a = tau / T;
    // The torso settles one tick before touchdown so the frame the landing
    // is commanded in is not a tick behind the base.
    const double a_torso = std::min(1.0, static_cast<double>(k) / std::max<long>(1, swing_.swing_ticks - 1));
    torso_ = swing_.torso_from + a_torso * (swing_.torso_to - swing_.torso_from);
    const int f = side_index(swing_.side);
    const Vec3 target = compose(true_base(), invert(ctrl)).apply(swing_.target_W);
    const double z_land = cfg_.scene.height_at(target.head<2>());
    const SwingSample s = swing_profile(tau, 0.0, 1.0, z_land - swing_.from.z(), cfg_.gait);
    Vec3 foot = swing_.from + a * (target - swing_.from);
    foot.z() = swing_.from.z() + s.z;
    swing_prev_ = feet_[f];
    feet_[f] = foot;
    if (k >= swing_.swing_ticks) {
      land(ctrl);
    } else {
      const auto c = foot_corners(foot, yaw_, cfg_.foot);
      for (int i = 0; i < 4; ++i) {
        contacts_drift_[4 * f + i] = c[i] + drift(t);
        contact[4 * f + i] = false;
      }
    }
  }
  const Vec3 vel = (torso_ - torso_prev) / dt_;
  const Vec3 accel = (vel - torso_vel_) / dt_;
  torso_vel_ = vel;

  // Proprioception synthesized in the drifting kinematic world.
  const Rotation R = Rotation::about_z(yaw_);
  const Vec3 base_drift = torso_ + drift(t);
  const Vec3 vel_drift = vel + cfg_.noise.drift_rate * drift_dir_;
  const double sp = cfg_.noise.proprio_sigma;
  auto noise3 = [&]() {
    if (sp <= 0.0) return Vec3(Vec3::Zero());
    const double a = gauss_(proprio_rng_), b = gauss_(proprio_rng_), c = gauss_(proprio_rng_);
    return Vec3(sp * a, sp * b, sp * c);
  };
  ObservationVector y;
  for (int i = 0; i < kContacts; ++i) {
    y.segment<3>(obs_index::relative_position(i)) = R.inverse() * (contacts_drift_[i] - base_drift) + noise3();
    Vec3 v_rel = -vel_drift;
    if (!contact[i]) v_rel += (feet_[i / 4] - swing_prev_) / dt_;
    y.segment<3>(obs_index::relative_velocity(i)) = R.inverse() * v_rel + noise3();
    y(obs_index::height(i)) = contacts_drift_[i].z() + (sp > 0.0 ? sp * gauss_(proprio_rng_) : 0.0);
  }
  kf_.predict(accel, contact);
  kf_.update(y, contact, R);
  fusion_.on_kinematic(kinematic_pose());

  const long lio_every = std::max(1L, std::lround(cfg_.estimator_hz / cfg_.lio_hz));
  if (tick_ % lio_every == 0) {
    Pose noisy = true_base();
    if (cfg_.noise.lio_sigma > 0.0) {
      const double a = gauss_(lio_rng_), b = gauss_(lio_rng_), c = gauss_(lio_rng_);
      noisy.translation += cfg_.noise.lio_sigma * Vec3(a, b, c);
    }
    if (cfg_.noise.lio_sigma_rot > 0.0) {
      const double a = gauss_(lio_rng_), b = gauss_(lio_rng_), c = gauss_(lio_rng_);
      noisy.rotation = noisy.rotation * rotation_exp(cfg_.noise.lio_sigma_rot * Vec3(a, b, c));
    }
    const Pose T_W_lidar = compose(noisy, cfg_.lidar_mount);
    fusion_.on_lio(lio_to_base(T_W_lidar, cfg_.lidar_mount), static_cast<double>(lio_every) * dt_);
  }

  const long perc_every = std::max(1L, std::lround(cfg_.estimator_hz / cfg_.perception_hz));
  if (tick_ % perc_every == 0) {
    if (cfg_.perception_mode == PerceptionMode::Continuous) perceive();
    if (cfg_.record_traces) report_.tracking.push_back({t, fusion_.pose().translation - torso_});
  }
}

void Runner::perceive() {
  const Pose cam_true = compose(true_base(), cfg_.camera_mount);
  const Pose cam_est = compose(fusion_.pose(), cfg_.camera_mount);
  const RenderResult frame = render_depth(scene_, cam_true, cfg_.intrinsics, cfg_.noise, frame_index_++);
  const auto t0 = std::chrono::steady_clock::now();
  polygons_ = extract_polygon_map(frame.depth, cfg_.intrinsics, cam_est, cfg_.perception, now());
  recent_.push_back(polygons_);
  while (static_cast<int>(recent_.size()) > cfg_.goal_frames) recent_.pop_front();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report_.frames++;
  report_.perception_seconds += secs;
  report_.frame_seconds_max = std::max(report_.frame_seconds_max, secs);
  have_frame_ = true;
}

// Plans the next level. `leading_target`, when present, is the estimate-frame
// landing point of the foot currently in swing (SS replanning while walking).
bool Runner::plan(Side lead, bool closing, const std::optional<Vec3>& leading_target, long start_plan_tick) {
  if (cfg_.perception_mode == PerceptionMode::OnReplan) {
    // Frames from earlier plans were taken from elsewhere on the stairs.
    recent_.clear();
    perceive();
  } else if (!have_frame_) {
    perceive();
  }

  const Pose est = fusion_.pose();
  const Pose true_to_est = compose(est, invert(true_base()));
  Vec3 est_feet[2] = {true_to_est.apply(feet_[0]), true_to_est.apply(feet_[1])};
  if (swing_.active) {
    // The swinging foot is taken at its target.
    est_feet[side_index(swing_.side)] = swing_.target_W;
  }
  const Pose to_base = invert(est);
  FootState fs;
  if (leading_target) {
    fs = FootState::flat(to_base.apply(*leading_target).z());
  } else {
    fs.lltoe = fs.llheel = to_base.apply(est_feet[0]).z();
    fs.rrtoe = fs.rrheel = to_base.apply(est_feet[1]).z();
  }

  const auto region = generate_footholds(polygons_, est, fs, cfg_.foothold, now());
  if (!region) {
    report_.status = "stall";
    report_.message = "no foothold candidate at t=" + std::to_string(now());
    return false;
  }

  // Median goal over the recent frames; a single frame's outline can be
  // off by several millimetres.
  std::vector<TorsoPose> goals;
  for (const auto& polys : recent_) {
    goals.push_back(
        level_torso_goal(polys, *region, est, est_feet[0], est_feet[1], cfg_.foot, cfg_.gait, cfg_.torso_margin));
  }
  auto median_of = [&](double TorsoPose::*field) {
    std::vector<double> v;
    for (const TorsoPose& g : goals) v.push_back(g.*field);
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  TorsoPose target = goals.back();
  target.x = median_of(&TorsoPose::x);
  target.y = median_of(&TorsoPose::y);
  const double yaw = target.phi;

  StanceState st;
  st.left = est_feet[0];
  st.right = est_feet[1];
  st.yaw = yaw;
  st.next_side = lead;
  st.start_tick = start_plan_tick;
  PlannerParams pp = cfg_.planner;
  pp.ss_closing_step = closing;
  FootstepPlan p = plan_steps({target}, std::vector<FootholdRegion>{*region}, cfg_.foot, cfg_.gait, st, pp);
  if (p.steps.empty()) {
    report_.status = "stall";
    report_.message = "planner: " + p.message;
    return false;
  }
  report_.steps_planned += static_cast<int>(p.steps.size());
  pending_ = std::move(p);
  pending_plan_to_true_ = compose(true_base(), invert(est));
  pending_fused_ = est;
  pending_kin_ = kinematic_pose();
  pending_torso_goal_ = pending_plan_to_true_.apply(target.position());
  return true;
}

void Runner::execute_step(const FootStep& step) {
  const long ratio = std::lround(cfg_.gait.dt / dt_);
  const long start = step.tick * ratio;
  while (tick_ < start) step_tick();

  swing_ = Swing{};
  swing_.active = true;
  swing_.side = step.side;
  swing_.start_tick = tick_;
  swing_.swing_ticks = std::lround(cfg_.gait.swing_time() / dt_);
  swing_.from = feet_[side_index(step.side)];
  swing_.target_W = step.p_f;
  swing_.torso_from = torso_;
  const Vec3 goal = pending_plan_to_true_.apply(step.p_t.position());
  swing_.torso_to = goal;
  swing_.hold_frame = cfg_.gait.mode == GaitMode::SS && cfg_.inter_plan_drift;
  swing_.fused_at_plan = pending_fused_;
  swing_.kin_at_plan = pending_kin_;
}

RunReport Runner::run() {
  const ScenarioConfig& c = cfg_;
  const long settle = std::lround(c.settle_time / dt_);
  while (tick_ < settle) step_tick();
  const long ratio = std::lround(c.gait.dt / dt_);
  auto plan_tick_now = [&]() { return (tick_ + ratio - 1) / ratio; };

  const int levels = c.scene.n_steps;
  const long step_ticks_est = c.gait.step_ticks() * ratio;
  const long half_swing = std::lround(0.5 * c.gait.swing_time() / dt_);
  double last_step_start = -1.0;
  Side lead = Side::Left;
  bool ok = true;

  auto finish_step = [&](const FootStep& s, std::size_t k) -> bool {
    // Runs the swing to landing and scores the landing.
    while (swing_.active) step_tick();
    ExecutedStep e;
    e.index = static_cast<int>(report_.executed.size());
    e.side = s.side;
    e.t_planned = s.t;
    e.t_executed = now();
    e.planned_W = s.p_f;
    e.intended = pending_plan_to_true_.apply(s.p_f);
    e.executed = feet_[side_index(s.side)];
    e.error = (e.executed - e.intended).head<2>().norm();
    const Vec3 local = invert(c.scene.first_riser).apply(e.intended);
    e.level = static_cast<int>(std::clamp<long>(std::lround(local.z() / c.scene.rise), 0, c.scene.n_steps));
    e.on_tread = c.scene.rectangle_on_level(foot_rectangle(e.executed, yaw_, c.foot), e.level);
    report_.executed.push_back(e);
    report_.steps_completed++;
    FootStep copy = s;
    copy.index = e.index;
    report_.plan.steps.push_back(copy);
    (void)k;
    if (!e.on_tread) {
      report_.status = "fall";
      report_.all_on_tread = false;
      report_.message = "step " + std::to_string(e.index) + " left its tread";
      return false;
    }
    return true;
  };

  if (c.gait.mode == GaitMode::DS) {
    for (int level = 1; level <= levels && ok; ++level) {
      if (!plan(lead, false, std::nullopt, plan_tick_now())) {
        ok = false;
        break;
      }
      const FootstepPlan plan_now = pending_;
      for (std::size_t k = 0; k < plan_now.steps.size() && ok; ++k) {
        execute_step(plan_now.steps[k]);
        last_step_start = plan_now.steps[k].t;
        ok = finish_step(plan_now.steps[k], k);
      }
      if (!ok) break;
      // Stance after the second foot lands.
      const long resume = (plan_now.steps.back().tick + c.gait.step_ticks()) * ratio;
      while (tick_ < resume) step_tick();
      report_.levels_completed = level;
    }
  } else {
    if (!plan(lead, levels == 1, std::nullopt, plan_tick_now())) ok = false;
    for (int level = 1; level <= levels && ok; ++level) {
      const FootstepPlan plan_now = pending_;
      const Pose plan_map = pending_plan_to_true_, plan_fused = pending_fused_, plan_kin = pending_kin_;
      const FootStep& s = plan_now.steps.front();
      execute_step(s);
      last_step_start = s.t;
      // Replan the next level halfway through this swing.
      bool planned_next = false;
      if (level < levels) {
        const long at = swing_.start_tick + half_swing;
        while (tick_ < at) step_tick();
        const long next_start = s.tick + c.gait.step_ticks();
        planned_next = plan(other(s.side), level + 1 == levels, s.p_f, next_start);
        if (!planned_next) ok = false;
      }
      // Score this step against its own plan-time frames.
      FootstepPlan keep = pending_;
      Pose keep_map = pending_plan_to_true_, keep_fused = pending_fused_, keep_kin = pending_kin_;
      pending_plan_to_true_ = plan_map;
      pending_fused_ = plan_fused;
      pending_kin_ = plan_kin;
      if (!finish_step(s, 0)) ok = false;
      // Closing step of the last level, planned together with it.
      if (ok && level == levels && plan_now.steps.size() > 1) {
        const FootStep& closing = plan_now.steps[1];
        execute_step(closing);
        last_step_start = closing.t;
        ok = finish_step(closing, 1);
      }
      pending_ = std::move(keep);
      pending_plan_to_true_ = keep_map;
      pending_fused_ = keep_fused;
      pending_kin_ = keep_kin;
      if (ok) report_.levels_completed = level;
      if (!planned_next && level < levels) break;
    }
    if (ok) {
      const long resume = std::lround(last_step_start / c.gait.dt) * ratio + step_ticks_est;
      while (tick_ < resume) step_tick();
    }
  }

  report_.T_total = last_step_start >= 0.0 ? last_step_start + c.gait.swing_time() + c.gait.stance_time : now();
  double em = 0.0;
  for (const ExecutedStep& e : report_.executed) {
    report_.step_errors_mm.push_back(e.error * 1000.0);
    em = std::max(em, e.error * 1000.0);
  }
  report_.e_m_mm = em;
  return report_;
}

}  // namespace

Pose start_base_pose(const ScenarioConfig& cfg) {
  const Pose& riser = cfg.scene.first_riser;
  const double x0 = -cfg.start_clearance - cfg.foot.length / 2;
  return Pose{Rotation::about_z(riser.rotation.yaw()), riser.apply(Vec3(x0, 0.0, cfg.gait.z_t))};
}

TorsoPose level_torso_goal(const std::vector<PolygonSegment>& polygons, const FootholdRegion& region,
                           const Pose& base_pose, const Vec3& left, const Vec3& right, const FootGeometry& foot,
                           const GaitParams& g, double margin) {
  // Along the heading: heel clear of the tread front by the margin, but
  // never past the middle of the tread polygon under p*.
  const Vec3 p_star_W = region.to_world(region.candidate.p_star);
  const double yaw = base_pose.rotation.yaw();
  const Vec2 heading(std::cos(yaw), std::sin(yaw));
  const Vec2 lateral(-heading.y(), heading.x());
  const PolygonSegment* tread = nullptr;
  double best = 1e9;
  for (const PolygonSegment& s : polygons) {
    if (!s.tread) continue;
    std::vector<Vec2> xy;
    for (const Vec3& v : s.vertices) xy.emplace_back(v.x(), v.y());
    if (!hull_contains(convex_hull(xy), p_star_W.head<2>(), 0.03)) continue;
    const double dz = std::abs(s.mean_height() - p_star_W.z());
    if (dz < best) {
      best = dz;
      tread = &s;
    }
  }
  double along;
  if (tread) {
    double lo = 1e9, hi = -1e9;
    for (const Vec3& v : tread->vertices) {
      const double a = heading.dot(v.head<2>());
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    along = std::min(lo + foot.length / 2 + margin, 0.5 * (lo + hi));
  } else {
    along = heading.dot(p_star_W.head<2>());
  }
  const double across = lateral.dot(0.5 * (left + right).head<2>());
  const Vec2 xy = along * heading + across * lateral;
  return {xy.x(), xy.y(), p_star_W.z() + g.z_t, yaw};
}

RunReport run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const double ratio = cfg.gait.dt * cfg.estimator_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
    throw ConfigError("gait.dt must be a whole number of estimator ticks");
  }
  Runner r(cfg);
  return r.run();
}

}  // namespace polymap
