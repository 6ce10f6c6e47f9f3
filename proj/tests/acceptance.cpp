// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace polymap;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0)) * 180.0 / kPi;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---- 1: oracle suite -------------------------------------------------------

Outcome oracle_suite() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1, 1);
  int bad_hull = 0, bad_erode = 0, bad_rect = 0, bad_ransac = 0;

  for (int s = 0; s < 500; ++s) {
    std::vector<Vec2> pts;
    const int n = 3 + static_cast<int>((u(rng) + 1) * 20);
    const bool lattice = s % 3 == 0;
    for (int i = 0; i < n; ++i) {
      pts.emplace_back(lattice ? Vec2(std::round(4 * u(rng)), std::round(4 * u(rng))) : Vec2(u(rng), u(rng)));
    }
    auto expect = oracle::hull_vertices_cubic(pts);
    auto got = convex_hull(pts);
    if (expect.size() < 3) {
      bad_hull += got.size() >= 3;
      continue;
    }
    std::sort(got.begin(), got.end(), [](const Vec2& a, const Vec2& b) {
      return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
    });
    bad_hull += got != expect;
  }

  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bm(32 * 32);
    const double fill = 0.75 + 0.25 * u(rng);
    for (auto& b : bm) b = (u(rng) + 1) / 2 < fill;
    const int passes = 1 + t % 3;
    bad_erode += erode(bm, 32, 32, passes) != oracle::erode_naive(bm, 32, 32, passes);
  }

  std::uniform_real_distribution<double> size(0.05, 0.6), th(-kPi, kPi);
  int overlaps = 0;
  for (int i = 0; i < 500; ++i) {
    const OrientedRectangle a{{0.6 * u(rng), 0.6 * u(rng)}, size(rng), size(rng), th(rng)};
    const OrientedRectangle b{{0.6 * u(rng), 0.6 * u(rng)}, size(rng), size(rng), th(rng)};
    const bool got = rect_intersect(a, b);
    overlaps += got;
    bad_rect += got != oracle::rect_overlap_sampled(a, b, 200);
  }

  std::normal_distribution<double> g(0.0, 1.0);
  double worst_deg = 0.0, worst_off = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vec3 n(g(rng), g(rng), g(rng));
    n.normalize();
    const Vec3 e1 = n.unitOrthogonal(), e2 = n.cross(e1);
    const Vec3 c(u(rng), u(rng), 1.5 + u(rng));
    std::vector<Vec3> pts, inliers;
    for (int i = 0; i < 700; ++i) {
      const Vec3 p = c + 0.5 * u(rng) * e1 + 0.5 * u(rng) * e2 + 0.003 * g(rng) * n;
      pts.push_back(p);
      inliers.push_back(p);
    }
    for (int i = 0; i < 300; ++i) pts.push_back(c + 0.6 * Vec3(u(rng), u(rng), u(rng)));
    std::shuffle(pts.begin(), pts.end(), rng);
    RansacParams rp;
    rp.seed = 1000 + trial;
    const auto fit = fit_plane_ransac(PointCloud{pts, Frame::Camera}, rp);
    if (!fit) {
      ++bad_ransac;
      continue;
    }
    auto [ln, ld] = oracle::plane_svd(inliers);
    Vec3 rn = fit->plane.normal;
    double rd = fit->plane.d;
    if (rn.dot(ln) < 0) {
      rn = -rn;
      rd = -rd;
    }
    const double deg = angle_deg(rn, ln), off = std::abs(rd - ld);
    worst_deg = std::max(worst_deg, deg);
    worst_off = std::max(worst_off, off);
    bad_ransac += !(deg <= 1.0 && off <= 0.003);
  }

  Outcome o;
  o.pass = bad_hull == 0 && bad_erode == 0 && bad_rect == 0 && bad_ransac == 0;
  o.detail = fmt("hull mismatches %.0f/500, erosion %.0f/200, rect %.0f/500", bad_hull, bad_erode, bad_rect) +
             fmt(" (%.0f overlapping), ransac %.0f/50 (worst %.3f deg, %.2f mm)", overlaps, bad_ransac, worst_deg,
                 worst_off * 1000);
  return o;
}

// ---- 2: estimation ---------------------------------------------------------

Outcome estimation() {
  const double rate = 200.0, lio_rate = 50.0;
  const auto truth = synthesize_walk(60.0, rate);
  NoiseModel nm;
  nm.seed = 1;
  nm.drift_rate = 0.01;
  nm.lio_sigma = 0.01;
  auto [kin, lio_full] = simulate_odometry(truth, nm);
  std::vector<OdomSample> lio;
  const std::size_t every = static_cast<std::size_t>(std::lround(rate / lio_rate));
  for (std::size_t i = 0; i < lio_full.size(); i += every) lio.push_back(lio_full[i]);
  const ReplayResult rr = replay_fusion(kin, lio, FusionParams{});

  auto errors = [&](const std::vector<OdomSample>& s) {
    std::vector<Vec3> e;
    std::size_t j = 0;
    for (const OdomSample& t : truth) {
      while (j + 1 < s.size() && s[j + 1].stamp <= t.stamp + 1e-12) ++j;
      e.push_back(s[j].pose.translation - t.pose.translation);
    }
    return e;
  };
  const double dt = 1.0 / rate;
  const auto ef = errors(rr.fused), el = errors(lio), ek = errors(kin);
  const double terminal = ef.back().norm();
  const double hf_f = high_frequency_power(ef, dt), hf_l = high_frequency_power(el, dt);
  Outcome o;
  o.pass = terminal < 0.3 && hf_f < 0.5 * hf_l;
  o.detail = fmt("fused terminal %.4f m (kinematic %.3f m), HF power fused/LIO = %.3f", terminal, ek.back().norm(),
                 hf_f / hf_l);
  return o;
}

// ---- 3: perception ---------------------------------------------------------

struct TreadCheck {
  bool one_per_step = true;
  bool every_step = true;  // at least one tread polygon per step
  int fragments = 0;       // tread polygons beyond one per step
  double height_err = 0.0;
  double normal_deg = 0.0;
};

TreadCheck check_treads(const ScenarioConfig& cfg, const Pose& cam, std::uint64_t frame) {
  const RenderResult r = render_depth(cfg.scene, cam, cfg.intrinsics, cfg.noise, frame);
  const auto polys = extract_polygon_map(r.depth, cfg.intrinsics, cam, cfg.perception);
  TreadCheck c;
  for (int k = 1; k <= cfg.scene.n_steps; ++k) {
    const double h = cfg.scene.level_height(k);
    int count = 0;
    for (const PolygonSegment& s : polys) {
      if (!s.tread || std::abs(s.mean_height() - h) > 0.5 * cfg.scene.rise) continue;
      ++count;
      c.height_err = std::max(c.height_err, std::abs(s.mean_height() - h));
      c.normal_deg = std::max(c.normal_deg, angle_deg(s.plane.normal, Vec3::UnitZ()));
    }
    if (count != 1) c.one_per_step = false;
    if (count == 0) c.every_step = false;
    c.fragments += std::max(0, count - 1);
  }
  return c;
}

Outcome perception() {
  ScenarioConfig clean = support::noiseless();
  const Pose cam = support::staircase_camera(clean);
  const TreadCheck a = check_treads(clean, cam, 0);

  ScenarioConfig noisy = support::noiseless();
  noisy.noise.depth_sigma = 0.005;
  noisy.noise.depth_dropout = 0.05;
  double worst = 0.0;
  bool all_found = true;
  int fragments = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    noisy.noise.seed = seed;
    const TreadCheck b = check_treads(noisy, cam, 0);
    worst = std::max(worst, b.height_err);
    all_found = all_found && b.every_step;
    fragments += b.fragments;
  }
  Outcome o;
  o.pass = a.one_per_step && a.height_err <= 0.002 && a.normal_deg <= 1.0 && all_found && worst <= 0.0124;
  o.detail = (a.one_per_step ? std::string("noiseless: one tread per step") : std::string("noiseless: tread count wrong")) +
             fmt(", height err %.2f mm, normal %.3f deg; noisy over 20 seeds: ", a.height_err * 1000, a.normal_deg) +
             (all_found ? "every tread found" : "a tread was missed") +
             fmt(" (%.0f extra fragments), worst height err %.2f mm", fragments, worst * 1000);
  return o;
}

// ---- 4: throughput ---------------------------------------------------------

Outcome throughput() {
  const ScenarioConfig cfg = ScenarioConfig::defaults();
  const Scene scene = cfg.scene.build();
  const int frames = 120;
  // Camera poses along the approach and the climb.
  const Pose start = start_base_pose(cfg);
  const double span = cfg.scene.n_steps * cfg.scene.tread + cfg.start_clearance;
  std::vector<RenderResult> imgs;
  std::vector<Pose> cams;
  for (int k = 0; k < frames; ++k) {
    const double s = span * k / (frames - 1);
    const double level = std::clamp(std::floor(s / cfg.scene.tread), 0.0, static_cast<double>(cfg.scene.n_steps));
    const Pose base = compose(start, Pose::from_translation(Vec3(s, 0, level * cfg.scene.rise)));
    cams.push_back(compose(base, cfg.camera_mount));
    imgs.push_back(render_depth(scene, cams.back(), cfg.intrinsics, cfg.noise, static_cast<std::uint64_t>(k)));
  }
  // One warm-up frame for the per-thread buffers.
  extract_polygon_map(imgs[0].depth, cfg.intrinsics, cams[0], cfg.perception);
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t polygons = 0;
  for (int k = 0; k < frames; ++k) {
    const auto a = std::chrono::steady_clock::now();
    polygons += extract_polygon_map(imgs[k].depth, cfg.intrinsics, cams[k], cfg.perception).size();
    worst = std::max(worst, std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double hz = frames / total;
  Outcome o;
  o.pass = hz >= 20.0;
  o.detail = fmt("%.1f Hz sustained over %.0f frames (slowest frame %.1f ms, %.1f polygons/frame)", hz, frames,
                 worst * 1000, static_cast<double>(polygons) / frames);
  return o;
}

// ---- 5: DS scenario --------------------------------------------------------

Outcome ds_scenario() {
  ScenarioConfig cfg = ScenarioConfig::defaults();
  cfg.gait.mode = GaitMode::DS;
  cfg.noise.depth_sigma = 0.005;
  cfg.noise.actuation_sigma = 0.003;
  cfg.noise.seed = 1;
  const RunReport a = run_scenario(cfg);
  const RunReport b = run_scenario(cfg);
  bool inside = !a.executed.empty();
  for (const ExecutedStep& e : a.executed) {
    inside = inside && e.level >= 1 &&
             cfg.scene.rectangle_on_level(foot_rectangle(e.executed, cfg.scene.first_riser.rotation.yaw(), cfg.foot),
                                          e.level);
  }
  const bool same = a.deterministic_json().dump() == b.deterministic_json().dump();
  Outcome o;
  o.pass = a.status == "ok" && a.levels_completed == cfg.scene.n_steps && inside && a.e_m_mm <= 12.4 && same;
  o.detail = "status " + a.status + fmt(", levels %.0f/%.0f, e_m %.2f mm, ", a.levels_completed, cfg.scene.n_steps,
                                        a.e_m_mm) +
             (inside ? "all feet inside their treads" : "a foot left its tread") +
             (same ? ", report deterministic" : ", report differs between runs");
  return o;
}

// ---- 6: Monte Carlo DS vs SS ----------------------------------------------

Outcome monte_carlo() {
  const int runs = 200;
  double sum[2] = {0, 0};
  int falls[2] = {0, 0};
  for (int m = 0; m < 2; ++m) {
    for (int s = 1; s <= runs; ++s) {
      ScenarioConfig cfg = ScenarioConfig::defaults();
      cfg.gait.mode = m == 0 ? GaitMode::DS : GaitMode::SS;
      cfg.perception_mode = PerceptionMode::OnReplan;
      cfg.inter_plan_drift = true;
      cfg.record_traces = false;
      cfg.noise.seed = static_cast<std::uint64_t>(s);
      const RunReport r = run_scenario(cfg);
      sum[m] += r.e_m_mm;
      falls[m] += r.status != "ok";
    }
  }
  const double ds = sum[0] / runs, ss = sum[1] / runs;
  Outcome o;
  o.pass = ss > ds;
  o.detail = fmt("%.0f seeds per mode: mean e_m DS %.2f mm, SS %.2f mm", runs, ds, ss) +
             fmt(" (unsuccessful runs DS %.0f, SS %.0f)", falls[0], falls[1]);
  return o;
}

// ---- 7: planner invariants -------------------------------------------------

Outcome planner_invariants() {
  std::mt19937_64 rng(707);
  int bad = 0, steps = 0;
  std::string first;
  for (int i = 0; i < 1000; ++i) {
    const support::RandomPlan r = support::random_plan(rng);
    steps += static_cast<int>(r.plan.steps.size());
    const std::string v = support::plan_violation(r);
    if (!v.empty()) {
      if (first.empty()) first = "plan " + std::to_string(i) + ": " + v;
      ++bad;
    }
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = fmt("%.0f/1000 plans violate an invariant (%.0f steps checked)", bad, steps) + (first.empty() ? "" : "; " + first);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "oracle suite", 60, oracle_suite},    {2, "estimation", 10, estimation},
      {3, "perception", 30, perception},        {4, "polygon map throughput", 1e9, throughput},
      {5, "DS scenario", 120, ds_scenario},     {6, "Monte Carlo DS vs SS", 300, monte_carlo},
      {7, "planner invariants", 30, planner_invariants},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::string budget = c.budget_s < 1e8 ? fmt(" / %.0f s", c.budget_s) : std::string();
    std::printf("%s %d %s: %s [%.1f s%s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s,
                budget.c_str(), in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
