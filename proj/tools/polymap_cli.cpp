// polymap command line: render, estimate, map, plan, run, bench.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 scenario
// failure (fall or stall).

#include "polymap/sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace polymap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitScenario = 3;

ScenarioConfig load_config(const std::string& path) {
  if (path.empty()) return ScenarioConfig::defaults();
  return scenario_from_json(read_json_file(path));
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("output directory must not be empty");
  fs::create_directories(dir);
}

// Base poses walking up the stairs from the start pose, `spacing` apart
// along the heading, at torso height above the surface underneath.
std::vector<Pose> approach_poses(const ScenarioConfig& cfg, int n, double spacing) {
  const Pose start = start_base_pose(cfg);
  const double yaw = start.rotation.yaw();
  const Vec3 heading(std::cos(yaw), std::sin(yaw), 0.0);
  std::vector<Pose> out;
  for (int k = 0; k < n; ++k) {
    Pose p = start;
    p.translation += k * spacing * heading;
    p.translation.z() = cfg.scene.height_at(p.translation.head<2>()) + cfg.gait.z_t;
    out.push_back(p);
  }
  return out;
}

std::string frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.pmdi", k);
  return buf;
}

// ---- render ---------------------------------------------------------------

struct RenderArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  int frames = 1;
  double spacing = 0.1;
};

int cmd_render(const RenderArgs& a) {
  ScenarioConfig cfg = load_config(a.config);
  cfg.noise.seed = a.seed;
  if (a.frames < 1) throw ValidationError("--frames must be >= 1");
  ensure_dir(a.out);
  const Scene scene = cfg.scene.build();
  write_json_file(fs::path(a.out) / "intrinsics.json", to_json(cfg.intrinsics));
  std::ofstream poses(fs::path(a.out) / "poses.jsonl");
  const auto bases = approach_poses(cfg, a.frames, a.spacing);
  for (int k = 0; k < a.frames; ++k) {
    const Pose cam = compose(bases[k], cfg.camera_mount);
    const RenderResult r = render_depth(scene, cam, cfg.intrinsics, cfg.noise, static_cast<std::uint64_t>(k));
    write_depth_file(fs::path(a.out) / frame_name(k), r.depth);
    const double stamp = k / cfg.perception_hz;
    poses << Json{{"frame", frame_name(k)}, {"stamp", stamp}, {"camera", to_json(cam)}, {"base", to_json(bases[k])}}
                 .dump()
          << '\n';
  }
  std::cout << "rendered " << a.frames << " frame(s) to " << a.out << '\n';
  return kExitOk;
}

// ---- map ------------------------------------------------------------------

struct MapArgs {
  std::string config, frames, out;
};

int cmd_map(const MapArgs& a) {
  const ScenarioConfig cfg = load_config(a.config);
  const fs::path dir(a.frames);
  const CameraIntrinsics intr = intrinsics_from_json(read_json_file(dir / "intrinsics.json"));
  std::ofstream out(a.out);
  if (!out) throw ValidationError("cannot open " + a.out + " for writing");
  std::size_t n_frames = 0, n_polys = 0, n_treads = 0;
  for (const Json& line : read_jsonl_file(dir / "poses.jsonl")) {
    const std::string name = line.at("frame").get<std::string>();
    const double stamp = line.value("stamp", 0.0);
    const DepthImage depth = read_depth_file(dir / name);
    const auto polys = extract_polygon_map(depth, intr, pose_from_json(line.at("camera")), cfg.perception, stamp);
    for (const PolygonSegment& s : polys) {
      Json j = to_json(s);
      j["frame"] = name;
      out << j.dump() << '\n';
      n_treads += s.tread;
    }
    n_polys += polys.size();
    ++n_frames;
  }
  std::cout << n_frames << " frame(s), " << n_polys << " polygon(s), " << n_treads << " tread(s)\n";
  return kExitOk;
}

// ---- plan -----------------------------------------------------------------

struct PlanArgs {
  std::string config, map, pose, out, grid;
  std::string frame;
  int levels = 0;
};

int cmd_plan(const PlanArgs& a) {
  const ScenarioConfig cfg = load_config(a.config);
  // --frame takes a frame file name or its index.
  std::string frame = a.frame;
  if (!frame.empty() && frame.find_first_not_of("0123456789") == std::string::npos) frame = frame_name(std::stoi(frame));
  std::vector<PolygonSegment> polys;
  for (const Json& j : read_jsonl_file(a.map)) {
    if (!frame.empty() && j.value("frame", std::string()) != frame) continue;
    polys.push_back(polygon_from_json(j));
  }
  if (polys.empty()) throw ValidationError("no polygons in " + a.map + (frame.empty() ? "" : " for " + frame));
  Pose base = a.pose.empty() ? start_base_pose(cfg) : pose_from_json(read_json_file(a.pose));
  const int levels = a.levels > 0 ? a.levels : cfg.scene.n_steps;

  StanceState st;
  st.yaw = base.rotation.yaw();
  st.left = base.apply(Vec3(0.0, cfg.gait.y_b, -cfg.gait.z_t));
  st.right = base.apply(Vec3(0.0, -cfg.gait.y_b, -cfg.gait.z_t));
  FootstepPlan all;
  int done = 0;
  for (int level = 0; level < levels; ++level) {
    const Pose to_base = invert(base);
    FootState fs_now;
    fs_now.lltoe = fs_now.llheel = to_base.apply(st.left).z();
    fs_now.rrtoe = fs_now.rrheel = to_base.apply(st.right).z();
    const auto region = generate_footholds(polys, base, fs_now, cfg.foothold);
    if (!region) {
      all.status = PlanStatus::NoFootholds;
      all.message = "no foothold candidate for level " + std::to_string(level);
      break;
    }
    if (level == 0 && !a.grid.empty()) write_grid_csv(a.grid, region->support, region->eroded);
    const TorsoPose goal =
        level_torso_goal(polys, *region, base, st.left, st.right, cfg.foot, cfg.gait, cfg.torso_margin);
    PlannerParams pp = cfg.planner;
    pp.ss_closing_step = level + 1 == levels;
    FootstepPlan p = plan_steps({goal}, std::vector<FootholdRegion>{*region}, cfg.foot, cfg.gait, st, pp);
    for (FootStep& s : p.steps) {
      s.index = static_cast<int>(all.steps.size());
      all.steps.push_back(s);
    }
    all.rescales += p.rescales;
    if (p.status != PlanStatus::Ok || p.steps.empty()) {
      all.status = p.status;
      all.message = p.message;
      break;
    }
    // Next level starts from where this one leaves the robot.
    for (const FootStep& s : p.steps) (s.side == Side::Left ? st.left : st.right) = s.p_f;
    const FootStep& last = p.steps.back();
    st.next_side = cfg.gait.mode == GaitMode::DS ? st.next_side : other(last.side);
    st.start_tick = last.tick + cfg.gait.step_ticks();
    base = Pose{Rotation::about_z(last.p_t.phi), last.p_t.position()};
    ++done;
  }
  write_plan_jsonl(a.out, all);
  std::cout << all.steps.size() << " step(s) over " << done << " level(s), status " << to_string(all.status);
  if (!all.message.empty()) std::cout << " (" << all.message << ")";
  std::cout << '\n';
  return all.status == PlanStatus::Ok ? kExitOk : kExitScenario;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  std::string config, out, mode;
  std::uint64_t seed = 0;
};

void write_tracking_error_csv(const fs::path& path, const RunReport& r) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open " + path.string() + " for writing");
  f << "t,ex,ey,ez\n";
  for (const TrackingSample& s : r.tracking) {
    f << s.t << ',' << s.error.x() << ',' << s.error.y() << ',' << s.error.z() << '\n';
  }
}

int cmd_run(const RunArgs& a) {
  ScenarioConfig cfg = load_config(a.config);
  cfg.noise.seed = a.seed;
  if (!a.mode.empty()) cfg.gait.mode = gait_mode_from_string(a.mode);
  const RunReport r = run_scenario(cfg);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    const fs::path dir(a.out);
    write_json_file(dir / "report.json", r.to_json());
    write_tracking_error_csv(dir / "tracking.csv", r);
    write_tracking_csv(dir / "swing.csv", r.plan, r.executed);
    write_plan_jsonl(dir / "plan.jsonl", r.plan);
  }
  std::printf("status %s  levels %d/%d  steps %d/%d  T %.2f s  e_m %.2f mm  f %.1f Hz (min %.1f)\n",
              r.status.c_str(), r.levels_completed, cfg.scene.n_steps, r.steps_completed, r.steps_planned,
              r.T_total, r.e_m_mm, r.detection_hz_mean(), r.detection_hz_min());
  if (!r.message.empty()) std::printf("  %s\n", r.message.c_str());
  return r.status == "ok" ? kExitOk : kExitScenario;
}

// ---- estimate -------------------------------------------------------------

struct EstimateArgs {
  std::string config, kin, lio, truth, out;
  bool synthesize = false;
  std::optional<std::uint64_t> seed;
  double duration = 60.0;
  double rate = 200.0;
  double lio_rate = 50.0;
  double drift = 0.01;
  double lio_sigma = 0.01;
};

// LIO stream thinned to `lio_rate` from a stream sampled at `rate`.
std::vector<OdomSample> thin(const std::vector<OdomSample>& s, double rate, double lio_rate) {
  const long every = std::max(1L, std::lround(rate / lio_rate));
  std::vector<OdomSample> out;
  for (std::size_t i = 0; i < s.size(); i += static_cast<std::size_t>(every)) out.push_back(s[i]);
  return out;
}

int cmd_estimate(const EstimateArgs& a) {
  const ScenarioConfig cfg = load_config(a.config);
  std::vector<OdomSample> truth, kin, lio;
  if (a.synthesize) {
    if (!a.seed) throw ValidationError("--synthesize requires --seed");
    truth = synthesize_walk(a.duration, a.rate);
    NoiseModel nm;
    nm.seed = *a.seed;
    nm.drift_rate = a.drift;
    nm.lio_sigma = a.lio_sigma;
    nm.validate();
    auto streams = simulate_odometry(truth, nm);
    kin = std::move(streams.first);
    lio = thin(streams.second, a.rate, a.lio_rate);
  } else {
    if (a.kin.empty() || a.lio.empty()) throw ValidationError("give --kin and --lio, or --synthesize");
    kin = read_odom_jsonl(a.kin);
    lio = read_odom_jsonl(a.lio);
    if (!a.truth.empty()) truth = read_odom_jsonl(a.truth);
  }
  const ReplayResult rr = replay_fusion(kin, lio, cfg.fusion);
  ensure_dir(a.out);
  const fs::path dir(a.out);
  write_odom_jsonl(dir / "fused.jsonl", rr.fused);
  if (a.synthesize) {
    write_odom_jsonl(dir / "kinematic.jsonl", kin);
    write_odom_jsonl(dir / "lio.jsonl", lio);
    write_odom_jsonl(dir / "truth.jsonl", truth);
  }
  std::cout << "fused " << rr.fused.size() << " sample(s), dropped " << rr.dropped_late << " late\n";
  if (truth.empty()) return kExitOk;

  write_drift_csv(dir / "drift.csv", truth, {{"kinematic", kin}, {"lio", lio}, {"fused", rr.fused}});
  // Terminal and high-frequency error, sampled on the truth stamps.
  auto errors = [&](const std::vector<OdomSample>& s) {
    std::vector<Vec3> e;
    std::size_t j = 0;
    for (const OdomSample& t : truth) {
      while (j + 1 < s.size() && s[j + 1].stamp <= t.stamp + 1e-12) ++j;
      e.push_back(s[j].pose.translation - t.pose.translation);
    }
    return e;
  };
  const double dt = truth.size() > 1 ? truth[1].stamp - truth[0].stamp : 1.0 / a.rate;
  for (const auto& [name, s] : {std::pair<const char*, const std::vector<OdomSample>*>{"kinematic", &kin},
                                {"lio", &lio},
                                {"fused", &rr.fused}}) {
    if (s->empty()) continue;
    const auto e = errors(*s);
    std::printf("%-9s terminal %.4f m  hf power %.3e m^2\n", name, e.back().norm(), high_frequency_power(e, dt));
  }
  return kExitOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::string config, out;
  std::uint64_t seed = 0;
  int frames = 100;
  double bin_ms = 5.0;
};

int cmd_bench(const BenchArgs& a) {
  ScenarioConfig cfg = load_config(a.config);
  cfg.noise.seed = a.seed;
  if (a.frames < 1) throw ValidationError("--frames must be >= 1");
  if (!(a.bin_ms > 0.0)) throw ValidationError("--bin-ms must be positive");
  const Scene scene = cfg.scene.build();
  // Frames along the climb, rendered up front so only extraction is timed.
  const double span = cfg.scene.n_steps * cfg.scene.tread + cfg.start_clearance;
  const auto bases = approach_poses(cfg, a.frames, a.frames > 1 ? span / (a.frames - 1) : 0.0);
  std::vector<RenderResult> frames;
  std::vector<Pose> cams;
  for (int k = 0; k < a.frames; ++k) {
    cams.push_back(compose(bases[k], cfg.camera_mount));
    frames.push_back(render_depth(scene, cams.back(), cfg.intrinsics, cfg.noise, static_cast<std::uint64_t>(k)));
  }
  std::vector<double> ms;
  for (int k = 0; k < a.frames; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto polys = extract_polygon_map(frames[k].depth, cfg.intrinsics, cams[k], cfg.perception);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    (void)polys;
  }
  const double total = std::accumulate(ms.begin(), ms.end(), 0.0);
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) { return sorted[std::min(sorted.size() - 1, static_cast<std::size_t>(q * sorted.size()))]; };
  const double hz_mean = 1000.0 * a.frames / total;
  std::printf("%d frames %dx%d  mean %.2f ms (%.1f Hz)  p50 %.2f  p95 %.2f  max %.2f ms\n", a.frames,
              cfg.intrinsics.width, cfg.intrinsics.height, total / a.frames, hz_mean, pct(0.5), pct(0.95),
              sorted.back());
  const int nbins = static_cast<int>(std::floor(sorted.back() / a.bin_ms)) + 1;
  std::vector<int> hist(nbins, 0);
  for (double m : ms) ++hist[static_cast<int>(std::floor(m / a.bin_ms))];
  const int peak = *std::max_element(hist.begin(), hist.end());
  for (int b = 0; b < nbins; ++b) {
    if (hist[b] == 0) continue;
    const int bar = static_cast<int>(std::lround(40.0 * hist[b] / peak));
    std::printf("  %6.1f-%6.1f ms %5d %s\n", b * a.bin_ms, (b + 1) * a.bin_ms, hist[b], std::string(bar, '#').c_str());
  }
  if (!a.out.empty()) {
    Json h = Json::array();
    for (int b = 0; b < nbins; ++b) h.push_back({{"lo_ms", b * a.bin_ms}, {"count", hist[b]}});
    write_json_file(a.out, Json{{"frames", a.frames},
                                {"mean_ms", total / a.frames},
                                {"hz_mean", hz_mean},
                                {"p50_ms", pct(0.5)},
                                {"p95_ms", pct(0.95)},
                                {"max_ms", sorted.back()},
                                {"frame_ms", ms},
                                {"histogram", h}});
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PolyMap stair-climbing simulator"};
  app.require_subcommand(1);

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render depth frames of the scene along the approach");
  render->add_option("--config", ra.config, "Scenario config (JSON, schema 1)");
  render->add_option("--seed", ra.seed, "Noise seed")->required();
  render->add_option("--out", ra.out, "Output directory")->required();
  render->add_option("--frames", ra.frames, "Number of frames")->capture_default_str();
  render->add_option("--spacing", ra.spacing, "Base advance between frames, metres")->capture_default_str();

  EstimateArgs ea;
  auto* estimate = app.add_subcommand("estimate", "Fuse kinematic and LIO odometry streams");
  estimate->add_option("--config", ea.config, "Scenario config (fusion block)");
  estimate->add_option("--kin", ea.kin, "Kinematic odometry JSONL");
  estimate->add_option("--lio", ea.lio, "LIO odometry JSONL");
  estimate->add_option("--truth", ea.truth, "Ground truth JSONL, enables drift.csv");
  estimate->add_flag("--synthesize", ea.synthesize, "Generate a walk and its noisy streams");
  estimate->add_option("--seed", ea.seed, "Noise seed (required with --synthesize)");
  estimate->add_option("--duration", ea.duration, "Synthesized walk length, s")->capture_default_str();
  estimate->add_option("--rate", ea.rate, "Kinematic rate, Hz")->capture_default_str();
  estimate->add_option("--lio-rate", ea.lio_rate, "LIO rate, Hz")->capture_default_str();
  estimate->add_option("--drift", ea.drift, "Kinematic drift, m/s")->capture_default_str();
  estimate->add_option("--lio-sigma", ea.lio_sigma, "LIO position noise, m")->capture_default_str();
  estimate->add_option("--out", ea.out, "Output directory")->required();

  MapArgs ma;
  auto* map = app.add_subcommand("map", "Extract polygon maps from rendered frames");
  map->add_option("--config", ma.config, "Scenario config (perception block)");
  map->add_option("--frames", ma.frames, "Directory written by render")->required();
  map->add_option("--out", ma.out, "Polygon JSONL")->required();

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Plan footsteps up the stairs on a polygon map");
  plan->add_option("--config", pa.config, "Scenario config");
  plan->add_option("--map", pa.map, "Polygon JSONL written by map")->required();
  plan->add_option("--frame", pa.frame, "Use only the polygons of this frame (file name or index)");
  plan->add_option("--pose", pa.pose, "Base pose JSON {t, q}; default is the start pose");
  plan->add_option("--levels", pa.levels, "Levels to plan (default: all)");
  plan->add_option("--grid", pa.grid, "Write the first level's foothold grid CSV");
  plan->add_option("--out", pa.out, "Plan JSONL")->required();

  RunArgs rua;
  auto* run = app.add_subcommand("run", "Run the closed-loop climbing scenario");
  run->add_option("--config", rua.config, "Scenario config");
  run->add_option("--seed", rua.seed, "Noise seed")->required();
  run->add_option("--mode", rua.mode, "Gait mode override")->check(CLI::IsMember({"DS", "SS"}));
  run->add_option("--out", rua.out, "Output directory for report.json and CSV traces");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time polygon-map extraction per frame");
  bench->add_option("--config", ba.config, "Scenario config");
  bench->add_option("--seed", ba.seed, "Noise seed")->required();
  bench->add_option("--frames", ba.frames, "Number of frames")->capture_default_str();
  bench->add_option("--bin-ms", ba.bin_ms, "Histogram bin width, ms")->capture_default_str();
  bench->add_option("--out", ba.out, "Write the timings as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*render) return cmd_render(ra);
    if (*estimate) return cmd_estimate(ea);
    if (*map) return cmd_map(ma);
    if (*plan) return cmd_plan(pa);
    if (*run) return cmd_run(rua);
    if (*bench) return cmd_bench(ba);
  } catch (const std::exception& e) {
    // Validation, parse and file errors all mean the input was unusable.
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}
