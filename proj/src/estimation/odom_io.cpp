#include "polymap/state_estimator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace polymap {

std::string_view to_string(OdomSource s) {
  switch (s) {
    case OdomSource::Kinematic: return "kinematic";
    case OdomSource::Lio: return "lio";
    case OdomSource::Fused: return "fused";
    case OdomSource::Truth: return "truth";
  }
  return "?";
}

OdomSource odom_source_from_string(std::string_view s) {
  if (s == "kinematic") return OdomSource::Kinematic;
  if (s == "lio") return OdomSource::Lio;
  if (s == "fused") return OdomSource::Fused;
  if (s == "truth") return OdomSource::Truth;
  throw ValidationError("odometry: unknown source '" + std::string(s) + "'");
}

Json to_json(const OdomSample& s) {
  Json j = to_json(s.pose);
  j["stamp"] = s.stamp;
  j["source"] = std::string(to_string(s.source));
  return j;
}

OdomSample odom_sample_from_json(const Json& j) {
  OdomSample s;
  try {
    s.stamp = j.at("stamp").get<double>();
    s.source = odom_source_from_string(j.at("source").get<std::string>());
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("odometry json: ") + e.what());
  }
  if (!std::isfinite(s.stamp)) throw ValidationError("odometry json: stamp must be finite");
  s.pose = pose_from_json(j);
  return s;
}

std::vector<OdomSample> read_odom_jsonl(const std::filesystem::path& path) {
  std::vector<OdomSample> out;
  for (const Json& j : read_jsonl_file(path)) out.push_back(odom_sample_from_json(j));
  return out;
}

void write_odom_jsonl(const std::filesystem::path& path, const std::vector<OdomSample>& samples) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const OdomSample& s : samples) f << to_json(s).dump() << '\n';
}

ReplayResult replay_fusion(const std::vector<OdomSample>& kinematic, const std::vector<OdomSample>& lio,
                           const FusionParams& fp) {
  ReplayResult out;
  ComplementaryFusion fusion(fp);
  if (kinematic.empty()) return out;

  double fallback_dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < kinematic.size(); ++i) {
    const double d = kinematic[i].stamp - kinematic[i - 1].stamp;
    if (d > 0.0 && d < fallback_dt) fallback_dt = d;
  }
  if (!std::isfinite(fallback_dt)) fallback_dt = 1e-3;

  double last_kin = -std::numeric_limits<double>::infinity();
  double last_lio = -std::numeric_limits<double>::infinity();
  double last_blend = kinematic.front().stamp;
  std::size_t j = 0;
  for (const OdomSample& k : kinematic) {
    if (k.stamp < last_kin) {
      ++out.dropped_late;
      continue;
    }
    last_kin = k.stamp;
    fusion.on_kinematic(k.pose);
    for (; j < lio.size() && lio[j].stamp <= k.stamp; ++j) {
      if (lio[j].stamp < last_lio) {
        ++out.dropped_late;
        continue;
      }
      last_lio = lio[j].stamp;
      double dt = k.stamp - last_blend;
      if (!(dt > 0.0)) dt = fallback_dt;
      fusion.on_lio(lio[j].pose, dt);
      last_blend = k.stamp;
    }
    out.fused.push_back({k.stamp, fusion.pose(), OdomSource::Fused});
  }
  return out;
}

void write_drift_csv(const std::filesystem::path& path, const std::vector<OdomSample>& truth,
                     const std::vector<std::pair<std::string, std::vector<OdomSample>>>& streams) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "t";
  for (const auto& [name, _] : streams) f << ',' << name << "_ex," << name << "_ey," << name << "_ez";
  f << '\n';
  f << std::setprecision(9);

  std::vector<std::size_t> cursor(streams.size(), 0);
  for (const OdomSample& t : truth) {
    bool ready = true;
    for (std::size_t s = 0; s < streams.size(); ++s) {
      const auto& v = streams[s].second;
      while (cursor[s] + 1 < v.size() && v[cursor[s] + 1].stamp <= t.stamp + 1e-9) ++cursor[s];
      if (v.empty() || v[cursor[s]].stamp > t.stamp + 1e-9) ready = false;
    }
    if (!ready) continue;
    f << t.stamp;
    for (std::size_t s = 0; s < streams.size(); ++s) {
      const Vec3 e = streams[s].second[cursor[s]].pose.translation - t.pose.translation;
      f << ',' << e.x() << ',' << e.y() << ',' << e.z();
    }
    f << '\n';
  }
}

double high_frequency_power(const std::vector<Vec3>& errors, double dt, double window) {
  if (!(dt > 0.0) || !(window > 0.0)) throw ValidationError("high_frequency_power: dt and window must be positive");
  const long half = std::max<long>(1, std::lround(window / (2.0 * dt)));
  const long n = static_cast<long>(errors.size());
  if (n < 2 * half + 1) throw ValidationError("high_frequency_power: series shorter than the window");

  Vec3 sum = Vec3::Zero();
  for (long i = 0; i < 2 * half + 1; ++i) sum += errors[i];
  double acc = 0.0;
  long count = 0;
  for (long c = half; c + half < n; ++c) {
    if (c > half) sum += errors[c + half] - errors[c - half - 1];
    const Vec3 r = errors[c] - sum / static_cast<double>(2 * half + 1);
    acc += r.squaredNorm();
    ++count;
  }
  return acc / static_cast<double>(count);
}

}  // namespace polymap
