#include "polymap/sim.hpp"

#include <cmath>

namespace polymap {

Vec3 drift_direction(std::uint64_t seed) {
  Rng rng = make_stream(seed, "odometry");
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    const Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    const double n = d.norm();
    if (n > 1e-6) return d / n;
  }
}

std::pair<std::vector<OdomSample>, std::vector<OdomSample>> simulate_odometry(
    const std::vector<OdomSample>& truth, const NoiseModel& noise) {
  noise.validate();
  std::vector<OdomSample> kin, lio;
  kin.reserve(truth.size());
  lio.reserve(truth.size());
  if (truth.empty()) return {kin, lio};

  const Vec3 dir = drift_direction(noise.seed);
  Rng rng = make_stream(noise.seed, "lio");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double t0 = truth.front().stamp;
  double last = -std::numeric_limits<double>::infinity();
  for (const OdomSample& s : truth) {
    if (s.stamp <= last) throw ValidationError("simulate_odometry: stamps must be increasing");
    last = s.stamp;

    OdomSample k = s;
    k.source = OdomSource::Kinematic;
    k.pose.translation += noise.drift_rate * (s.stamp - t0) * dir;
    kin.push_back(k);

    OdomSample l = s;
    l.source = OdomSource::Lio;
    if (noise.lio_sigma > 0.0) {
      l.pose.translation += noise.lio_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
    if (noise.lio_sigma_rot > 0.0) {
      l.pose.rotation = l.pose.rotation * rotation_exp(noise.lio_sigma_rot * Vec3(gauss(rng), gauss(rng), gauss(rng)));
    }
    lio.push_back(l);
  }
  return {kin, lio};
}

std::vector<OdomSample> synthesize_walk(double duration, double rate, double speed) {
  if (!(duration > 0.0 && rate > 0.0)) throw ValidationError("synthesize_walk: duration and rate must be positive");
  constexpr double kPi = 3.14159265358979323846;
  const long n = std::lround(duration * rate);
  std::vector<OdomSample> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / rate;
    OdomSample s;
    s.stamp = t;
    s.source = OdomSource::Truth;
    // Gait-like motion: forward walk, 0.8 Hz lateral sway, 1.6 Hz bounce.
    const double yaw = 0.1 * std::sin(2 * kPi * t / 30.0);
    s.pose.translation = Vec3(speed * t, 0.03 * std::sin(2 * kPi * 0.8 * t), 0.8 + 0.01 * std::sin(2 * kPi * 1.6 * t));
    s.pose.rotation = Rotation::about_z(yaw);
    out.push_back(s);
  }
  return out;
}

}  // namespace polymap
