#include "polymap/footstep_planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polymap {

std::string_view to_string(GaitMode m) { return m == GaitMode::DS ? "DS" : "SS"; }

GaitMode gait_mode_from_string(std::string_view s) {
  if (s == "DS" || s == "ds") return GaitMode::DS;
  if (s == "SS" || s == "ss") return GaitMode::SS;
  throw ConfigError("gait: mode must be DS or SS, got '" + std::string(s) + "'");
}

std::string_view to_string(Side s) { return s == Side::Left ? "L" : "R"; }

long GaitParams::step_ticks() const { return std::lround((swing_time() + stance_time) / dt); }

void GaitParams::validate() const {
  if (!(t_lift > 0.0 && t_land > 0.0 && dt > 0.0)) throw ConfigError("gait: t_lift, t_land and dt must be positive");
  if (!(z_max > 0.0)) throw ConfigError("gait: z_max must be positive");
  if (!(y_b >= 0.0 && z_t > 0.0)) throw ConfigError("gait: y_b must be >= 0 and z_t > 0");
  if (!(stance_time >= 0.0)) throw ConfigError("gait: stance_time must be >= 0");
  if (dt > swing_time()) throw ConfigError("gait: dt longer than the swing");
}

Vec3 foot_from_torso(const TorsoPose& p_t, Side side, const GaitParams& g) {
  const Vec3 b(0.0, side == Side::Left ? g.y_b : -g.y_b, -g.z_t);
  return p_t.position() + Rotation::about_z(p_t.phi) * b;
}

SwingSample swing_profile(double t, double x_start, double x_end, double z0, const GaitParams& g) {
  const double T = g.swing_time();
  if (!(t >= 0.0 && t <= T)) throw std::out_of_range("swing_profile: t outside [0, T]");
  constexpr double kPi = 3.14159265358979323846;
  SwingSample s;
  s.t = t;
  s.x = x_start + (x_end - x_start) * (t / g.t_step());
  if (t <= g.t_lift) {
    s.z = g.z_max * std::sin(kPi * t / (2.0 * g.t_lift));
  } else {
    s.z = z0 + (g.z_max - z0) * std::cos(kPi * (t - g.t_lift) / (2.0 * g.t_land));
  }
  if (t == T) s.z = z0;
  return s;
}

std::vector<SwingSample> sample_swing(double x_start, double x_end, double z0, const GaitParams& g) {
  const double T = g.swing_time();
  constexpr double kSnap = 1e-12;
  std::vector<double> ts;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * g.dt;
    if (t > T + kSnap) break;
    if (std::abs(t - g.t_lift) <= kSnap || std::abs(t - T) <= kSnap) continue;
    ts.push_back(t);
  }
  ts.push_back(g.t_lift);
  ts.push_back(T);
  std::sort(ts.begin(), ts.end());
  std::vector<SwingSample> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(swing_profile(t, x_start, x_end, z0, g));
  return out;
}

}  // namespace polymap
