#include "polymap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace polymap {

std::vector<ExecutedStep> execute_plan(const FootstepPlan& plan, const NoiseModel& noise, Rng& actuation,
                                       const FootGeometry& foot, const StaircaseScene* scene,
                                       const Pose& plan_to_true, const Pose& to_true) {
  noise.validate();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ExecutedStep> out;
  out.reserve(plan.steps.size());
  for (const FootStep& s : plan.steps) {
    ExecutedStep e;
    e.index = s.index;
    e.side = s.side;
    e.t_planned = s.t;
    e.t_executed = s.t + (s.swing.empty() ? 0.0 : s.swing.back().t);
    e.planned_W = s.p_f;
    e.intended = plan_to_true.apply(s.p_f);
    e.executed = to_true.apply(s.p_f);
    if (noise.actuation_sigma > 0.0) {
      const double dx = gauss(actuation), dy = gauss(actuation);
      e.executed += noise.actuation_sigma * Vec3(dx, dy, 0.0);
    }
    if (scene) {
      const Vec3 local = invert(scene->first_riser).apply(e.intended);
      e.level = static_cast<int>(std::clamp<long>(std::lround(local.z() / scene->rise), 0, scene->n_steps));
      e.executed.z() = scene->height_at(e.executed.head<2>());
      const double yaw = s.yaw + to_true.rotation.yaw();
      e.on_tread = scene->rectangle_on_level(foot_rectangle(e.executed, yaw, foot), e.level);
    }
    e.error = (e.executed - e.intended).head<2>().norm();
    out.push_back(e);
  }
  return out;
}

void write_tracking_csv(const std::filesystem::path& path, const FootstepPlan& plan,
                        const std::vector<ExecutedStep>& executed) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "step,side,t,x_des,z_des,x_exec,z_exec\n" << std::setprecision(9);
  const std::size_t n = std::min(plan.steps.size(), executed.size());
  for (std::size_t k = 0; k < n; ++k) {
    const FootStep& s = plan.steps[k];
    const ExecutedStep& e = executed[k];
    if (s.swing.empty()) continue;
    const double T = s.swing.back().t;
    const Vec3 off = e.executed - e.intended;
    for (const SwingSample& q : s.swing) {
      const double a = T > 0.0 ? q.t / T : 1.0;
      const double z_des = s.p_start.z() + q.z;
      f << s.index << ',' << to_string(s.side) << ',' << s.t + q.t << ',' << q.x << ',' << z_des << ','
        << q.x + a * off.x() << ',' << z_des + a * off.z() << '\n';
    }
  }
}

}  // namespace polymap
