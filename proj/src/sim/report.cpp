#include "polymap/sim.hpp"

#include <algorithm>

namespace polymap {

double RunReport::detection_hz_mean() const {
  if (frames == 0 || perception_seconds <= 0.0) return 0.0;
  return static_cast<double>(frames) / perception_seconds;
}

double RunReport::detection_hz_min() const {
  if (frames == 0 || frame_seconds_max <= 0.0) return 0.0;
  return 1.0 / frame_seconds_max;
}

Json RunReport::deterministic_json() const {
  Json steps = Json::array();
  for (const ExecutedStep& e : executed) {
    steps.push_back({{"i", e.index},
                     {"side", std::string(e.side == Side::Left ? "L" : "R")},
                     {"t_planned", e.t_planned},
                     {"t_executed", e.t_executed},
                     {"planned", polymap::to_json(e.planned_W)},
                     {"intended", polymap::to_json(e.intended)},
                     {"executed", polymap::to_json(e.executed)},
                     {"error_mm", e.error * 1000.0},
                     {"level", e.level},
                     {"on_tread", e.on_tread}});
  }
  Json track = Json::array();
  for (const TrackingSample& s : tracking) {
    track.push_back({s.t, s.error.x(), s.error.y(), s.error.z()});
  }
  return Json{{"status", status},
              {"message", message},
              {"T_total", T_total},
              {"steps_planned", steps_planned},
              {"steps_completed", steps_completed},
              {"levels_completed", levels_completed},
              {"all_on_tread", all_on_tread},
              {"e_m_mm", e_m_mm},
              {"step_errors_mm", step_errors_mm},
              {"steps", steps},
              {"tracking", track}};
}

Json RunReport::to_json() const {
  Json j = deterministic_json();
  j["timing"] = {{"frames", frames},
                 {"perception_seconds", perception_seconds},
                 {"detection_hz_mean", detection_hz_mean()},
                 {"detection_hz_min", detection_hz_min()}};
  return j;
}

}  // namespace polymap
