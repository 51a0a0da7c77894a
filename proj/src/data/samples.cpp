#include "pursuit/data/samples.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pursuit {

double detection_age_feature(int age, int t_max) {
  return std::min(1.0, std::log1p(std::max(0, age)) / std::log1p(std::max(1, t_max)));
}

std::vector<Sample> build_samples(const Rollout& r, int history, int horizon, int stride, int max_detections,
                                  int rollout_id) {
  if (history < 0 || horizon < 0) throw std::invalid_argument("history and horizon must be >= 0");
  if (stride < 1 || max_detections < 1) throw std::invalid_argument("stride and max_detections must be >= 1");

  std::vector<Sample> out;
  const int records = r.num_records();
  if (records == 0) return out;
  const int n_agents = static_cast<int>(r.steps.front().blue.size());
  const double w = r.header.width, h = r.header.height;
  const int t_max = r.header.t_max;
  const auto detections = r.detections();

  for (int t = 0; t + horizon <= records - 1; t += stride) {
    Sample s;
    s.rollout = rollout_id;
    s.t = t;
    s.horizon = horizon;
    s.agents = n_agents;
    s.history = history;
    s.agent_window.reserve(static_cast<std::size_t>(history + 1) * n_agents * kStateDim);
    for (int k = 0; k <= history; ++k) {
      const int src = t - history + k;
      s.window_mask.push_back(src >= 0 ? 1 : 0);
      const StepRecord& step = r.steps[std::max(0, src)];
      for (const auto& b : step.blue) {
        AgentState a;
        a.position = b.position;
        a.type = b.type;
        a.timestep = step.t;
        const auto v = state_vector(a, static_cast<int>(w), static_cast<int>(h), t_max);
        s.agent_window.insert(s.agent_window.end(), v.begin(), v.end());
      }
    }

    // Most recent K detections with d.t <= t, oldest first, front-padded.
    const auto end = std::upper_bound(detections.begin(), detections.end(), t,
                                      [](int tt, const Detection& d) { return tt < d.t; });
    const int available = static_cast<int>(end - detections.begin());
    const int used = std::min(available, max_detections);
    s.detection_features.assign(static_cast<std::size_t>(max_detections) * kDetectionFeatures, 0.0);
    for (int k = 0; k < max_detections - used; ++k) s.detection_features[k * kDetectionFeatures] = 1.0;
    for (int k = 0; k < used; ++k) {
      const Detection& d = detections[available - used + k];
      const int slot = max_detections - used + k;
      s.detection_features[slot * kDetectionFeatures + 0] = detection_age_feature(t - d.t, t_max);
      s.detection_features[slot * kDetectionFeatures + 1] = d.position.x;
      s.detection_features[slot * kDetectionFeatures + 2] = d.position.y;
    }
    s.detection_count = static_cast<double>(used) / max_detections;

    const Vec2 gt = r.steps[t + horizon].adversary;
    s.target = {gt.x / w, gt.y / h};
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> build_samples(std::span<const Rollout> rollouts, std::span<const int> indices, int history,
                                  int horizon, int stride, int max_detections) {
  std::vector<Sample> out;
  for (int i : indices) {
    auto part = build_samples(rollouts[i], history, horizon, stride, max_detections, i);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace pursuit
