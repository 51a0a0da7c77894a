#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pursuit/data/rollout.hpp"

namespace pursuit {

// One (X, Y) training pair.
//   X = blue-state window S^{t-H..t} of shape (H+1) x N x D plus the K most
//       recent detections as (age, x, y) triples, oldest first;
//   Y = adversary position at t + horizon, normalized.
struct Sample {
  int rollout = -1;
  int t = 0;
  int horizon = 0;
  int agents = 0;   // N
  int history = 0;  // H

  std::vector<double> agent_window;        // (H+1) * N * kStateDim, row-major
  std::vector<std::uint8_t> window_mask;   // H+1; 0 marks front padding
  std::vector<double> detection_features;  // K * 3
  double detection_count = 0.0;            // min(N_d, K) / K
  Vec2 target;
};

inline constexpr int kDetectionFeatures = 3;

// Age feature of a detection seen `age` steps ago: log1p(age) / log1p(t_max),
// so 0 is "now" and 1 is "one full episode ago". Padding entries use age 1.
double detection_age_feature(int age, int t_max);

// Samples for t = 0, stride, 2*stride, ... with t + horizon inside the episode.
// Windows that reach before t = 0 repeat the first state and are masked.
std::vector<Sample> build_samples(const Rollout& rollout, int history, int horizon, int stride, int max_detections,
                                  int rollout_id = -1);

std::vector<Sample> build_samples(std::span<const Rollout> rollouts, std::span<const int> indices, int history,
                                  int horizon, int stride, int max_detections);

}  // namespace pursuit
