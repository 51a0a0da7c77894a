#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/sim/env.hpp"

namespace pursuit {

struct BlueRecord {
  Vec2 position;  // cell units
  AgentType type = AgentType::camera;

  friend bool operator==(const BlueRecord&, const BlueRecord&) = default;
};

struct StepRecord {
  int t = 0;
  std::vector<BlueRecord> blue;
  Vec2 adversary;  // ground truth, cell units
  std::vector<Observation> observations;
  int det_hist_len = 0;
  Status status = Status::running;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RolloutHeader {
  Domain domain = Domain::prison;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  int t_max = 0;
  std::string config_hash;
  // Tip-off that opens a narco episode; it has no sensor observation.
  std::optional<Detection> initial_detection;

  friend bool operator==(const RolloutHeader&, const RolloutHeader&) = default;
};

// One full episode with ground truth for every step.
struct Rollout {
  RolloutHeader header;
  std::vector<StepRecord> steps;  // contiguous t = 0 .. end

  int num_records() const { return static_cast<int>(steps.size()); }
  int num_steps() const { return steps.empty() ? 0 : steps.back().t; }
  Status status() const { return steps.empty() ? Status::running : steps.back().status; }

  // Shared detection history rebuilt from the observations (first detecting
  // agent per step), plus the narco tip-off.
  std::vector<Detection> detections() const;

  friend bool operator==(const Rollout&, const Rollout&) = default;
};

// JSON-Lines: a header line followed by one line per step.
std::string serialize_rollout(const Rollout& r);
Rollout parse_rollout(const std::string& text);
void write_rollout(const Rollout& r, const std::filesystem::path& path);
Rollout read_rollout(const std::filesystem::path& path);

// Runs one seeded episode with the heuristic policies. When the episode
// would end at step 0 the landmarks are redrawn (up to a bounded number of
// attempts); `redraws`, if given, receives the count.
Rollout simulate_rollout(const RunConfig& config, std::uint64_t seed, const TerrainGrid& field,
                         int* redraws = nullptr);

struct GeneratedSet {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;
  double detection_rate = 0.0;
};

// Writes rollouts base_seed .. base_seed + count - 1 into
// <out_root>/<domain>-<simulation hash>-s<seed>-n<count>/ together with the
// resolved config.
GeneratedSet generate_rollouts(const RunConfig& config, int count, std::uint64_t base_seed,
                               const std::filesystem::path& out_root, int jobs = 1);

// Loads every rollout_*.jsonl in a directory, sorted by file name.
std::vector<Rollout> load_rollouts(const std::filesystem::path& dir);
std::vector<std::filesystem::path> rollout_files(const std::filesystem::path& dir);

// Steps with at least one detection divided by all steps, pooled.
double detection_rate(std::span<const Rollout> rollouts);

struct Split {
  std::vector<int> train, val, test;
};

// Shuffles [0, n) with the seed and cuts it by the ratios (largest remainder
// rounding). Throws std::invalid_argument on bad ratios or n < 3.
Split split_dataset(int n, std::array<double, 3> ratios, std::uint64_t seed);
inline Split split_dataset(int n, std::uint64_t seed) { return split_dataset(n, {2.0 / 3.0, 2.0 / 9.0, 1.0 / 9.0}, seed); }

}  // namespace pursuit
