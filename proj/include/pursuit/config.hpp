#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pursuit/sim/geometry.hpp"

namespace pursuit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Roster entry for one blue agent type. Speeds and radii are in reference
// (full-scale) cells and are multiplied by DomainSpec::scale at use.
struct BlueAgentSpec {
  int count = 0;
  double speed = 0.0;
  double radius = 0.0;
};

struct DomainSpec {
  Domain domain = Domain::prison;
  double scale = 1.0 / 16.0;
  int ref_width = 2428;
  int ref_height = 2428;
  int t_max = 4320;
  std::uint64_t map_seed = 0;

  double visibility_min = 0.1;
  double dark_forest_threshold = 0.3;
  double noise_cell = 320.0;  // reference cells per noise lattice cell

  int known_hideouts = 2;
  int unknown_hideouts = 3;
  int rendezvous = 0;
  double landmark_separation = 300.0;
  double capture_radius = 20.0;

  double adversary_speed = 7.5;
  double adversary_sense_radius = 250.0;

  // Indexed by AgentType (camera .. marine_vessel).
  std::array<BlueAgentSpec, kBlueTypeCount> blue{};

  int width() const;
  int height() const;
  double scaled(double reference_value) const { return reference_value * scale; }
  const BlueAgentSpec& roster(AgentType t) const;
  BlueAgentSpec& roster(AgentType t);
};

struct PolicyParams {
  double forest_weight = 2.0;
  int evade_timer = 60;
  int max_evasions = 3;  // evade entries before every sighting escalates; 0 = unlimited
  int staleness = 30;
  int intercept_horizon = 10;
  double spiral_spacing = 60.0;  // reference cells
  int spiral_turns = 3;
};

struct DatasetParams {
  int history = 8;
  int stride = 5;
  int max_detections = 16;
};

struct ModelConfig {
  int components = 4;
  int embed = 64;
  int hidden = 64;
  double mi_weight = 0.1;
  bool use_gnn = false;
  bool use_mi = true;
  bool use_omega_mm = true;
  bool mi_sweep = false;
  int horizon = 0;
  int history = 8;
  int max_detections = 16;
  int agents = 0;     // filled from the data at train time
  int state_dim = 0;  // filled from the data at train time
};

struct TrainParams {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;
};

struct EvalParams {
  double delta = 0.05;
  double p_threshold = 0.5;
  int ct_samples = 2000;
  bool ade_top_component = false;
};

// Fully resolved configuration: one file plus command line overrides.
struct RunConfig {
  DomainSpec domain;
  PolicyParams policy;
  DatasetParams dataset;
  ModelConfig model;
  TrainParams train;
  EvalParams eval;

  static RunConfig defaults(Domain d);

  // Parses INI text. Unknown keys raise ConfigError naming the key.
  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::filesystem::path& path);

  // Applies "section.key=value" overrides on top of this config.
  void apply_overrides(const std::vector<std::string>& assignments);

  // Canonical INI text of every resolved field, in fixed order.
  std::string to_ini() const;

  // FNV-1a over the canonical text; 16 lowercase hex digits.
  std::string hash() const;

  // Hash over the sections that influence rollout generation only.
  std::string simulation_hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace pursuit
