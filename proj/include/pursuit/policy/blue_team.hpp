#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/sim/env.hpp"
#include "pursuit/sim/random.hpp"

namespace pursuit {

enum class BlueMode { converge, intercept, spiral, random_walk };

std::string_view to_string(BlueMode m);

struct BlueMind {
  BlueMode mode = BlueMode::random_walk;
  Vec2 waypoint;  // cell units
  bool has_waypoint = false;

  std::vector<Vec2> spiral;
  std::size_t spiral_index = 0;
  int spiral_anchor_t = -1;  // detection time the spiral is centred on

  Vec2 last_position;
  double last_speed = 0.0;
};

// Team mode from the shared history:
//   no detections                        -> random_walk
//   latest older than `staleness` steps  -> spiral
//   exactly one detection                -> converge
//   otherwise                            -> intercept
BlueMode select_mode(std::span<const Detection> history, int t, int staleness);

// Extrapolates the last two detections' velocity to t + horizon.
// Normalized coordinates, clipped to [0, 1]^2.
Vec2 intercept_point(const Detection& previous, const Detection& latest, int t, int horizon);

// Archimedean spiral r(theta) = spacing * theta / 2pi for theta in
// [0, 2pi * turns], sampled so consecutive points are at most 2 * spacing
// apart and clipped to [0, width] x [0, height].
std::vector<Vec2> spiral_waypoints(Vec2 center, double spacing, int turns, double width, double height,
                                   double start_angle = 0.0);

class BlueTeamPolicy {
 public:
  BlueTeamPolicy(const DomainSpec& spec, const PolicyParams& params, std::uint64_t seed);

  // One action per blue agent; cameras always stand still.
  std::vector<Action> act(const EnvState& env);

  const std::vector<BlueMind>& minds() const { return minds_; }

 private:
  void ensure_minds(const EnvState& env);
  Vec2 random_waypoint(const EnvState& env, std::size_t agent);

  DomainSpec spec_;
  PolicyParams params_;
  std::uint64_t seed_;
  std::vector<BlueMind> minds_;
  std::vector<Rng> streams_;
};

}  // namespace pursuit
