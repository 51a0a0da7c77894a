#include "pursuit/policy/blue_team.hpp"

#include <algorithm>
#include <cmath>

namespace pursuit {

namespace {

constexpr double kArrived = 1e-6;

Action head_towards(const AgentState& a, Vec2 target) {
  const Vec2 d = target - a.position;
  const double len = d.norm();
  if (len <= kArrived || a.speed == 0.0) return {0.0, 0.0};
  return {std::atan2(d.y, d.x), std::min(len, a.speed)};
}

}  // namespace

std::string_view to_string(BlueMode m) {
  switch (m) {
    case BlueMode::converge: return "converge";
    case BlueMode::intercept: return "intercept";
    case BlueMode::spiral: return "spiral";
    case BlueMode::random_walk: return "random_walk";
  }
  return "random_walk";
}

BlueMode select_mode(std::span<const Detection> history, int t, int staleness) {
  if (history.empty()) return BlueMode::random_walk;
  if (t - history.back().t > staleness) return BlueMode::spiral;
  if (history.size() == 1) return BlueMode::converge;
  return BlueMode::intercept;
}

Vec2 intercept_point(const Detection& previous, const Detection& latest, int t, int horizon) {
  const int dt = latest.t - previous.t;
  if (dt <= 0) return latest.position;
  const Vec2 velocity = (latest.position - previous.position) * (1.0 / dt);
  const Vec2 p = latest.position + velocity * static_cast<double>(t - latest.t + horizon);
  return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)};
}

std::vector<Vec2> spiral_waypoints(Vec2 center, double spacing, int turns, double width, double height,
                                   double start_angle) {
  auto clip = [&](Vec2 p) { return Vec2{std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)}; };
  std::vector<Vec2> pts{clip(center)};
  if (turns <= 0 || spacing <= 0.0) return pts;
  const double theta_end = 2.0 * kPi * turns;
  double theta = 0.0;
  while (theta < theta_end) {
    const double r = spacing * theta / (2.0 * kPi);
    theta = std::min(theta_end, theta + std::min(kPi / 4.0, spacing / std::max(r, spacing)));
    const double rr = spacing * theta / (2.0 * kPi);
    pts.push_back(clip({center.x + rr * std::cos(theta + start_angle), center.y + rr * std::sin(theta + start_angle)}));
  }
  return pts;
}

BlueTeamPolicy::BlueTeamPolicy(const DomainSpec& spec, const PolicyParams& params, std::uint64_t seed)
    : spec_(spec), params_(params), seed_(seed) {}

void BlueTeamPolicy::ensure_minds(const EnvState& env) {
  if (minds_.size() == env.blue.size()) return;
  minds_.assign(env.blue.size(), BlueMind{});
  streams_.clear();
  for (std::size_t i = 0; i < env.blue.size(); ++i) {
    streams_.emplace_back(derive_seed(seed_, 100 + i));
    minds_[i].last_position = env.blue[i].position;
  }
}

Vec2 BlueTeamPolicy::random_waypoint(const EnvState& env, std::size_t agent) {
  const TerrainGrid& g = *env.terrain;
  Rng& rng = streams_[agent];
  const AgentType type = env.blue[agent].type;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{rng.uniform(0.0, g.width()), rng.uniform(0.0, g.height())};
    if (g.traversable_for(g.cell_of(p), type)) return p;
  }
  return env.blue[agent].position;
}

std::vector<Action> BlueTeamPolicy::act(const EnvState& env) {
  ensure_minds(env);
  const TerrainGrid& g = *env.terrain;
  const BlueMode mode = select_mode(env.detections, env.step, params_.staleness);

  std::size_t mobile_count = 0;
  for (const auto& a : env.blue) mobile_count += a.type != AgentType::camera;

  std::vector<Action> actions(env.blue.size());
  std::size_t mobile_index = 0;
  for (std::size_t i = 0; i < env.blue.size(); ++i) {
    const AgentState& a = env.blue[i];
    BlueMind& m = minds_[i];
    m.mode = mode;
    if (a.type == AgentType::camera) continue;

    // Commanded to move last step but did not (blocked by land).
    const bool stuck = m.last_speed > 0.0 && a.position == m.last_position;
    switch (mode) {
      case BlueMode::random_walk:
        if (!m.has_waypoint || distance(a.position, m.waypoint) <= kArrived || stuck) {
          m.waypoint = random_waypoint(env, i);
          m.has_waypoint = true;
        }
        break;
      case BlueMode::converge:
        m.waypoint = g.denormalize(env.detections.back().position);
        m.has_waypoint = true;
        break;
      case BlueMode::intercept: {
        const auto& d = env.detections;
        m.waypoint = g.denormalize(intercept_point(d[d.size() - 2], d.back(), env.step, params_.intercept_horizon));
        m.has_waypoint = true;
        break;
      }
      case BlueMode::spiral: {
        const Detection& anchor = env.detections.back();
        if (m.spiral_anchor_t != anchor.t || m.spiral.empty()) {
          // Each mobile agent starts its spiral at its own angle.
          const double angle = 2.0 * kPi * mobile_index / std::max<std::size_t>(1, mobile_count);
          m.spiral = spiral_waypoints(g.denormalize(anchor.position), spec_.scaled(params_.spiral_spacing),
                                      params_.spiral_turns, g.width(), g.height(), angle);
          m.spiral_index = 0;
          m.spiral_anchor_t = anchor.t;
        }
        while (m.spiral_index < m.spiral.size() &&
               (distance(a.position, m.spiral[m.spiral_index]) <= kArrived || stuck)) {
          m.spiral_index += 1;
          if (stuck) break;
        }
        if (m.spiral_index >= m.spiral.size()) m.spiral_index = 0;
        m.waypoint = m.spiral[m.spiral_index];
        m.has_waypoint = true;
        break;
      }
    }
    actions[i] = head_towards(a, m.waypoint);
    ++mobile_index;
  }

  for (std::size_t i = 0; i < env.blue.size(); ++i) {
    minds_[i].last_speed = actions[i].speed;
    minds_[i].last_position = env.blue[i].position;
  }
  return actions;
}

}  // namespace pursuit
