#include "pursuit/sim/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pursuit/sim/random.hpp"

namespace pursuit {

namespace {

constexpr double kSpeedSlack = 1e-9;

Cell random_cell(Rng& rng, int x0, int x1, int y0, int y1) {
  x1 = std::max(x1, x0 + 1);
  y1 = std::max(y1, y0 + 1);
  return {x0 + static_cast<int>(rng.below(x1 - x0)), y0 + static_cast<int>(rng.below(y1 - y0))};
}

// Rejection-samples a cell the agent type may occupy inside the box.
Cell place(Rng& rng, const TerrainGrid& g, AgentType type, int x0, int x1, int y0, int y1) {
  x0 = std::clamp(x0, 0, g.width() - 1);
  y0 = std::clamp(y0, 0, g.height() - 1);
  x1 = std::clamp(x1, x0 + 1, g.width());
  y1 = std::clamp(y1, y0 + 1, g.height());
  for (int i = 0; i < 10000; ++i) {
    const Cell c = random_cell(rng, x0, x1, y0, y1);
    if (g.traversable_for(c, type)) return c;
  }
  for (int i = 0; i < 100000; ++i) {
    const Cell c = random_cell(rng, 0, g.width(), 0, g.height());
    if (g.traversable_for(c, type)) return c;
  }
  throw TerrainError("no traversable cell to place agent");
}

void check_termination(EnvState& s) {
  const TerrainGrid& g = *s.terrain;
  const Cell here = g.cell_of(s.adversary.position);
  if (s.domain == Domain::narco) {
    for (std::size_t i = 0; i < g.rendezvous().size(); ++i)
      if (g.rendezvous()[i] == here) s.rendezvous_visited[i] = 1;
  }
  const bool may_hide = s.domain == Domain::prison || s.all_rendezvous_visited();
  if (may_hide)
    for (const auto& h : g.hideouts())
      if (h.cell == here) {
        s.status = Status::reached_hideout;
        return;
      }
  if (s.domain == Domain::narco)
    for (const auto& b : s.blue)
      if (b.type == AgentType::marine_vessel && distance(b.position, s.adversary.position) <= s.capture_radius) {
        s.status = Status::captured;
        return;
      }
}

void sense_all(EnvState& s) {
  const TerrainGrid& g = *s.terrain;
  s.observations.resize(s.blue.size());
  int first = -1;
  for (std::size_t i = 0; i < s.blue.size(); ++i) {
    s.observations[i] = sense(s.blue[i], s.adversary.position, g);
    if (s.observations[i].detected && first < 0) first = static_cast<int>(i);
  }
  if (first < 0) return;
  // Simultaneous sightings collapse to one history entry per step.
  if (!s.detections.empty() && s.detections.back().t == s.step) return;
  s.detections.push_back({s.step, g.normalize(s.adversary.position), first});
}

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::running: return "running";
    case Status::reached_hideout: return "reached_hideout";
    case Status::captured: return "captured";
    case Status::timeout: return "timeout";
  }
  return "running";
}

Status parse_status(std::string_view s) {
  if (s == "running") return Status::running;
  if (s == "reached_hideout") return Status::reached_hideout;
  if (s == "captured") return Status::captured;
  if (s == "timeout") return Status::timeout;
  throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

bool EnvState::all_rendezvous_visited() const {
  return std::all_of(rendezvous_visited.begin(), rendezvous_visited.end(), [](auto v) { return v != 0; });
}

std::vector<double> state_vector(const AgentState& a, int width, int height, int t_max) {
  std::vector<double> v(kStateDim, 0.0);
  v[0] = a.position.x / width;
  v[1] = a.position.y / height;
  v[2 + static_cast<int>(a.type)] = 1.0;
  v[kStateDim - 1] = static_cast<double>(a.timestep) / t_max;
  return v;
}

double effective_radius(const AgentState& agent, const TerrainGrid& terrain, Cell target_cell) {
  return agent.detect_radius_base * terrain.visibility(target_cell);
}

Observation sense(const AgentState& blue, Vec2 adversary_pos, const TerrainGrid& terrain) {
  const double r = effective_radius(blue, terrain, terrain.cell_of(adversary_pos));
  if (distance(blue.position, adversary_pos) <= r) return {true, terrain.normalize(adversary_pos)};
  return {false, {0.0, 0.0}};
}

Vec2 integrate_motion(Vec2 pos, Action a, AgentType type, const TerrainGrid& g) {
  if (a.speed == 0.0) return pos;
  const Vec2 target = g.clamp({pos.x + a.speed * std::cos(a.heading), pos.y + a.speed * std::sin(a.heading)});
  if (g.traversable_for(g.cell_of(target), type)) return target;
  const Vec2 slide_x{target.x, pos.y};
  if (g.traversable_for(g.cell_of(slide_x), type)) return slide_x;
  const Vec2 slide_y{pos.x, target.y};
  if (g.traversable_for(g.cell_of(slide_y), type)) return slide_y;
  return pos;
}

EnvState reset_env(const DomainSpec& spec, std::shared_ptr<const TerrainGrid> terrain, std::uint64_t seed) {
  if (!terrain) throw EnvError("reset_env needs a terrain");
  const TerrainGrid& g = *terrain;
  const int w = g.width(), h = g.height();
  Rng rng(derive_seed(seed, 3));

  EnvState s;
  s.terrain = terrain;
  s.domain = spec.domain;
  s.t_max = spec.t_max;
  s.capture_radius = spec.scaled(spec.capture_radius);
  s.rendezvous_visited.assign(g.rendezvous().size(), 0);

  s.adversary.type = AgentType::adversary;
  s.adversary.speed = spec.scaled(spec.adversary_speed);
  s.adversary.detect_radius_base = spec.scaled(spec.adversary_sense_radius);
  Cell start;
  if (spec.domain == Domain::prison) {
    const double sep = landmark_spacing(spec);
    start = place(rng, g, AgentType::adversary, w / 4, 3 * w / 4, h / 4, 3 * h / 4);
    for (int i = 0; i < 1000; ++i) {
      const bool clear = std::all_of(g.hideouts().begin(), g.hideouts().end(),
                                     [&](const Hideout& hd) { return distance(cell_center(hd.cell), cell_center(start)) >= sep; });
      if (clear) break;
      start = place(rng, g, AgentType::adversary, w / 4, 3 * w / 4, h / 4, 3 * h / 4);
    }
  } else {
    start = place(rng, g, AgentType::adversary, 0, std::max(1, w * 3 / 20), 0, h);
  }
  s.adversary.position = cell_center(start);

  for (int ti = 0; ti < kBlueTypeCount; ++ti) {
    const auto type = static_cast<AgentType>(ti);
    const BlueAgentSpec& r = spec.roster(type);
    for (int k = 0; k < r.count; ++k) {
      AgentState a;
      a.type = type;
      a.speed = type == AgentType::camera ? 0.0 : spec.scaled(r.speed);
      a.detect_radius_base = spec.scaled(r.radius);
      Cell c;
      if (type == AgentType::search_party) {
        const int spread = std::max(2, static_cast<int>(spec.scaled(300.0)));
        c = place(rng, g, type, start.x - spread, start.x + spread, start.y - spread, start.y + spread);
      } else if (type == AgentType::marine_vessel) {
        c = place(rng, g, type, w * 3 / 10, w, 0, h);
      } else {
        c = place(rng, g, type, 0, w, 0, h);
      }
      a.position = cell_center(c);
      s.blue.push_back(a);
    }
  }

  if (spec.domain == Domain::narco) s.detections.push_back({0, g.normalize(s.adversary.position), -1});
  sense_all(s);
  check_termination(s);
  return s;
}

void step_env(EnvState& s, std::span<const Action> blue_actions, Action adversary_action) {
  if (!s.running()) throw EnvError("step_env called on a terminated episode (" + std::string(to_string(s.status)) + ")");
  if (blue_actions.size() != s.blue.size())
    throw EnvError("expected " + std::to_string(s.blue.size()) + " blue actions, got " +
                   std::to_string(blue_actions.size()));
  const TerrainGrid& g = *s.terrain;

  auto check_speed = [](const AgentState& a, const Action& act) {
    if (!(act.speed >= 0.0) || act.speed > a.speed + kSpeedSlack)
      throw EnvError("action speed " + std::to_string(act.speed) + " exceeds max " + std::to_string(a.speed) +
                     " for " + std::string(to_string(a.type)));
  };
  for (std::size_t i = 0; i < s.blue.size(); ++i) check_speed(s.blue[i], blue_actions[i]);
  check_speed(s.adversary, adversary_action);

  s.step += 1;
  for (std::size_t i = 0; i < s.blue.size(); ++i) {
    auto& a = s.blue[i];
    a.position = integrate_motion(a.position, blue_actions[i], a.type, g);
    a.timestep = s.step;
  }
  s.adversary.position = integrate_motion(s.adversary.position, adversary_action, AgentType::adversary, g);
  s.adversary.timestep = s.step;

  sense_all(s);
  check_termination(s);
  if (s.running() && s.step >= s.t_max) s.status = Status::timeout;
}

}  // namespace pursuit
