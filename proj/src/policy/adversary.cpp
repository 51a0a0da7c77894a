#include "pursuit/policy/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "pursuit/sim/random.hpp"

namespace pursuit {

AdversaryPolicy::AdversaryPolicy(const DomainSpec& spec, const PolicyParams& params, std::uint64_t seed)
    : spec_(spec), params_(params), seed_(seed) {}

void AdversaryPolicy::reset(const EnvState& env) {
  const TerrainGrid& g = *env.terrain;
  mind_ = AdversaryMind{};
  notes_.clear();
  Rng rng(derive_seed(seed_, 4));

  std::vector<Cell> unknown;
  for (const auto& h : g.hideouts())
    if (!h.known) unknown.push_back(h.cell);
  if (unknown.empty())
    for (const auto& h : g.hideouts()) unknown.push_back(h.cell);
  if (unknown.empty()) throw EnvError("adversary needs at least one hideout");
  mind_.travel_hideout = unknown[rng.below(unknown.size())];

  // Rendezvous points are visited nearest-first from the start.
  std::vector<int> remaining(g.rendezvous().size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);
  Vec2 from = env.adversary.position;
  while (!remaining.empty()) {
    auto best = std::min_element(remaining.begin(), remaining.end(), [&](int a, int b) {
      const double da = distance(from, cell_center(g.rendezvous()[a]));
      const double db = distance(from, cell_center(g.rendezvous()[b]));
      return da != db ? da < db : g.rendezvous()[a] < g.rendezvous()[b];
    });
    mind_.rendezvous_order.push_back(*best);
    from = cell_center(g.rendezvous()[*best]);
    remaining.erase(best);
  }
  plan_to(env, travel_goal(env));
}

Cell AdversaryPolicy::travel_goal(const EnvState& env) const {
  const TerrainGrid& g = *env.terrain;
  for (int i : mind_.rendezvous_order)
    if (!env.rendezvous_visited[i]) return g.rendezvous()[i];
  return mind_.travel_hideout;
}

void AdversaryPolicy::plan_to(const EnvState& env, Cell goal) {
  const TerrainGrid& g = *env.terrain;
  const Cell here = g.cell_of(env.adversary.position);
  mind_.target = goal;
  try {
    mind_.current_plan = astar_plan(here, goal, g, params_.forest_weight).cells;
  } catch (const NoPathError&) {
    notes_.push_back("no path to target; holding position");
    mind_.current_plan = {here};
  }
  mind_.segment = 0;
  mind_.offset = 0.0;
  mind_.expected = env.adversary.position;
}

void AdversaryPolicy::enter_evade(const EnvState& env) {
  const TerrainGrid& g = *env.terrain;
  mind_.mode = AdversaryMode::evade;
  mind_.evade_elapsed = 0;
  mind_.clear_steps = 0;
  mind_.escalated = false;
  const Cell here = g.cell_of(env.adversary.position);
  const double threshold = spec_.dark_forest_threshold;
  try {
    Path p = plan_to_nearest(here, g, params_.forest_weight,
                             [&](Cell c) { return g.visibility(c) < threshold; });
    mind_.target = p.cells.back();
    mind_.current_plan = std::move(p.cells);
    mind_.segment = 0;
    mind_.offset = 0.0;
    mind_.expected = env.adversary.position;
  } catch (const NoPathError&) {
    notes_.push_back("no reachable dark forest; evading towards a known hideout");
    escalate(env);
  }
}

void AdversaryPolicy::escalate(const EnvState& env) {
  const TerrainGrid& g = *env.terrain;
  mind_.escalated = true;
  if (env.domain == Domain::narco) {
    plan_to(env, travel_goal(env));
    return;
  }
  const Cell here = g.cell_of(env.adversary.position);
  const auto& hideouts = g.hideouts();
  const bool any_known = std::any_of(hideouts.begin(), hideouts.end(), [](const Hideout& h) { return h.known; });
  if (!any_known) {
    plan_to(env, mind_.travel_hideout);
    return;
  }
  try {
    Path p = plan_to_nearest(here, g, params_.forest_weight, [&](Cell c) {
      return std::any_of(hideouts.begin(), hideouts.end(), [c](const Hideout& h) { return h.known && h.cell == c; });
    });
    mind_.target = p.cells.back();
    mind_.current_plan = std::move(p.cells);
    mind_.segment = 0;
    mind_.offset = 0.0;
    mind_.expected = env.adversary.position;
  } catch (const NoPathError&) {
    notes_.push_back("no reachable known hideout; keeping current plan");
  }
}

Action AdversaryPolicy::act(const EnvState& env) {
  if (!env.running()) throw EnvError("adversary_act on a terminated episode");
  if (mind_.current_plan.empty()) reset(env);

  mind_.blue_sightings.clear();
  // Only mobile agents count; a fixed camera would otherwise pin the
  // travel/evade cycle forever.
  for (std::size_t i = 0; i < env.blue.size(); ++i)
    if (env.blue[i].type != AgentType::camera &&
        distance(env.blue[i].position, env.adversary.position) <= env.adversary.detect_radius_base)
      mind_.blue_sightings.push_back(static_cast<int>(i));
  const bool sighted = !mind_.blue_sightings.empty();

  if (mind_.mode == AdversaryMode::travel) {
    if (sighted) {
      enter_evade(env);
      mind_.evasions += 1;
      // Repeatedly pushed back onto cover by the same searchers: stop hiding.
      if (params_.max_evasions > 0 && mind_.evasions > params_.max_evasions && !mind_.escalated) escalate(env);
    } else if (const Cell goal = travel_goal(env); goal != mind_.target) {
      plan_to(env, goal);
    }
  } else {
    mind_.evade_elapsed += 1;
    if (sighted) {
      mind_.clear_steps = 0;
      if (!mind_.escalated && mind_.evade_elapsed >= params_.evade_timer) escalate(env);
    } else {
      mind_.clear_steps += 1;
      // A prison escalation is a commitment to the known hideout; dropping
      // it once contact is lost lets a lingering searcher loop the adversary
      // between cover and its original route for the whole episode.
      const bool committed = mind_.escalated && env.domain == Domain::prison;
      if (!committed && mind_.clear_steps >= params_.evade_timer) {
        mind_.mode = AdversaryMode::travel;
        mind_.escalated = false;
        plan_to(env, travel_goal(env));
      }
    }
    if (mind_.mode == AdversaryMode::evade && mind_.escalated && env.domain == Domain::narco &&
        travel_goal(env) != mind_.target)
      plan_to(env, travel_goal(env));
  }
  return follow(env);
}

Action AdversaryPolicy::follow(const EnvState& env) {
  const Vec2 pos = env.adversary.position;
  // Knocked off the polyline (blocked move): replan from where we stand.
  if (distance(pos, mind_.expected) > 1e-6) plan_to(env, mind_.target);

  const auto& plan = mind_.current_plan;
  double budget = env.adversary.speed;
  while (budget > 0.0 && mind_.segment + 1 < plan.size()) {
    const Vec2 a = cell_center(plan[mind_.segment]);
    const Vec2 b = cell_center(plan[mind_.segment + 1]);
    const double remaining = distance(a, b) - mind_.offset;
    if (budget < remaining) {
      mind_.offset += budget;
      budget = 0.0;
    } else {
      budget -= remaining;
      mind_.segment += 1;
      mind_.offset = 0.0;
    }
  }
  Vec2 point = cell_center(plan[mind_.segment]);
  if (mind_.segment + 1 < plan.size()) {
    const Vec2 a = point, b = cell_center(plan[mind_.segment + 1]);
    point = a + (b - a) * (mind_.offset / distance(a, b));
  }
  mind_.expected = point;
  const Vec2 d = point - pos;
  const double len = d.norm();
  if (len == 0.0) return {0.0, 0.0};
  return {std::atan2(d.y, d.x), std::min(len, env.adversary.speed)};
}

}  // namespace pursuit
