#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/policy/astar.hpp"
#include "pursuit/sim/env.hpp"

namespace pursuit {

enum class AdversaryMode { travel, evade };

struct AdversaryMind {
  AdversaryMode mode = AdversaryMode::travel;
  std::vector<Cell> current_plan;
  Cell target;
  int evade_elapsed = 0;     // steps since evade was entered
  int clear_steps = 0;       // consecutive steps without a sighting
  bool escalated = false;    // evade gave up on cover and heads for a known hideout
  int evasions = 0;          // times evade was entered from travel
  std::vector<int> blue_sightings;  // mobile blue agents inside the sensing radius at the last act

  // Where the current plan leads when travelling.
  Cell travel_hideout;
  std::vector<int> rendezvous_order;

  // Progress along the polyline through the plan's cell centres.
  std::size_t segment = 0;
  double offset = 0.0;
  Vec2 expected;
};

// Heuristic evader: A* towards an unknown hideout (after the rendezvous
// points in the narco domain); once a blue agent is sensed it heads for the
// nearest dark-forest cell, escalating to a known hideout if contact persists
// for evade_timer steps and returning to travel after evade_timer clear steps.
class AdversaryPolicy {
 public:
  AdversaryPolicy(const DomainSpec& spec, const PolicyParams& params, std::uint64_t seed);

  // Chooses the travel hideout and rendezvous order and plans the first path.
  void reset(const EnvState& env);

  Action act(const EnvState& env);

  const AdversaryMind& mind() const { return mind_; }

  // Human-readable notes about degenerate situations (e.g. no dark forest).
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  Cell travel_goal(const EnvState& env) const;
  void plan_to(const EnvState& env, Cell goal);
  void enter_evade(const EnvState& env);
  void escalate(const EnvState& env);
  Action follow(const EnvState& env);

  DomainSpec spec_;
  PolicyParams params_;
  std::uint64_t seed_;
  AdversaryMind mind_;
  std::vector<std::string> notes_;
};

}  // namespace pursuit
