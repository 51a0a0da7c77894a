#include <doctest.h>

#include <cmath>
#include <memory>

#include "pursuit/config.hpp"
#include "pursuit/sim/env.hpp"
#include "pursuit/sim/random.hpp"
#include "pursuit/sim/terrain.hpp"

using namespace pursuit;

namespace {

AgentState agent(AgentType type, Vec2 pos, double speed, double radius) {
  AgentState a;
  a.type = type;
  a.position = pos;
  a.speed = speed;
  a.detect_radius_base = radius;
  return a;
}

// Hand-built episode on an open grid; blue agents are added by the caller.
EnvState manual_env(std::shared_ptr<TerrainGrid> g, Domain domain, Vec2 adversary, int t_max = 4320) {
  EnvState s;
  s.terrain = g;
  s.domain = domain;
  s.t_max = t_max;
  s.capture_radius = 1.0;
  s.adversary = agent(AgentType::adversary, adversary, 1.0, 5.0);
  s.rendezvous_visited.assign(g->rendezvous().size(), 0);
  return s;
}

std::vector<Action> still(const EnvState& s) { return std::vector<Action>(s.blue.size()); }

}  // namespace

TEST_CASE("state vector layout") {
  AgentState a = agent(AgentType::helicopter, {50.0, 25.0}, 2.0, 10.0);
  a.timestep = 432;
  const auto v = state_vector(a, 100, 100, 4320);
  REQUIRE(v.size() == static_cast<std::size_t>(kStateDim));
  CHECK(v[0] == doctest::Approx(0.5));
  CHECK(v[1] == doctest::Approx(0.25));
  for (int i = 0; i < kAgentTypeCount; ++i) CHECK(v[2 + i] == (i == static_cast<int>(AgentType::helicopter) ? 1.0 : 0.0));
  CHECK(v.back() == doctest::Approx(0.1));
}

TEST_CASE("effective radius scales with visibility") {
  TerrainGrid g(4, 4);
  const AgentState a = agent(AgentType::search_party, {0.5, 0.5}, 1.0, 30.0);
  CHECK(effective_radius(a, g, {1, 1}) == doctest::Approx(30.0));
  g.set_visibility({1, 1}, 0.2);
  CHECK(effective_radius(a, g, {1, 1}) == doctest::Approx(6.0));
  g.set_visibility({2, 2}, 0.5);
  g.set_visibility({3, 3}, 0.4);
  CHECK(effective_radius(a, g, {2, 2}) == doctest::Approx(15.0));
  CHECK(effective_radius(a, g, {3, 3}) == doctest::Approx(12.0));
  CHECK(effective_radius(a, g, {2, 2}) >= effective_radius(a, g, {3, 3}));
}

TEST_CASE("sense") {
  TerrainGrid g(100, 50);
  const AgentState a = agent(AgentType::search_party, {20.5, 20.5}, 1.0, 30.0);

  SUBCASE("co-located target is seen at its exact normalized position") {
    const Observation o = sense(a, {20.5, 20.5}, g);
    CHECK(o.detected);
    CHECK(o.position == Vec2{20.5 / 100.0, 20.5 / 50.0});
  }
  SUBCASE("out of range gives the sentinel") {
    const Observation o = sense(a, {60.5, 20.5}, g);
    CHECK_FALSE(o.detected);
    CHECK(o.position == Vec2{0.0, 0.0});
  }
  SUBCASE("fog shrinks the radius below the distance") {
    g.set_visibility({30, 20}, 0.2);
    const Observation o = sense(a, {30.5, 20.5}, g);  // distance 10 > 30 * 0.2
    CHECK_FALSE(o.detected);
    CHECK(o.position == Vec2{0.0, 0.0});
  }
  SUBCASE("boundary distance counts as detected") {
    const AgentState b = agent(AgentType::search_party, {0.0, 0.0}, 1.0, 5.0);
    CHECK(sense(b, {3.0, 4.0}, g).detected);
    CHECK_FALSE(sense(b, {3.0, 4.001}, g).detected);
  }
}

TEST_CASE("terrain at reference scale") {
  DomainSpec p = RunConfig::defaults(Domain::prison).domain;
  p.scale = 1.0;
  const TerrainGrid pg = build_terrain(p, 0);
  CHECK(pg.width() == 2428);
  CHECK(pg.height() == 2428);

  DomainSpec n = RunConfig::defaults(Domain::narco).domain;
  n.scale = 1.0;
  CHECK(n.width() == 7884);
  CHECK(n.height() == 3538);
  const TerrainGrid ng = build_terrain(n, 0);
  CHECK(ng.width() == 7884);
  CHECK(ng.height() == 3538);
}

TEST_CASE("terrain generation is deterministic and valid") {
  for (Domain d : {Domain::prison, Domain::narco}) {
    const DomainSpec spec = RunConfig::defaults(d).domain;
    for (std::uint64_t seed : {0ULL, 1ULL, 17ULL}) {
      const TerrainGrid a = build_terrain(spec, seed);
      const TerrainGrid b = build_terrain(spec, seed);
      CHECK(a == b);
      CHECK(a.digest() == b.digest());
      CHECK_NOTHROW(a.validate());
      CHECK(a.width() == spec.width());
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
          const double v = a.visibility({x, y});
          const double f = a.forest_density({x, y});
          REQUIRE((v > 0.0 && v <= 1.0));
          REQUIRE((f >= 0.0 && f <= 1.0));
        }
      for (const auto& h : a.hideouts()) CHECK(a.traversable(h.cell));
      for (const auto& r : a.rendezvous()) CHECK(a.traversable(r));
      if (d == Domain::prison) {
        CHECK_FALSE(a.dark_cells(spec.dark_forest_threshold).empty());
      } else {
        CHECK(a.rendezvous().size() >= 1);
        CHECK(a.hideouts().size() >= 1);
      }
    }
    CHECK(build_terrain(spec, 1).digest() != build_terrain(spec, 2).digest());
  }
}

TEST_CASE("terrain rejects impossible requests") {
  DomainSpec spec = RunConfig::defaults(Domain::prison).domain;
  spec.scale = 1.0 / 128.0;
  CHECK_THROWS_AS(build_terrain(spec, 0), TerrainError);

  spec = RunConfig::defaults(Domain::prison).domain;
  spec.scale = 1.0 / 64.0;  // 38 x 38 cells
  spec.unknown_hideouts = 30;
  spec.landmark_separation = 600.0;
  CHECK_THROWS_AS(build_terrain(spec, 0), TerrainError);
}

TEST_CASE("reset places a valid roster") {
  for (Domain d : {Domain::prison, Domain::narco}) {
    const DomainSpec spec = RunConfig::defaults(d).domain;
    auto g = std::make_shared<const TerrainGrid>(build_terrain(spec, 3));
    const EnvState s = reset_env(spec, g, 3);
    int expected = 0;
    for (const auto& b : spec.blue) expected += b.count;
    CHECK(static_cast<int>(s.blue.size()) == expected);
    for (const auto& a : s.blue) {
      CHECK(g->contains(a.position));
      CHECK(g->traversable_for(g->cell_of(a.position), a.type));
      if (a.type == AgentType::camera) CHECK(a.speed == 0.0);
      else CHECK(a.speed > 0.0);
    }
    CHECK(s.step == 0);
    CHECK(s.running());
    if (d == Domain::narco) {
      REQUIRE(s.detections.size() >= 1);
      CHECK(s.detections.front().detected_by == -1);
    }
  }
}

TEST_CASE("step_env") {
  auto g = std::make_shared<TerrainGrid>(50, 50);
  g->hideouts().push_back({{40, 40}, false});

  SUBCASE("zero-speed actions leave positions unchanged") {
    EnvState s = manual_env(g, Domain::prison, {10.5, 10.5});
    s.blue.push_back(agent(AgentType::search_party, {30.5, 30.5}, 2.0, 1.0));
    s.blue.push_back(agent(AgentType::camera, {5.5, 5.5}, 0.0, 1.0));
    const EnvState before = s;
    step_env(s, still(s), {});
    CHECK(s.step == 1);
    CHECK(s.adversary.position == before.adversary.position);
    for (std::size_t i = 0; i < s.blue.size(); ++i) CHECK(s.blue[i].position == before.blue[i].position);
    CHECK(s.running());
  }

  SUBCASE("motion integrates heading times speed and stays in bounds") {
    EnvState s = manual_env(g, Domain::prison, {10.5, 10.5});
    s.blue.push_back(agent(AgentType::helicopter, {1.0, 1.0}, 3.0, 1.0));
    const std::vector<Action> acts{{kPi, 3.0}};
    step_env(s, acts, {kPi / 2.0, 1.0});
    CHECK(s.adversary.position.x == doctest::Approx(10.5));
    CHECK(s.adversary.position.y == doctest::Approx(11.5));
    CHECK(s.blue[0].position.x == doctest::Approx(0.0));
    CHECK(s.blue[0].position.y == doctest::Approx(1.0));
  }

  SUBCASE("rejects over-speed, wrong action count and terminated states") {
    EnvState s = manual_env(g, Domain::prison, {10.5, 10.5}, 2);
    s.blue.push_back(agent(AgentType::search_party, {30.5, 30.5}, 2.0, 1.0));
    const std::vector<Action> fast{{0.0, 2.5}};
    CHECK_THROWS_AS(step_env(s, fast, {}), EnvError);
    CHECK_THROWS_AS(step_env(s, std::vector<Action>{}, {}), EnvError);
    CHECK_THROWS_AS(step_env(s, still(s), {0.0, 1.5}), EnvError);
    step_env(s, still(s), {});
    step_env(s, still(s), {});
    CHECK(s.status == Status::timeout);
    CHECK_THROWS_AS(step_env(s, still(s), {}), EnvError);
  }

  SUBCASE("prison times out at 4320 steps and is never captured") {
    EnvState s = manual_env(g, Domain::prison, {10.5, 10.5});
    s.capture_radius = 100.0;
    s.blue.push_back(agent(AgentType::marine_vessel, {10.5, 10.5}, 1.0, 1.0));
    while (s.running()) step_env(s, still(s), {});
    CHECK(s.status == Status::timeout);
    CHECK(s.step == 4320);
  }

  SUBCASE("prison hideout ends the episode") {
    EnvState s = manual_env(g, Domain::prison, {39.5, 40.5});
    step_env(s, still(s), {0.0, 1.0});
    CHECK(s.status == Status::reached_hideout);
  }
}

TEST_CASE("narco termination rules") {
  auto g = std::make_shared<TerrainGrid>(50, 50, true);
  g->hideouts().push_back({{40, 10}, false});
  g->rendezvous().push_back({20, 10});

  SUBCASE("hideout counts only after every rendezvous") {
    EnvState s = manual_env(g, Domain::narco, {40.5, 10.5});
    step_env(s, still(s), {});
    CHECK(s.running());
    s.adversary.position = {19.5, 10.5};
    step_env(s, still(s), {0.0, 1.0});
    CHECK(s.rendezvous_visited[0] == 1);
    CHECK(s.running());
    s.adversary.position = {39.5, 10.5};
    step_env(s, still(s), {0.0, 1.0});
    CHECK(s.status == Status::reached_hideout);
  }

  SUBCASE("only marine vessels capture") {
    EnvState s = manual_env(g, Domain::narco, {10.5, 30.5});
    s.capture_radius = 2.0;
    s.blue.push_back(agent(AgentType::airplane, {10.5, 30.5}, 1.0, 5.0));
    step_env(s, still(s), {});
    CHECK(s.running());
    s.blue.push_back(agent(AgentType::marine_vessel, {11.5, 30.5}, 1.0, 5.0));
    step_env(s, still(s), {});
    CHECK(s.status == Status::captured);
  }

  SUBCASE("surface agents slide along or stop at land") {
    g->set_water({30, 30}, false);
    EnvState s = manual_env(g, Domain::narco, {10.5, 40.5});
    s.blue.push_back(agent(AgentType::marine_vessel, {29.5, 30.5}, 1.0, 1.0));
    s.blue.push_back(agent(AgentType::airplane, {29.5, 30.5}, 1.0, 1.0));
    const std::vector<Action> east{{0.0, 1.0}, {0.0, 1.0}};
    step_env(s, east, {});
    CHECK(s.blue[0].position.x == doctest::Approx(29.5));
    CHECK(s.blue[1].position.x == doctest::Approx(30.5));
  }
}

TEST_CASE("detections are sound and collapse per step") {
  const DomainSpec spec = RunConfig::defaults(Domain::prison).domain;
  auto g = std::make_shared<const TerrainGrid>(build_terrain(spec, 5));
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    EnvState s = reset_env(spec, g, seed);
    Rng rng(seed + 100);
    while (s.running() && s.step < 400) {
      std::vector<Action> acts;
      for (const auto& a : s.blue) acts.push_back({rng.uniform(-kPi, kPi), a.speed * rng.uniform()});
      step_env(s, acts, {rng.uniform(-kPi, kPi), s.adversary.speed});
      const Cell here = g->cell_of(s.adversary.position);
      for (std::size_t i = 0; i < s.blue.size(); ++i) {
        const double d = distance(s.blue[i].position, s.adversary.position);
        const double r = effective_radius(s.blue[i], *g, here);
        const Observation& o = s.observations[i];
        REQUIRE(o.detected == (d <= r));
        if (o.detected) CHECK(o.position == g->normalize(s.adversary.position));
        REQUIRE(g->contains(s.blue[i].position));
      }
      REQUIRE(g->contains(s.adversary.position));
    }
    for (std::size_t j = 1; j < s.detections.size(); ++j) CHECK(s.detections[j].t > s.detections[j - 1].t);
  }
}

TEST_CASE("identical inputs give identical trajectories") {
  const DomainSpec spec = RunConfig::defaults(Domain::narco).domain;
  auto g = std::make_shared<const TerrainGrid>(build_terrain(spec, 9));
  auto run = [&] {
    EnvState s = reset_env(spec, g, 9);
    Rng rng(1);
    std::vector<Vec2> trace;
    while (s.running() && s.step < 200) {
      std::vector<Action> acts;
      for (const auto& a : s.blue) acts.push_back({rng.uniform(-kPi, kPi), a.speed});
      step_env(s, acts, {rng.uniform(-kPi, kPi), s.adversary.speed});
      trace.push_back(s.adversary.position);
      for (const auto& a : s.blue) trace.push_back(a.position);
    }
    return std::make_pair(trace, s.detections);
  };
  CHECK(run() == run());
}

TEST_CASE("config parsing") {
  SUBCASE("round trip through canonical text") {
    const RunConfig c = RunConfig::defaults(Domain::narco);
    const RunConfig back = RunConfig::parse(c.to_ini());
    CHECK(back.to_ini() == c.to_ini());
    CHECK(back.hash() == c.hash());
  }
  SUBCASE("unknown keys name the key") {
    try {
      RunConfig::parse("[domain]\nname = prison\nbogus_key = 3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("domain.bogus_key") != std::string::npos);
    }
  }
  SUBCASE("overrides and validation") {
    RunConfig c = RunConfig::defaults(Domain::prison);
    c.apply_overrides({"model.components=2", "search_party.radius=42"});
    CHECK(c.model.components == 2);
    CHECK(c.domain.roster(AgentType::search_party).radius == 42.0);
    CHECK_THROWS_AS(c.apply_overrides({"model.components=0"}), ConfigError);
    CHECK_THROWS_AS(c.apply_overrides({"camera.speed=1"}), ConfigError);
    CHECK_THROWS_AS(c.apply_overrides({"policy.max_evasions=-1"}), ConfigError);
    CHECK_THROWS_AS(c.apply_overrides({"noequals"}), ConfigError);
  }
  SUBCASE("simulation hash ignores model settings") {
    RunConfig a = RunConfig::defaults(Domain::prison);
    RunConfig b = a;
    b.apply_overrides({"model.hidden=8"});
    CHECK(a.simulation_hash() == b.simulation_hash());
    CHECK(a.hash() != b.hash());
  }
}
