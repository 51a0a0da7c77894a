// Finds a common multiplier on every blue detection radius that brings the
// pooled detection rate of a config to a target, and prints the scaled radii.
#include <cmath>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pursuit/config.hpp"
#include "pursuit/data/rollout.hpp"
#include "pursuit/sim/terrain.hpp"

using namespace pursuit;

namespace {

double rate_for(const RunConfig& base, double mult, int count, std::uint64_t seed, int jobs) {
  RunConfig cfg = base;
  for (auto& b : cfg.domain.blue) b.radius *= mult;
  const TerrainGrid field = generate_field(cfg.domain, cfg.domain.map_seed);
  std::vector<Rollout> rollouts(count);
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      for (int i = j; i < count; i += jobs) rollouts[i] = simulate_rollout(cfg, seed + i, field, nullptr);
    });
  for (auto& t : pool) t.join();
  return detection_rate(rollouts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detection-radius calibration"};
  std::string path;
  double target = 0.0;
  int count = 100, jobs = 1, iters = 30;
  std::uint64_t seed = 0;
  double lo = 0.02, hi = 20.0;
  app.add_option("config", path)->required();
  app.add_option("--target", target, "Target detection rate in [0,1]")->required();
  app.add_option("--count", count);
  app.add_option("--seed", seed);
  app.add_option("--jobs", jobs);
  app.add_option("--iters", iters);
  app.add_option("--lo", lo);
  app.add_option("--hi", hi);
  CLI11_PARSE(app, argc, argv);

  const RunConfig base = RunConfig::load(path);
  double best_m = 1.0, best_err = 1e9, best_rate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double m = std::sqrt(lo * hi);
    const double r = rate_for(base, m, count, seed, jobs);
    std::cout << "mult " << m << " rate " << r << std::endl;
    if (std::abs(r - target) < best_err) {
      best_err = std::abs(r - target);
      best_m = m;
      best_rate = r;
    }
    if (r < target) lo = m;
    else hi = m;
    if (hi / lo < 1.002) break;
  }
  std::cout << "best multiplier " << best_m << " rate " << best_rate << "\n";
  for (int t = 0; t < kBlueTypeCount; ++t) {
    const auto& b = base.domain.blue[t];
    if (b.count > 0)
      std::cout << "[" << to_string(static_cast<AgentType>(t)) << "] radius = " << b.radius * best_m << "\n";
  }
  return 0;
}
