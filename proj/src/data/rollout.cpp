#include "pursuit/data/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "pursuit/policy/adversary.hpp"
#include "pursuit/policy/blue_team.hpp"
#include "pursuit/sim/random.hpp"

namespace pursuit {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kMaxRedraws = 16;

ojson vec_json(Vec2 v) { return ojson{{"x", v.x}, {"y", v.y}}; }
Vec2 json_vec(const nlohmann::json& j) { return {j.at("x").get<double>(), j.at("y").get<double>()}; }

StepRecord record(const EnvState& env) {
  StepRecord r;
  r.t = env.step;
  r.blue.reserve(env.blue.size());
  for (const auto& a : env.blue) r.blue.push_back({a.position, a.type});
  r.adversary = env.adversary.position;
  r.observations = env.observations;
  r.det_hist_len = static_cast<int>(env.detections.size());
  r.status = env.status;
  return r;
}

}  // namespace

std::vector<Detection> Rollout::detections() const {
  std::vector<Detection> out;
  if (header.initial_detection) out.push_back(*header.initial_detection);
  for (const auto& s : steps) {
    if (!out.empty() && out.back().t == s.t) continue;
    for (std::size_t i = 0; i < s.observations.size(); ++i)
      if (s.observations[i].detected) {
        out.push_back({s.t, s.observations[i].position, static_cast<int>(i)});
        break;
      }
  }
  return out;
}

std::string serialize_rollout(const Rollout& r) {
  std::string out;
  ojson head{{"domain", std::string(to_string(r.header.domain))},
             {"seed", r.header.seed},
             {"width", r.header.width},
             {"height", r.header.height},
             {"t_max", r.header.t_max},
             {"config_hash", r.header.config_hash}};
  if (r.header.initial_detection) {
    const auto& d = *r.header.initial_detection;
    head["initial_detection"] = ojson{{"t", d.t}, {"x", d.position.x}, {"y", d.position.y}};
  } else {
    head["initial_detection"] = nullptr;
  }
  out += head.dump();
  out += '\n';
  for (const auto& s : r.steps) {
    ojson blue = ojson::array();
    for (const auto& b : s.blue)
      blue.push_back(ojson{{"x", b.position.x}, {"y", b.position.y}, {"type", std::string(to_string(b.type))}});
    ojson obs = ojson::array();
    for (const auto& o : s.observations)
      obs.push_back(ojson{{"b", o.detected ? 1 : 0}, {"x", o.position.x}, {"y", o.position.y}});
    ojson line{{"t", s.t},
               {"blue", std::move(blue)},
               {"adv", vec_json(s.adversary)},
               {"obs", std::move(obs)},
               {"det_hist_len", s.det_hist_len},
               {"status", std::string(to_string(s.status))}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

Rollout parse_rollout(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Rollout r;
  if (!std::getline(in, line)) throw std::runtime_error("rollout: missing header line");
  try {
    const auto head = nlohmann::json::parse(line);
    r.header.domain = parse_domain(head.at("domain").get<std::string>());
    r.header.seed = head.at("seed").get<std::uint64_t>();
    r.header.width = head.at("width").get<int>();
    r.header.height = head.at("height").get<int>();
    r.header.t_max = head.at("t_max").get<int>();
    r.header.config_hash = head.at("config_hash").get<std::string>();
    if (head.contains("initial_detection") && !head["initial_detection"].is_null()) {
      const auto& d = head["initial_detection"];
      r.header.initial_detection = Detection{d.at("t").get<int>(), json_vec(d), -1};
    }
    int line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      StepRecord s;
      s.t = j.at("t").get<int>();
      for (const auto& b : j.at("blue")) s.blue.push_back({json_vec(b), parse_agent_type(b.at("type").get<std::string>())});
      s.adversary = json_vec(j.at("adv"));
      for (const auto& o : j.at("obs")) s.observations.push_back({o.at("b").get<int>() != 0, json_vec(o)});
      s.det_hist_len = j.at("det_hist_len").get<int>();
      s.status = parse_status(j.at("status").get<std::string>());
      if (s.t != static_cast<int>(r.steps.size()))
        throw std::runtime_error("rollout: non-contiguous t at line " + std::to_string(line_no));
      r.steps.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("rollout: malformed JSON: ") + e.what());
  }
  return r;
}

void write_rollout(const Rollout& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write rollout file '" + path.string() + "'");
  out << serialize_rollout(r);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Rollout read_rollout(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read rollout file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rollout(ss.str());
}

Rollout simulate_rollout(const RunConfig& config, std::uint64_t seed, const TerrainGrid& field, int* redraws) {
  const DomainSpec& spec = config.domain;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    TerrainGrid grid = field;
    place_landmarks(grid, spec, attempt == 0 ? seed : derive_seed(seed, 0x5eed + attempt));
    auto terrain = std::make_shared<const TerrainGrid>(std::move(grid));
    EnvState env = reset_env(spec, terrain, seed);
    if (!env.running()) {
      if (redraws) *redraws = attempt + 1;
      continue;
    }
    AdversaryPolicy adversary(spec, config.policy, seed);
    BlueTeamPolicy blue(spec, config.policy, seed);
    adversary.reset(env);

    Rollout r;
    r.header.domain = spec.domain;
    r.header.seed = seed;
    r.header.width = terrain->width();
    r.header.height = terrain->height();
    r.header.t_max = spec.t_max;
    r.header.config_hash = config.simulation_hash();
    if (!env.detections.empty() && env.detections.front().detected_by < 0)
      r.header.initial_detection = env.detections.front();
    r.steps.push_back(record(env));
    while (env.running()) {
      const auto blue_actions = blue.act(env);
      const Action adv = adversary.act(env);
      step_env(env, blue_actions, adv);
      r.steps.push_back(record(env));
    }
    return r;
  }
  throw std::runtime_error("rollout seed " + std::to_string(seed) + " ended at step 0 after " +
                           std::to_string(kMaxRedraws) + " landmark redraws");
}

std::vector<std::filesystem::path> rollout_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a rollout directory: '" + dir.string() + "'");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("rollout_", 0) == 0 && e.path().extension() == ".jsonl")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Rollout> load_rollouts(const std::filesystem::path& dir) {
  std::vector<Rollout> out;
  for (const auto& f : rollout_files(dir)) out.push_back(read_rollout(f));
  return out;
}

GeneratedSet generate_rollouts(const RunConfig& config, int count, std::uint64_t base_seed,
                               const std::filesystem::path& out_root, int jobs) {
  if (count < 1) throw std::invalid_argument("rollout count must be >= 1");
  jobs = std::clamp(jobs, 1, count);
  GeneratedSet set;
  set.directory = out_root / (std::string(to_string(config.domain.domain)) + "-" + config.simulation_hash() + "-s" +
                              std::to_string(base_seed) + "-n" + std::to_string(count));
  std::filesystem::create_directories(set.directory);
  {
    std::ofstream cfg(set.directory / "config.cfg", std::ios::binary | std::ios::trunc);
    if (!cfg) throw std::runtime_error("cannot write config into '" + set.directory.string() + "'");
    cfg << config.to_ini();
  }

  const TerrainGrid field = generate_field(config.domain, config.domain.map_seed);
  std::vector<Rollout> rollouts(count);
  std::vector<int> redraws(count, 0);
  set.files.resize(count);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "rollout_%05d.jsonl", i);
    set.files[i] = set.directory / name;
  }
  std::vector<std::exception_ptr> errors(jobs);
  auto worker = [&](int j) {
    try {
      for (int i = j; i < count; i += jobs) {
        rollouts[i] = simulate_rollout(config, base_seed + i, field, &redraws[i]);
        write_rollout(rollouts[i], set.files[i]);
      }
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (int i = 0; i < count; ++i)
    if (redraws[i] > 0) spdlog::info("rollout {} (seed {}) redrew landmarks {} time(s)", i, base_seed + i, redraws[i]);
  set.detection_rate = detection_rate(rollouts);
  return set;
}

double detection_rate(std::span<const Rollout> rollouts) {
  if (rollouts.empty()) throw std::invalid_argument("detection_rate needs at least one rollout");
  long detected = 0, total = 0;
  for (const auto& r : rollouts) {
    for (const auto& step : r.steps)
      if (std::any_of(step.observations.begin(), step.observations.end(), [](const Observation& o) { return o.detected; }))
        ++detected;
    total += r.num_records();
  }
  return total == 0 ? 0.0 : static_cast<double>(detected) / total;
}

Split split_dataset(int n, std::array<double, 3> ratios, std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("split ratios must sum to 1");
  for (double r : ratios)
    if (r < 0.0) throw std::invalid_argument("split ratios must be non-negative");
  if (n < 3) throw std::invalid_argument("need at least 3 rollouts to split three ways");

  std::array<int, 3> sizes{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = ratios[k] * n;
    sizes[k] = static_cast<int>(std::floor(exact + 1e-9));
    rem[k] = exact - sizes[k];
    assigned += sizes[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best] + 1e-12) best = k;
    sizes[best] += 1;
    rem[best] = -1.0;
    ++assigned;
  }

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 7));
  for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);

  Split s;
  s.train.assign(idx.begin(), idx.begin() + sizes[0]);
  s.val.assign(idx.begin() + sizes[0], idx.begin() + sizes[0] + sizes[1]);
  s.test.assign(idx.begin() + sizes[0] + sizes[1], idx.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace pursuit
