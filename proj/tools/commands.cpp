#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "pursuit/config.hpp"
#include "pursuit/data/rollout.hpp"
#include "pursuit/data/samples.hpp"
#include "pursuit/eval/benchmark.hpp"
#include "pursuit/eval/heatmap.hpp"
#include "pursuit/model/trainer.hpp"

namespace pursuit::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSplitFile = "split.json";
constexpr const char* kConfigFile = "config.cfg";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kMetricsFile = "metrics.csv";

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw UsageError("config file '" + path.string() + "' does not exist");
  RunConfig cfg = RunConfig::load(path);
  cfg.apply_overrides(overrides);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

void require_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("dataset directory '" + dir.string() + "' does not exist");
  if (rollout_files(dir).empty()) throw UsageError("no rollouts in '" + dir.string() + "'");
}

Split read_split(const fs::path& dir) {
  const fs::path p = dir / kSplitFile;
  std::ifstream in(p);
  if (!in) throw UsageError("'" + p.string() + "' not found; run the split subcommand first");
  const auto j = nlohmann::json::parse(in);
  Split s;
  s.train = j.at("train").get<std::vector<int>>();
  s.val = j.at("val").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  return s;
}

std::string dataset_name(const fs::path& dir) {
  auto p = dir.lexically_normal();
  if (!p.has_filename()) p = p.parent_path();
  return p.filename().string();
}

// Rollouts, split and sample cache of one dataset directory.
class Dataset {
 public:
  explicit Dataset(const fs::path& dir) : dir_(dir), name_(dataset_name(dir)) {
    require_dataset(dir);
    split_ = read_split(dir);
    rollouts_ = load_rollouts(dir);
    const int n = static_cast<int>(rollouts_.size());
    for (const auto* part : {&split_.train, &split_.val, &split_.test})
      for (int i : *part)
        if (i < 0 || i >= n) throw UsageError("split index " + std::to_string(i) + " outside the dataset");
  }

  const std::string& name() const { return name_; }
  const fs::path& dir() const { return dir_; }
  const Rollout& rollout(int i) const { return rollouts_.at(i); }

  enum Part { train, val, test };

  const std::vector<Sample>& samples(Part part, const DatasetParams& d, int horizon) {
    const auto key = std::make_tuple(static_cast<int>(part), d.history, d.stride, d.max_detections, horizon);
    const std::vector<int>& idx = part == train ? split_.train : part == val ? split_.val : split_.test;
    auto it = cache_.find(key);
    if (it == cache_.end())
      it = cache_.emplace(key, build_samples(rollouts_, idx, d.history, horizon, d.stride, d.max_detections)).first;
    return it->second;
  }

 private:
  fs::path dir_;
  std::string name_;
  Split split_;
  std::vector<Rollout> rollouts_;
  std::map<std::tuple<int, int, int, int, int>, std::vector<Sample>> cache_;
};

// Resolves ablation, horizon and seed into the config.
RunConfig cell_config(RunConfig cfg, const Ablation& a, int horizon, std::uint64_t seed) {
  cfg.model = apply_ablation(cfg.model, a);
  cfg.model.horizon = horizon;
  cfg.train.seed = seed;
  return cfg;
}

fs::path cell_directory(const fs::path& root, const std::string& dataset, const RunConfig& cfg, const Ablation& a) {
  return root / dataset /
         (a.name + "-T" + std::to_string(cfg.model.horizon) + "-s" + std::to_string(cfg.train.seed) + "-" +
          cfg.hash().substr(0, 12));
}

struct TrainedCell {
  fs::path directory;
  TrainResult result;
  bool reused = false;
};

TrainedCell train_cell(const RunConfig& cfg, const Ablation& a, Dataset& ds, const fs::path& root, bool reuse) {
  TrainedCell cell;
  cell.directory = cell_directory(root, ds.name(), cfg, a);
  if (reuse && fs::exists(cell.directory / kCheckpointFile)) {
    cell.reused = true;
    return cell;
  }
  const int h = cfg.model.horizon;
  const auto& train_set = ds.samples(Dataset::train, cfg.dataset, h);
  const auto& val_set = ds.samples(Dataset::val, cfg.dataset, h);
  if (train_set.empty() || val_set.empty())
    throw UsageError("no training or validation samples for horizon " + std::to_string(h));

  ModelConfig mc = cfg.model;
  mc.agents = train_set.front().agents;
  mc.state_dim = mc.agents > 0 ? static_cast<int>(train_set.front().agent_window.size()) / ((mc.history + 1) * mc.agents)
                               : 0;
  Network net(mc, network_seed(cfg.train.seed));

  fs::create_directories(cell.directory);
  write_text(cell.directory / kConfigFile, cfg.to_ini());
  std::ofstream metrics(cell.directory / kMetricsFile, std::ios::binary | std::ios::trunc);
  cell.result = train(net, train_set, val_set, cfg.train, &metrics);
  save_checkpoint(cell.directory / kCheckpointFile, net, {ds.name(), cfg.train.seed, cfg.hash()});
  return cell;
}

std::vector<fs::path> find_checkpoints(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().filename() == kCheckpointFile) found.push_back(e.path());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw UsageError("checkpoint path '" + p.string() + "' does not exist");
    }
  }
  if (out.empty()) throw UsageError("no checkpoints found");
  return out;
}

}  // namespace

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  if (o.count < 1) throw UsageError("--count must be >= 1");
  if (o.jobs < 1) throw UsageError("--jobs must be >= 1");
  const RunConfig cfg = load_config(o.config, o.overrides);
  const GeneratedSet set = generate_rollouts(cfg, o.count, o.seed, o.out, o.jobs);
  out << "directory: " << set.directory.string() << '\n';
  out << "rollouts: " << set.files.size() << '\n';
  out << "detection_rate: " << set.detection_rate << '\n';
  return kOk;
}

int cmd_split(const SplitOptions& o, std::ostream& out) {
  require_dataset(o.data);
  const int n = static_cast<int>(rollout_files(o.data).size());
  const Split s = split_dataset(n, o.seed);
  nlohmann::ordered_json j;
  j["seed"] = o.seed;
  j["train"] = s.train;
  j["val"] = s.val;
  j["test"] = s.test;
  write_text(o.data / kSplitFile, j.dump() + "\n");
  out << "train: " << s.train.size() << "\nval: " << s.val.size() << "\ntest: " << s.test.size() << '\n';
  return kOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  RunConfig base = load_config(o.config, o.overrides);
  const Ablation a = parse_ablation(o.ablation);
  const RunConfig cfg =
      cell_config(base, a, o.horizon.value_or(base.model.horizon), o.seed.value_or(base.train.seed));
  Dataset ds(o.data);
  const TrainedCell cell = train_cell(cfg, a, ds, o.out, false);
  out << "checkpoint: " << (cell.directory / kCheckpointFile).string() << '\n';
  out << "best_epoch: " << cell.result.best_epoch << '\n';
  out << "best_val_ll: " << cell.result.best_val_ll << '\n';
  return kOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const auto checkpoints = find_checkpoints(o.checkpoints);
  Dataset ds(o.data);
  std::vector<MetricReport> rows;
  for (const auto& path : checkpoints) {
    CheckpointMeta meta;
    const Network net = load_checkpoint(path, &meta);
    const fs::path cfg_path =
        fs::exists(path.parent_path() / kConfigFile) ? path.parent_path() / kConfigFile : o.data / kConfigFile;
    RunConfig cfg = load_config(cfg_path, {});
    if (o.delta) cfg.eval.delta = *o.delta;
    if (o.p_threshold) cfg.eval.p_threshold = *o.p_threshold;
    if (!(cfg.eval.delta > 0.0)) throw UsageError("--delta must be positive");
    DatasetParams dp = cfg.dataset;
    dp.history = net.config().history;
    dp.max_detections = net.config().max_detections;
    const auto& test = ds.samples(Dataset::test, dp, net.config().horizon);
    if (test.empty()) throw UsageError("empty test set for horizon " + std::to_string(net.config().horizon));

    MetricReport r = evaluate_network(net, test, cfg.eval);
    r.dataset = ds.name();
    r.seed = meta.seed;
    rows.push_back(r);

    if (o.heatmap) {
      const int id = *o.heatmap;
      if (id < 0 || id >= static_cast<int>(test.size()))
        throw UsageError("--heatmap sample " + std::to_string(id) + " outside the test set of " +
                         std::to_string(test.size()));
      const Sample& s = test[id];
      const auto mixture = net.predict(make_batch(std::span<const Sample>(&s, 1))).front();
      const auto& hdr = ds.rollout(s.rollout).header;
      HeatmapOptions ho;
      ho.title = r.model + " T=" + std::to_string(r.horizon) + " sample " + std::to_string(id);
      fs::create_directories(o.heatmap_dir);
      const fs::path svg = o.heatmap_dir / ("heatmap_" + path.parent_path().filename().string() + "_" +
                                            std::to_string(id) + ".svg");
      write_text(svg, mixture_heatmap_svg(mixture, s.target, hdr.width, hdr.height, ho));
      spdlog::info("wrote {}", svg.string());
    }
  }
  rows = with_mean_rows(std::move(rows));
  if (o.report) {
    if (o.report->has_parent_path()) fs::create_directories(o.report->parent_path());
    std::ofstream f(*o.report, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + o.report->string() + "'");
    write_report_csv(f, rows);
    out << "report: " << o.report->string() << '\n';
  } else {
    write_report_csv(out, rows);
  }
  return kOk;
}

int cmd_report(const ReportOptions& o, std::ostream& out) {
  const RunConfig base = load_config(o.config, o.overrides);
  std::vector<Ablation> ablations;
  if (o.ablations.empty()) ablations = standard_ablations();
  for (const auto& f : o.ablations) ablations.push_back(parse_ablation(f));
  if (o.data.empty()) throw UsageError("at least one --data directory is required");

  std::vector<std::unique_ptr<Dataset>> sets;
  std::vector<BenchmarkDataset> bench;
  for (const auto& d : o.data) {
    sets.push_back(std::make_unique<Dataset>(d));
    BenchmarkDataset b;
    b.name = sets.back()->name();
    for (int h : o.horizons) b.test[h] = sets.back()->samples(Dataset::test, base.dataset, h);
    bench.push_back(std::move(b));
  }
  auto provider = [&](const std::string& name, const Ablation& a, int h, std::uint64_t seed) {
    Dataset& ds = **std::find_if(sets.begin(), sets.end(), [&](const auto& s) { return s->name() == name; });
    const RunConfig cfg = cell_config(base, a, h, seed);
    const TrainedCell cell = train_cell(cfg, a, ds, o.models, true);
    spdlog::info("{} {} T={} seed {}: {}", name, a.name, h, seed, cell.reused ? "reused checkpoint" : "trained");
    return load_checkpoint(cell.directory / kCheckpointFile);
  };
  const auto rows = run_benchmark(bench, ablations, o.horizons, o.seeds, provider, base.eval);
  if (o.report.has_parent_path()) fs::create_directories(o.report.parent_path());
  std::ofstream f(o.report, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + o.report.string() + "'");
  write_report_csv(f, rows);
  out << "report: " << o.report.string() << " (" << rows.size() << " rows)\n";
  return kOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent pursuit simulator and adversary location predictor"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate rollouts");
  c_sim->add_option("config", sim.config, "Config file")->required();
  c_sim->add_option("--count", sim.count, "Number of rollouts");
  c_sim->add_option("--seed", sim.seed, "Seed of the first rollout");
  c_sim->add_option("--out", sim.out, "Output root");
  c_sim->add_option("--jobs", sim.jobs, "Worker threads");
  c_sim->add_option("--set", sim.overrides, "Override section.key=value");

  SplitOptions split;
  auto* c_split = app.add_subcommand("split", "Write a train/val/test split into a rollout directory");
  c_split->add_option("data", split.data, "Rollout directory")->required();
  c_split->add_option("--seed", split.seed, "Shuffle seed");

  TrainOptions tr;
  std::uint64_t train_seed = 0;
  int train_horizon = 0;
  auto* c_train = app.add_subcommand("train", "Train one model");
  c_train->add_option("config", tr.config, "Config file")->required();
  c_train->add_option("--data", tr.data, "Rollout directory")->required();
  c_train->add_option("--ablation", tr.ablation, "Comma list of gnn, omega, mi; or lstm");
  auto* o_h = c_train->add_option("--horizon", train_horizon, "Prediction horizon in steps");
  auto* o_s = c_train->add_option("--seed", train_seed, "Training seed");
  c_train->add_option("--out", tr.out, "Model root");
  c_train->add_option("--set", tr.overrides, "Override section.key=value");

  EvalOptions ev;
  double delta = 0.0, p = 0.0;
  std::string report_path;
  int heatmap = 0;
  auto* c_eval = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
  c_eval->add_option("checkpoints", ev.checkpoints, "Checkpoint files or directories")->required();
  c_eval->add_option("--data", ev.data, "Rollout directory")->required();
  auto* o_d = c_eval->add_option("--delta", delta, "CT radius in normalized units");
  auto* o_p = c_eval->add_option("--p", p, "CT probability threshold");
  auto* o_r = c_eval->add_option("--report", report_path, "CSV output (default stdout)");
  auto* o_hm = c_eval->add_option("--heatmap", heatmap, "Test sample index to render as SVG");
  c_eval->add_option("--heatmap-dir", ev.heatmap_dir, "Directory for SVG heatmaps");

  ReportOptions rep;
  auto* c_rep = app.add_subcommand("report", "Train (or reuse) the ablation grid and write a CSV report");
  c_rep->add_option("config", rep.config, "Config file")->required();
  c_rep->add_option("--data", rep.data, "Rollout directories")->required();
  c_rep->add_option("--ablation", rep.ablations, "Ablation rows (repeatable); default all five");
  c_rep->add_option("--horizons", rep.horizons, "Horizons")->delimiter(',');
  c_rep->add_option("--seeds", rep.seeds, "Seeds")->delimiter(',');
  c_rep->add_option("--models", rep.models, "Model root");
  c_rep->add_option("--report", rep.report, "CSV output");
  c_rep->add_option("--set", rep.overrides, "Override section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*c_sim) return cmd_simulate(sim, out);
    if (*c_split) return cmd_split(split, out);
    if (*c_train) {
      if (*o_h) tr.horizon = train_horizon;
      if (*o_s) tr.seed = train_seed;
      return cmd_train(tr, out);
    }
    if (*c_eval) {
      if (*o_d) ev.delta = delta;
      if (*o_p) ev.p_threshold = p;
      if (*o_r) ev.report = report_path;
      if (*o_hm) ev.heatmap = heatmap;
      return cmd_eval(ev, out);
    }
    if (*c_rep) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace pursuit::cli
