#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/model/network.hpp"

namespace pursuit {

// One row of the ablation grid.
struct Ablation {
  std::string name;
  bool gnn = false;
  bool omega_mm = true;
  bool mi = false;
};

// Parses "omega", "omega,mi", "gnn,omega,mi", "lstm" (wide head, no MI).
Ablation parse_ablation(const std::string& flags);
std::string ablation_flags(const Ablation& a);
// lstm, omega, omega+mi, gnn+omega, gnn+omega+mi.
std::vector<Ablation> standard_ablations();
ModelConfig apply_ablation(ModelConfig cfg, const Ablation& a);

struct MetricReport {
  std::string dataset;
  std::string model;
  bool gnn = false;
  bool omega_mm = false;
  bool mi = false;
  int horizon = 0;
  std::optional<std::uint64_t> seed;  // empty on mean rows
  double ll = 0.0;
  double ade = 0.0;
  double ct = 0.0;
  std::size_t count = 0;
  std::string error;  // set when the cell could not be evaluated
};

MetricReport evaluate_network(const Network& net, std::span<const Sample> samples, const EvalParams& params);

struct BenchmarkDataset {
  std::string name;
  std::map<int, std::vector<Sample>> test;  // horizon -> samples
};

// Supplies the trained model for a grid cell, or throws to mark it missing.
using ModelProvider =
    std::function<Network(const std::string& dataset, const Ablation& a, int horizon, std::uint64_t seed)>;

// Every (dataset, ablation, horizon, seed) cell followed by one mean row per
// (dataset, ablation, horizon). Failures become rows with `error` set.
std::vector<MetricReport> run_benchmark(std::span<const BenchmarkDataset> datasets, std::span<const Ablation> ablations,
                                        std::span<const int> horizons, std::span<const std::uint64_t> seeds,
                                        const ModelProvider& provider, const EvalParams& params);

// Mean rows appended after the per-seed rows, ordered by first appearance.
std::vector<MetricReport> with_mean_rows(std::vector<MetricReport> rows);

inline constexpr const char* kReportHeader = "dataset,model,gnn,omega_mm,mi,horizon,seed,ll,ade,ct";
void write_report_csv(std::ostream& out, std::span<const MetricReport> rows);

}  // namespace pursuit
