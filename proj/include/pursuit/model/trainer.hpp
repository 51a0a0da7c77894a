#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pursuit/autodiff/adam.hpp"
#include "pursuit/model/network.hpp"

namespace pursuit {

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                           ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

struct EpochMetrics {
  int epoch = 0;
  double train_nll = 0.0;   // mean over batches
  double train_loss = 0.0;  // mean total objective over batches
  double val_ll = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = 0;  // 0 is the initialization
  double best_val_ll = 0.0;
  long steps = 0;
};

inline constexpr const char* kMetricsHeader = "epoch,train_nll,train_loss,val_ll";

// Mini-batch Adam. Shuffling and MI draws come from streams derived from
// params.seed. On return `net` holds the best-validation parameters. When
// `metrics` is given a CSV row is written after every epoch.
TrainResult train(Network& net, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainParams& params, std::ostream* metrics = nullptr);

// One Adam step on a fixed batch; returns the total objective before the step.
double train_step(Network& net, const Batch& batch, ad::AdamState& state, const ad::AdamConfig& cfg, Rng& mi_rng);

// Mean per-sample log-likelihood.
double mean_log_likelihood(const Network& net, std::span<const Sample> samples, int batch_size = 256);
std::vector<MixtureOutput> predict_all(const Network& net, std::span<const Sample> samples, int batch_size = 256);

// Network seed used for a training seed.
std::uint64_t network_seed(std::uint64_t train_seed);

nlohmann::ordered_json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

struct CheckpointMeta {
  std::string dataset;
  std::uint64_t seed = 0;
  std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, const Network& net, const CheckpointMeta& meta);
std::string checkpoint_text(const Network& net, const CheckpointMeta& meta);
Network load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace pursuit
