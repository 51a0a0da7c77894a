#include "pursuit/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "pursuit/autodiff/checkpoint.hpp"

namespace pursuit {

namespace {

std::vector<ad::Matrix> snapshot(const ad::ParameterSet& ps) {
  std::vector<ad::Matrix> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.push_back(ps[i].value);
  return out;
}

void restore(ad::ParameterSet& ps, const std::vector<ad::Matrix>& values) {
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i].value = values[i];
}

struct StepLosses {
  double total;
  double nll;
};

StepLosses run_step(Network& net, const Batch& batch, ad::AdamState& state, const ad::AdamConfig& cfg, Rng& mi_rng) {
  ad::Tape tape;
  tape.set_check_finite(true);
  std::optional<MiNoise> noise;
  if (net.config().use_mi) noise = draw_mi_noise(batch.size, net.config().components, net.config().mi_sweep, mi_rng);
  const LossTerms terms = net.loss(tape, batch, noise ? &*noise : nullptr);
  const StepLosses out{terms.total.item(), terms.nll.item()};
  if (!std::isfinite(out.total)) throw ad::NonFiniteError("total loss");
  net.parameters().zero_grad();
  tape.backward(terms.total);
  auto params = net.parameters().all();
  for (const auto* p : params)
    if (!p->grad.all_finite()) throw ad::NonFiniteError("gradient of " + p->name);
  ad::adam_step(params, state, cfg);
  return out;
}

}  // namespace

std::uint64_t network_seed(std::uint64_t train_seed) { return derive_seed(train_seed, 0); }

double train_step(Network& net, const Batch& batch, ad::AdamState& state, const ad::AdamConfig& cfg, Rng& mi_rng) {
  return run_step(net, batch, state, cfg, mi_rng).total;
}

std::vector<MixtureOutput> predict_all(const Network& net, std::span<const Sample> samples, int batch_size) {
  std::vector<MixtureOutput> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); i += batch_size) {
    const auto n = std::min<std::size_t>(batch_size, samples.size() - i);
    auto part = net.predict(make_batch(samples.subspan(i, n)));
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

double mean_log_likelihood(const Network& net, std::span<const Sample> samples, int batch_size) {
  if (samples.empty()) throw std::invalid_argument("log-likelihood of an empty sample set");
  const auto mixtures = predict_all(net, samples, batch_size);
  double s = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) s += mixture_log_likelihood(mixtures[i], samples[i].target);
  return s / static_cast<double>(samples.size());
}

TrainResult train(Network& net, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainParams& params, std::ostream* metrics) {
  if (train_set.empty() || val_set.empty()) throw std::invalid_argument("training needs nonempty train and validation sets");
  if (params.batch_size < 1 || params.epochs < 0) throw std::invalid_argument("bad batch size or epoch count");

  Rng shuffle_rng(derive_seed(params.seed, 1));
  Rng mi_rng(derive_seed(params.seed, 2));
  ad::AdamConfig adam;
  adam.lr = params.learning_rate;
  ad::AdamState state;

  TrainResult result;
  result.best_val_ll = mean_log_likelihood(net, val_set);
  auto best = snapshot(net.parameters());
  if (metrics) *metrics << kMetricsHeader << '\n';

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    double nll_sum = 0.0, loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      std::vector<const Sample*> ptrs;
      for (std::size_t j = start; j < end; ++j) ptrs.push_back(&train_set[order[j]]);
      const Batch batch = make_batch(std::span<const Sample* const>(ptrs));
      StepLosses l;
      try {
        l = run_step(net, batch, state, adam, mi_rng);
      } catch (const ad::NonFiniteError& e) {
        throw DivergenceError(epoch, batches, e.what());
      }
      nll_sum += l.nll;
      loss_sum += l.total;
      ++batches;
      ++result.steps;
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_nll = nll_sum / batches;
    m.train_loss = loss_sum / batches;
    m.val_ll = mean_log_likelihood(net, val_set);
    result.history.push_back(m);
    if (m.val_ll > result.best_val_ll) {
      result.best_val_ll = m.val_ll;
      result.best_epoch = epoch;
      best = snapshot(net.parameters());
    }
    if (metrics) {
      std::ostringstream row;
      row.precision(17);
      row << m.epoch << ',' << m.train_nll << ',' << m.train_loss << ',' << m.val_ll << '\n';
      *metrics << row.str() << std::flush;
    }
    spdlog::debug("epoch {} train_nll {:.6f} val_ll {:.6f}", epoch, m.train_nll, m.val_ll);
  }
  restore(net.parameters(), best);
  return result;
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["components"] = c.components;
  j["embed"] = c.embed;
  j["hidden"] = c.hidden;
  j["mi_weight"] = c.mi_weight;
  j["use_gnn"] = c.use_gnn;
  j["use_mi"] = c.use_mi;
  j["use_omega_mm"] = c.use_omega_mm;
  j["mi_sweep"] = c.mi_sweep;
  j["horizon"] = c.horizon;
  j["history"] = c.history;
  j["max_detections"] = c.max_detections;
  j["agents"] = c.agents;
  j["state_dim"] = c.state_dim;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  c.components = j.at("components").get<int>();
  c.embed = j.at("embed").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.mi_weight = j.at("mi_weight").get<double>();
  c.use_gnn = j.at("use_gnn").get<bool>();
  c.use_mi = j.at("use_mi").get<bool>();
  c.use_omega_mm = j.at("use_omega_mm").get<bool>();
  c.mi_sweep = j.at("mi_sweep").get<bool>();
  c.horizon = j.at("horizon").get<int>();
  c.history = j.at("history").get<int>();
  c.max_detections = j.at("max_detections").get<int>();
  c.agents = j.at("agents").get<int>();
  c.state_dim = j.at("state_dim").get<int>();
  return c;
}

std::string checkpoint_text(const Network& net, const CheckpointMeta& meta) {
  nlohmann::ordered_json j;
  j["dataset"] = meta.dataset;
  j["seed"] = meta.seed;
  j["config_hash"] = meta.config_hash;
  j["model"] = model_config_to_json(net.config());
  const auto p = ad::parameters_to_json(net.parameters());
  j["version"] = p["version"];
  j["parameters"] = p["parameters"];
  return j.dump() + "\n";
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const CheckpointMeta& meta) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_text(net, meta);
}

Network load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ad::CheckpointError("cannot open checkpoint " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ad::CheckpointError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  Network net(model_config_from_json(j.at("model")), 0);
  ad::parameters_from_json(j, net.parameters());
  if (meta) {
    meta->dataset = j.value("dataset", "");
    meta->seed = j.value("seed", std::uint64_t{0});
    meta->config_hash = j.value("config_hash", "");
  }
  return net;
}

}  // namespace pursuit
