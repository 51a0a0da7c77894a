#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pursuit/autodiff/layers.hpp"
#include "pursuit/config.hpp"
#include "pursuit/data/samples.hpp"
#include "pursuit/model/mixture.hpp"

namespace pursuit {

// Samples re-laid out for the network: one matrix per recurrent step.
struct Batch {
  int size = 0;
  int agents = 0;
  std::vector<ad::Matrix> detections;  // K x [B x 3], oldest first
  ad::Matrix detection_count;          // [B x 1]
  std::vector<ad::Matrix> agent_steps; // (H+1) x [B*N x D], row b*N + i
  ad::Matrix target;                   // [B x 2]
};

Batch make_batch(std::span<const Sample* const> samples);
Batch make_batch(std::span<const Sample> samples);

// Per-row MI draws: the component each row is sampled from and the two
// standard normals of the reparameterized draw.
struct MiNoise {
  std::vector<int> component;  // size R
  ad::Matrix eps;              // [R x 2]
};

// Uniform component per row (sweep = false) or every component for every row
// (sweep = true, R = B*G with row k*B + b).
MiNoise draw_mi_noise(int batch, int components, bool sweep, Rng& rng);

// Raw-to-constrained mixture heads, each [B x G].
struct MixtureHeads {
  ad::Var mux, muy, sx, sy, rho, w;
};

struct LossTerms {
  ad::Var nll;    // mean mixture NLL over the batch
  ad::Var ce;     // mean q_phi cross-entropy (absent when MI is off)
  ad::Var total;  // nll + lambda * ce
  MixtureHeads heads;
};

// Detection encoder, optional agent encoder, omega-conditioned decoder (or the
// wide baseline head) and the MI posterior, all in one parameter set.
class Network {
 public:
  Network(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ad::ParameterSet& parameters() { return params_; }
  const ad::ParameterSet& parameters() const { return params_; }

  int embedding_size() const;
  double mi_weight() const { return cfg_.use_mi ? cfg_.mi_weight : 0.0; }

  ad::Var encode_detections(ad::Tape& t, const Batch& b) const;
  ad::Var encode_agents(ad::Tape& t, const Batch& b) const;
  ad::Var embed(ad::Tape& t, const Batch& b) const;

  // One [e; onehot_k] pass through the shared decoder -> raw [B x 6].
  ad::Var decode_component(ad::Tape& t, ad::Var e, int k) const;
  MixtureHeads decode(ad::Tape& t, ad::Var e) const;

  // q_phi logits for [e; y_hat]: [R x G].
  ad::Var posterior_logits(ad::Tape& t, ad::Var e, ad::Var y_hat) const;
  // Mean cross-entropy of q_phi against the sampled components.
  ad::Var mi_objective(ad::Tape& t, ad::Var e, const MixtureHeads& h, const MiNoise& noise) const;

  // Full objective. With MI on, `noise` must be supplied.
  LossTerms loss(ad::Tape& t, const Batch& b, const MiNoise* noise) const;

  std::vector<MixtureOutput> predict(const Batch& b) const;

 private:
  ad::Var param(ad::Tape& t, ad::Parameter* p) const { return t.param(*p); }

  ModelConfig cfg_;
  ad::ParameterSet params_;
  ad::LstmCell det_lstm_;
  ad::Affine det_out_;
  ad::LstmCell agent_lstm_;
  ad::Parameter* gnn_w_ = nullptr;
  ad::Affine dec_hidden_;
  ad::Affine dec_out_;
  ad::Affine q_hidden_;
  ad::Affine q_out_;
};

std::vector<MixtureOutput> extract_mixtures(const MixtureHeads& h);

}  // namespace pursuit
