#include "pursuit/model/network.hpp"

#include <stdexcept>

namespace pursuit {

using ad::Matrix;
using ad::Tape;
using ad::Var;

Batch make_batch(std::span<const Sample* const> samples) {
  if (samples.empty()) throw std::invalid_argument("empty batch");
  const Sample& first = *samples[0];
  const int bsz = static_cast<int>(samples.size());
  const int k_det = static_cast<int>(first.detection_features.size()) / kDetectionFeatures;
  const int steps = first.history + 1;
  const int n = first.agents;
  const int d = n > 0 ? static_cast<int>(first.agent_window.size()) / (steps * n) : 0;

  Batch b;
  b.size = bsz;
  b.agents = n;
  b.detections.assign(k_det, Matrix(bsz, kDetectionFeatures));
  b.detection_count = Matrix(bsz, 1);
  b.agent_steps.assign(steps, Matrix(bsz * n, d));
  b.target = Matrix(bsz, 2);
  for (int r = 0; r < bsz; ++r) {
    const Sample& s = *samples[r];
    if (s.history != first.history || s.agents != n || s.detection_features.size() != first.detection_features.size() ||
        s.agent_window.size() != first.agent_window.size())
      throw std::invalid_argument("samples in a batch must share history, agent count and detection size");
    for (int k = 0; k < k_det; ++k)
      for (int c = 0; c < kDetectionFeatures; ++c)
        b.detections[k](r, c) = s.detection_features[k * kDetectionFeatures + c];
    b.detection_count(r, 0) = s.detection_count;
    for (int st = 0; st < steps; ++st)
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c)
          b.agent_steps[st](r * n + i, c) = s.agent_window[(static_cast<std::size_t>(st) * n + i) * d + c];
    b.target(r, 0) = s.target.x;
    b.target(r, 1) = s.target.y;
  }
  return b;
}

Batch make_batch(std::span<const Sample> samples) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return make_batch(std::span<const Sample* const>(ptrs));
}

MiNoise draw_mi_noise(int batch, int components, bool sweep, Rng& rng) {
  MiNoise n;
  const int rows = sweep ? batch * components : batch;
  n.eps = Matrix(rows, 2);
  for (int r = 0; r < rows; ++r) {
    n.component.push_back(sweep ? r / batch : static_cast<int>(rng.below(components)));
    n.eps(r, 0) = rng.normal();
    n.eps(r, 1) = rng.normal();
  }
  return n;
}

Network::Network(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.components < 1 || cfg.embed < 1 || cfg.hidden < 1) throw std::invalid_argument("model sizes must be >= 1");
  if (cfg.mi_weight < 0.0) throw std::invalid_argument("mi_weight must be >= 0");
  if (cfg.use_mi && !cfg.use_omega_mm) throw std::invalid_argument("the MI term needs the omega-conditioned decoder");
  if (cfg.use_gnn && (cfg.agents < 1 || cfg.state_dim < 1))
    throw std::invalid_argument("agent encoder needs agents and state_dim");

  Rng rng(seed);
  const int g = cfg.components;
  det_lstm_ = ad::LstmCell(params_, "f.lstm", kDetectionFeatures, cfg.hidden, rng);
  det_out_ = ad::Affine(params_, "f.out", cfg.hidden + 1, cfg.embed, rng);
  if (cfg.use_gnn) {
    agent_lstm_ = ad::LstmCell(params_, "g.lstm", cfg.state_dim, cfg.hidden, rng);
    gnn_w_ = &params_.add("g.gnn.w", ad::xavier_uniform(cfg.hidden, cfg.embed, rng));
  }
  const int e = embedding_size();
  if (cfg.use_omega_mm) {
    dec_hidden_ = ad::Affine(params_, "dec.hidden", e + g, cfg.hidden, rng);
    dec_out_ = ad::Affine(params_, "dec.out", cfg.hidden, 6, rng);
  } else {
    dec_hidden_ = ad::Affine(params_, "dec.hidden", e, cfg.hidden, rng);
    dec_out_ = ad::Affine(params_, "dec.out", cfg.hidden, 6 * g, rng);
  }
  if (cfg.use_mi) {
    q_hidden_ = ad::Affine(params_, "q.hidden", e + 2, cfg.hidden, rng);
    q_out_ = ad::Affine(params_, "q.out", cfg.hidden, g, rng);
  }
}

int Network::embedding_size() const { return cfg_.use_gnn ? 2 * cfg_.embed : cfg_.embed; }

Var Network::encode_detections(Tape& t, const Batch& b) const {
  ad::LstmState s = det_lstm_.zero_state(t, b.size);
  for (const Matrix& step : b.detections) s = det_lstm_(t, t.constant(step), s);
  const Var parts[] = {s.h, t.constant(b.detection_count)};
  return ad::tanh(det_out_(t, ad::concat_cols(parts)));
}

Var Network::encode_agents(Tape& t, const Batch& b) const {
  if (!cfg_.use_gnn) throw std::logic_error("agent encoder is disabled in this model");
  if (b.agents != cfg_.agents || b.agent_steps.empty() || b.agent_steps[0].cols() != cfg_.state_dim)
    throw ad::ShapeError("agent window does not match the model's agent count or state size");
  const int n = b.agents;
  ad::LstmState s = agent_lstm_.zero_state(t, b.size * n);
  for (const Matrix& step : b.agent_steps) s = agent_lstm_(t, t.constant(step), s);
  const auto edges = ad::complete_graph(n);
  Var nodes = ad::gnn_layer(s.h, edges, t.param(*gnn_w_), ad::Activation::relu, b.size);
  std::vector<ad::ScatterEntry> pool;
  for (int r = 0; r < b.size; ++r)
    for (int i = 0; i < n; ++i) pool.push_back({r, r * n + i, 1.0 / n});
  return ad::scatter_rows(nodes, pool, b.size);
}

Var Network::embed(Tape& t, const Batch& b) const {
  Var f = encode_detections(t, b);
  if (!cfg_.use_gnn) return f;
  const Var parts[] = {f, encode_agents(t, b)};
  return ad::concat_cols(parts);
}

Var Network::decode_component(Tape& t, Var e, int k) const {
  if (!cfg_.use_omega_mm) throw std::logic_error("decode_component needs the omega-conditioned decoder");
  Matrix onehot(e.rows(), cfg_.components);
  for (int r = 0; r < e.rows(); ++r) onehot(r, k) = 1.0;
  const Var parts[] = {e, t.constant(std::move(onehot))};
  return dec_out_(t, ad::relu(dec_hidden_(t, ad::concat_cols(parts))));
}

namespace {

// raw columns: mux, muy, sx, sy, rho, w
MixtureHeads squash(std::span<const Var> raw_per_k, int base_stride) {
  std::vector<Var> cols[6];
  for (std::size_t k = 0; k < raw_per_k.size(); ++k)
    for (int j = 0; j < 6; ++j)
      cols[j].push_back(ad::slice_cols(raw_per_k[k], base_stride * static_cast<int>(k) + j, 1));
  MixtureHeads h;
  h.mux = ad::sigmoid(ad::concat_cols(cols[0]));
  h.muy = ad::sigmoid(ad::concat_cols(cols[1]));
  h.sx = ad::add_scalar(ad::softplus(ad::concat_cols(cols[2])), kSigmaFloor);
  h.sy = ad::add_scalar(ad::softplus(ad::concat_cols(cols[3])), kSigmaFloor);
  h.rho = ad::scale(ad::tanh(ad::concat_cols(cols[4])), kRhoScale);
  h.w = ad::concat_cols(cols[5]);
  return h;
}

}  // namespace

MixtureHeads Network::decode(Tape& t, Var e) const {
  const int g = cfg_.components;
  if (cfg_.use_omega_mm) {
    std::vector<Var> raw;
    for (int k = 0; k < g; ++k) raw.push_back(decode_component(t, e, k));
    return squash(raw, 0);
  }
  Var wide = dec_out_(t, ad::relu(dec_hidden_(t, e)));
  std::vector<Var> raw(g, wide);
  return squash(raw, 6);
}

Var Network::posterior_logits(Tape& t, Var e, Var y_hat) const {
  if (!cfg_.use_mi) throw std::logic_error("MI posterior is disabled in this model");
  const Var parts[] = {e, y_hat};
  return q_out_(t, ad::relu(q_hidden_(t, ad::concat_cols(parts))));
}

Var Network::mi_objective(Tape& t, Var e, const MixtureHeads& h, const MiNoise& noise) const {
  const int bsz = e.rows();
  const int rows = static_cast<int>(noise.component.size());
  if (rows == 0 || rows % bsz != 0 || noise.eps.rows() != rows || noise.eps.cols() != 2)
    throw ad::ShapeError("MI noise does not match the batch");
  auto expand = [&](Var x) {
    if (rows == bsz) return x;
    std::vector<ad::ScatterEntry> rep;
    for (int r = 0; r < rows; ++r) rep.push_back({r, r % bsz, 1.0});
    return ad::scatter_rows(x, rep, rows);
  };
  auto pick = [&](Var head) { return ad::pick_cols(expand(head), noise.component); };
  Matrix e1(rows, 1), e2(rows, 1);
  for (int r = 0; r < rows; ++r) {
    e1(r, 0) = noise.eps(r, 0);
    e2(r, 0) = noise.eps(r, 1);
  }
  Var eps1 = t.constant(std::move(e1));
  Var eps2 = t.constant(std::move(e2));
  Var rho = pick(h.rho);
  Var sy = pick(h.sy);
  Var yx = ad::add(pick(h.mux), ad::mul(pick(h.sx), eps1));
  Var root = ad::sqrt(ad::add_scalar(ad::scale(ad::square(rho), -1.0), 1.0));
  Var yy = ad::add(pick(h.muy), ad::mul(sy, ad::add(ad::mul(rho, eps1), ad::mul(root, eps2))));
  const Var y_parts[] = {yx, yy};
  Var logits = posterior_logits(t, expand(e), ad::concat_cols(y_parts));
  return ad::scale(ad::mean(ad::pick_cols(ad::log_softmax_rows(logits), noise.component)), -1.0);
}

LossTerms Network::loss(Tape& t, const Batch& b, const MiNoise* noise) const {
  LossTerms out;
  Var e = embed(t, b);
  out.heads = decode(t, e);
  const MixtureHeads& h = out.heads;
  Var logd = bivariate_log_density(h.mux, h.muy, h.sx, h.sy, h.rho, b.target);
  Var ll = ad::log_sum_exp_rows(ad::add(logd, ad::log_softmax_rows(h.w)));
  out.nll = ad::scale(ad::mean(ll), -1.0);
  out.total = out.nll;
  if (cfg_.use_mi) {
    if (!noise) throw std::invalid_argument("MI objective needs a noise draw");
    out.ce = mi_objective(t, e, h, *noise);
    out.total = ad::add(out.nll, ad::scale(out.ce, cfg_.mi_weight));
  }
  return out;
}

std::vector<MixtureOutput> extract_mixtures(const MixtureHeads& h) {
  const Matrix& w = h.w.value();
  std::vector<MixtureOutput> out(w.rows());
  for (int r = 0; r < w.rows(); ++r) {
    MixtureOutput& m = out[r];
    m.pi = softmax(std::span<const double>(w.row(r), w.cols()));
    for (int k = 0; k < w.cols(); ++k) {
      Component c;
      c.mu = {h.mux.value()(r, k), h.muy.value()(r, k)};
      c.sigma = {h.sx.value()(r, k), h.sy.value()(r, k)};
      c.rho = h.rho.value()(r, k);
      m.components.push_back(c);
    }
  }
  return out;
}

std::vector<MixtureOutput> Network::predict(const Batch& b) const {
  Tape t;
  return extract_mixtures(decode(t, embed(t, b)));
}

}  // namespace pursuit
