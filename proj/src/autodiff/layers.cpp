#include "pursuit/autodiff/layers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace pursuit::ad {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

Matrix xavier_uniform(int in, int out, Rng& rng) {
  const double a = std::sqrt(6.0 / (in + out));
  Matrix m(in, out);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(-a, a);
  return m;
}

Var affine(Var x, Var w, Var b) {
  if (x.cols() != w.rows())
    throw ShapeError("affine: input " + x.value().shape_string() + " vs weight " + w.value().shape_string());
  return add_row(matmul(x, w), b);
}

Affine::Affine(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng)
    : w(&ps.add(name + ".w", xavier_uniform(in, out, rng))), b(&ps.add(name + ".b", Matrix(1, out))) {}

LstmState lstm_cell(Var x, LstmState prev, Var wx, Var wh, Var b) {
  const int h = prev.h.cols();
  if (wx.cols() != 4 * h || wh.rows() != h || wh.cols() != 4 * h || prev.c.cols() != h)
    throw ShapeError("lstm_cell: hidden size mismatch");
  Var z = add_row(add(matmul(x, wx), matmul(prev.h, wh)), b);
  Var i = sigmoid(slice_cols(z, 0, h));
  Var f = sigmoid(slice_cols(z, h, h));
  Var g = tanh(slice_cols(z, 2 * h, h));
  Var o = sigmoid(slice_cols(z, 3 * h, h));
  Var c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh(c)), c};
}

LstmCell::LstmCell(ParameterSet& ps, const std::string& name, int in, int hidden, Rng& rng) {
  wx = &ps.add(name + ".wx", xavier_uniform(in, 4 * hidden, rng));
  wh = &ps.add(name + ".wh", xavier_uniform(hidden, 4 * hidden, rng));
  Matrix bias(1, 4 * hidden);
  for (int k = hidden; k < 2 * hidden; ++k) bias[k] = 1.0;
  b = &ps.add(name + ".b", std::move(bias));
}

LstmState LstmCell::zero_state(Tape& t, int batch) const {
  return {t.constant(Matrix(batch, hidden())), t.constant(Matrix(batch, hidden()))};
}

std::vector<Edge> complete_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return e;
}

std::vector<ScatterEntry> normalized_adjacency(int n, std::span<const Edge> edges, int blocks) {
  std::set<std::pair<int, int>> adj;
  for (int i = 0; i < n; ++i) adj.insert({i, i});
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw ShapeError("gnn_layer: edge endpoint out of range");
    adj.insert({e.u, e.v});
    adj.insert({e.v, e.u});
  }
  std::vector<int> degree(n, 0);
  for (const auto& [i, j] : adj) ++degree[i];
  std::vector<ScatterEntry> out;
  out.reserve(adj.size() * blocks);
  for (int blk = 0; blk < blocks; ++blk)
    for (const auto& [i, j] : adj)
      out.push_back({blk * n + i, blk * n + j, 1.0 / std::sqrt(static_cast<double>(degree[i]) * degree[j])});
  return out;
}

Var gnn_layer(Var h, std::span<const Edge> edges, Var w, Activation act, int blocks) {
  if (blocks < 1 || h.rows() % blocks != 0) throw ShapeError("gnn_layer: rows not divisible into blocks");
  const int n = h.rows() / blocks;
  const auto entries = normalized_adjacency(n, edges, blocks);
  return activate(scatter_rows(matmul(h, w), entries, h.rows()), act);
}

}  // namespace pursuit::ad
