#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pursuit/autodiff/tape.hpp"
#include "pursuit/sim/random.hpp"

namespace pursuit::ad {

// Owns parameters in creation order; addresses stay stable.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix init);
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }
  std::vector<Parameter*> all();

  // Total scalar count.
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Glorot-uniform [in x out].
Matrix xavier_uniform(int in, int out, Rng& rng);

// x W + b with b a [1 x out] row.
Var affine(Var x, Var w, Var b);

struct Affine {
  Parameter* w = nullptr;
  Parameter* b = nullptr;

  Affine() = default;
  Affine(ParameterSet& ps, const std::string& name, int in, int out, Rng& rng);
  Var operator()(Tape& t, Var x) const { return affine(x, t.param(*w), t.param(*b)); }
  int in() const { return w->value.rows(); }
  int out() const { return w->value.cols(); }
};

struct LstmState {
  Var h;
  Var c;
};

// Gate layout along the 4*hidden axis: input, forget, candidate, output.
LstmState lstm_cell(Var x, LstmState prev, Var wx, Var wh, Var b);

struct LstmCell {
  Parameter* wx = nullptr;  // [in x 4h]
  Parameter* wh = nullptr;  // [h x 4h]
  Parameter* b = nullptr;   // [1 x 4h]

  LstmCell() = default;
  LstmCell(ParameterSet& ps, const std::string& name, int in, int hidden, Rng& rng);
  int hidden() const { return wh->value.rows(); }
  LstmState zero_state(Tape& t, int batch) const;
  LstmState operator()(Tape& t, Var x, LstmState prev) const {
    return lstm_cell(x, prev, t.param(*wx), t.param(*wh), t.param(*b));
  }
};

// Undirected edge; self-loops are added by gnn_layer regardless.
struct Edge {
  int u;
  int v;
};

std::vector<Edge> complete_graph(int n);

// Normalized sparse aggregation for the edge set with self-loops, repeated
// `blocks` times along the row axis (node i of block b is row b*n + i).
std::vector<ScatterEntry> normalized_adjacency(int n, std::span<const Edge> edges, int blocks = 1);

// h_i' = act( sum_{j in N(i)} h_j W / sqrt(d_i d_j) ), N(i) including i.
Var gnn_layer(Var h, std::span<const Edge> edges, Var w, Activation act = Activation::relu, int blocks = 1);

}  // namespace pursuit::ad
