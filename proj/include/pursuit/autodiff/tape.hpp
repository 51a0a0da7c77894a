#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pursuit/autodiff/matrix.hpp"

namespace pursuit::ad {

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trainable array. The tape accumulates into `grad` during backward.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void zero_grad() { grad.fill(0.0); }
};

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  // Value of a 1 x 1 result.
  double item() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records operations in execution order; backward() replays them in exact
// reverse order, accumulating gradients additively at fan-out.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

#ifdef NDEBUG
  static constexpr bool kCheckFiniteDefault = false;
#else
  static constexpr bool kCheckFiniteDefault = true;
#endif

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf whose gradient is tracked (used for input sensitivities).
  Var variable(Matrix value);
  // Leaf bound to a parameter; repeated calls reuse the same node.
  Var param(Parameter& p);

  // Records an op node. `inputs` are the ids the backward rule writes to.
  // With finiteness checks on, a NaN/Inf value raises NonFiniteError naming `op`.
  Var record(const char* op, Matrix value, std::vector<int> inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and runs every rule in reverse. Parameter leaves
  // add their gradient into Parameter::grad. A second call without reset()
  // throws TapeError.
  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_.at(id).value; }
  const Matrix& grad(Var v) const;
  // Gradient buffer of node `id`, allocated on first use.
  Matrix& grad_buffer(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  void reset();
  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_ids_;
  bool backward_done_ = false;
  bool check_finite_ = kCheckFiniteDefault;
};

enum class Activation { identity, relu, tanh, sigmoid };

// ---- element-wise and linear algebra -------------------------------------
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// x [n x m] + row vector b [1 x m] broadcast over rows.
Var add_row(Var x, Var b);
Var scale(Var x, double c);
Var add_scalar(Var x, double c);
Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var softplus(Var x);
Var exp(Var x);
Var log(Var x);
Var sqrt(Var x);
Var square(Var x);
Var activate(Var x, Activation a);

// ---- shape ---------------------------------------------------------------
Var slice_cols(Var x, int begin, int count);
Var concat_cols(std::span<const Var> parts);
// out[i] = x[i][index[i]]  -> [n x 1]
Var pick_cols(Var x, std::span<const int> index);

// ---- reductions ----------------------------------------------------------
Var sum(Var x);   // [1 x 1]
Var mean(Var x);  // [1 x 1]
// Max-shifted log-sum-exp over every element -> [1 x 1].
Var log_sum_exp(Var x);
// Row-wise log-sum-exp -> [n x 1].
Var log_sum_exp_rows(Var x);
// x - logsumexp(row) per row.
Var log_softmax_rows(Var x);

// ---- sparse aggregation --------------------------------------------------
struct ScatterEntry {
  int out_row;
  int in_row;
  double coef;
};
// out[e.out_row] += e.coef * x[e.in_row] for every entry -> [out_rows x d].
Var scatter_rows(Var x, std::span<const ScatterEntry> entries, int out_rows);

}  // namespace pursuit::ad
