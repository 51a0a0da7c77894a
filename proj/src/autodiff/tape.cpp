#include "pursuit/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

namespace pursuit::ad {

const Matrix& Var::value() const {
  if (!tape_) throw TapeError("use of an unbound Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Matrix& m = value();
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("item() on non-scalar " + m.shape_string());
  return m[0];
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  Var v = push(std::move(n));
  param_ids_.emplace(&p, v.id());
  return v;
}

Var Tape::record(const char* op, Matrix value, std::vector<int> inputs, BackwardFn backward) {
  if (backward_done_) throw TapeError("recording on a tape after backward(); call reset() first");
  if (check_finite_ && !value.all_finite()) throw NonFiniteError(std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](int id) { return nodes_[id].requires_grad; });
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Matrix& Tape::grad(Var v) const {
  static const Matrix kEmpty;
  const Node& n = nodes_.at(v.id());
  return n.grad.empty() && !n.value.empty() ? kEmpty : n.grad;
}

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw TapeError("backward on a Var from another tape");
  if (backward_done_) throw TapeError("backward() called twice on the same tape without reset()");
  const Matrix& lv = nodes_.at(loss.id()).value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward needs a scalar loss, got " + lv.shape_string());
  backward_done_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
  for (auto& n : nodes_)
    if (n.param && !n.grad.empty()) n.param->grad += n.grad;
}

void Tape::reset() {
  nodes_.clear();
  param_ids_.clear();
  backward_done_ = false;
}

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw TapeError("unbound Var");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape() || !a.valid()) throw TapeError("operands live on different tapes");
  return *a.tape();
}

void require_same(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

// y = f(x) element-wise with dy/dx = df(x, y).
template <typename F, typename DF>
Var unary(const char* op, Var x, F f, DF df) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  const int xi = x.id();
  return t.record(op, std::move(y), {xi}, [xi, df](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& xv = tp.value(xi);
    const Matrix& yv = tp.value(self);
    Matrix& gx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix c;
  gemm(a.value(), false, b.value(), false, c, false);
  const int ai = a.id(), bi = b.id();
  return t.record("matmul", std::move(c), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ai)) gemm(g, false, tp.value(bi), true, tp.grad_buffer(ai), true);
    if (tp.requires_grad(bi)) gemm(tp.value(ai), true, g, false, tp.grad_buffer(bi), true);
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("add", a.value(), b.value());
  Matrix c = a.value();
  c += b.value();
  const int ai = a.id(), bi = b.id();
  return t.record("add", std::move(c), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ai)) tp.grad_buffer(ai) += g;
    if (tp.requires_grad(bi)) tp.grad_buffer(bi) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("sub", a.value(), b.value());
  Matrix c = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= bv[i];
  const int ai = a.id(), bi = b.id();
  return t.record("sub", std::move(c), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ai)) tp.grad_buffer(ai) += g;
    if (tp.requires_grad(bi)) {
      Matrix& gb = tp.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("mul", a.value(), b.value());
  Matrix c = a.value();
  const Matrix& bv = b.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= bv[i];
  const int ai = a.id(), bi = b.id();
  return t.record("mul", std::move(c), {ai, bi}, [ai, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(ai)) {
      Matrix& ga = tp.grad_buffer(ai);
      const Matrix& bv = tp.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(bi)) {
      Matrix& gb = tp.grad_buffer(bi);
      const Matrix& av = tp.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var add_row(Var x, Var b) {
  Tape& t = tape_of(x, b);
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("add_row: bias " + bv.shape_string() + " does not match " + xv.shape_string());
  Matrix y = xv;
  for (int r = 0; r < y.rows(); ++r)
    for (int c = 0; c < y.cols(); ++c) y(r, c) += bv[c];
  const int xi = x.id(), bi = b.id();
  return t.record("add_row", std::move(y), {xi, bi}, [xi, bi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    if (tp.requires_grad(xi)) tp.grad_buffer(xi) += g;
    if (tp.requires_grad(bi)) {
      Matrix& gb = tp.grad_buffer(bi);
      for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
    }
  });
}

Var scale(Var x, double c) {
  return unary("scale", x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Var add_scalar(Var x, double c) {
  return unary("add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Var sigmoid(Var x) {
  return unary("sigmoid", x, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus(Var x) {
  return unary("softplus", x, stable_softplus, [](double v, double) { return stable_sigmoid(v); });
}

Var exp(Var x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  return unary("log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  return unary("sqrt", x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var x) {
  return unary("square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

Var slice_cols(Var x, int begin, int count) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (begin < 0 || count < 0 || begin + count > xv.cols())
    throw ShapeError("slice_cols out of range on " + xv.shape_string());
  Matrix y(xv.rows(), count);
  for (int r = 0; r < xv.rows(); ++r)
    for (int c = 0; c < count; ++c) y(r, c) = xv(r, begin + c);
  const int xi = x.id();
  return t.record("slice_cols", std::move(y), {xi}, [xi, begin, count](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& gx = tp.grad_buffer(xi);
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < count; ++c) gx(r, begin + c) += g(r, c);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  Tape& t = tape_of(parts[0]);
  const int rows = parts[0].rows();
  int cols = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw TapeError("concat_cols operands live on different tapes");
    if (p.rows() != rows) throw ShapeError("concat_cols row mismatch");
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix y(rows, cols);
  int off = 0;
  for (const Var& p : parts) {
    const Matrix& pv = p.value();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < pv.cols(); ++c) y(r, off + c) = pv(r, c);
    off += pv.cols();
  }
  return t.record("concat_cols", std::move(y), ids, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    int off = 0;
    for (int id : ids) {
      const int w = tp.value(id).cols();
      if (tp.requires_grad(id)) {
        Matrix& gp = tp.grad_buffer(id);
        for (int r = 0; r < g.rows(); ++r)
          for (int c = 0; c < w; ++c) gp(r, c) += g(r, off + c);
      }
      off += w;
    }
  });
}

Var pick_cols(Var x, std::span<const int> index) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (static_cast<int>(index.size()) != xv.rows()) throw ShapeError("pick_cols index count != rows");
  std::vector<int> idx(index.begin(), index.end());
  Matrix y(xv.rows(), 1);
  for (int r = 0; r < xv.rows(); ++r) {
    if (idx[r] < 0 || idx[r] >= xv.cols()) throw ShapeError("pick_cols index out of range");
    y(r, 0) = xv(r, idx[r]);
  }
  const int xi = x.id();
  return t.record("pick_cols", std::move(y), {xi}, [xi, idx = std::move(idx)](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& gx = tp.grad_buffer(xi);
    for (int r = 0; r < g.rows(); ++r) gx(r, idx[r]) += g(r, 0);
  });
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const int xi = x.id();
  return t.record("sum", Matrix(1, 1, s), {xi}, [xi](Tape& tp, int self) {
    const double g = tp.grad_buffer(self)[0];
    Matrix& gx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const auto n = static_cast<double>(x.value().size());
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / n);
}

Var log_sum_exp(Var x) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (xv.size() == 0) throw ShapeError("log_sum_exp of an empty tensor");
  const double m = *std::max_element(xv.values().begin(), xv.values().end());
  double s = 0.0;
  for (double v : xv.values()) s += std::exp(v - m);
  const int xi = x.id();
  return t.record("log_sum_exp", Matrix(1, 1, m + std::log(s)), {xi}, [xi](Tape& tp, int self) {
    const double g = tp.grad_buffer(self)[0];
    const double lse = tp.value(self)[0];
    const Matrix& xv = tp.value(xi);
    Matrix& gx = tp.grad_buffer(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += g * std::exp(xv[i] - lse);
  });
}

Var log_sum_exp_rows(Var x) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  if (xv.cols() == 0) throw ShapeError("log_sum_exp_rows with zero columns");
  Matrix y(xv.rows(), 1);
  for (int r = 0; r < xv.rows(); ++r) {
    const double* row = xv.row(r);
    const double m = *std::max_element(row, row + xv.cols());
    double s = 0.0;
    for (int c = 0; c < xv.cols(); ++c) s += std::exp(row[c] - m);
    y(r, 0) = m + std::log(s);
  }
  const int xi = x.id();
  return t.record("log_sum_exp_rows", std::move(y), {xi}, [xi](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& lse = tp.value(self);
    const Matrix& xv = tp.value(xi);
    Matrix& gx = tp.grad_buffer(xi);
    for (int r = 0; r < xv.rows(); ++r)
      for (int c = 0; c < xv.cols(); ++c) gx(r, c) += g(r, 0) * std::exp(xv(r, c) - lse(r, 0));
  });
}

Var log_softmax_rows(Var x) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix y(xv.rows(), xv.cols());
  for (int r = 0; r < xv.rows(); ++r) {
    const double* row = xv.row(r);
    const double m = *std::max_element(row, row + xv.cols());
    double s = 0.0;
    for (int c = 0; c < xv.cols(); ++c) s += std::exp(row[c] - m);
    const double lse = m + std::log(s);
    for (int c = 0; c < xv.cols(); ++c) y(r, c) = row[c] - lse;
  }
  const int xi = x.id();
  return t.record("log_softmax_rows", std::move(y), {xi}, [xi](Tape& tp, int self) {
    // dx = g - softmax * sum(g)
    const Matrix& g = tp.grad_buffer(self);
    const Matrix& yv = tp.value(self);
    Matrix& gx = tp.grad_buffer(xi);
    for (int r = 0; r < g.rows(); ++r) {
      double gs = 0.0;
      for (int c = 0; c < g.cols(); ++c) gs += g(r, c);
      for (int c = 0; c < g.cols(); ++c) gx(r, c) += g(r, c) - std::exp(yv(r, c)) * gs;
    }
  });
}

Var scatter_rows(Var x, std::span<const ScatterEntry> entries, int out_rows) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix y(out_rows, xv.cols());
  for (const auto& e : entries) {
    if (e.out_row < 0 || e.out_row >= out_rows || e.in_row < 0 || e.in_row >= xv.rows())
      throw ShapeError("scatter_rows entry out of range");
    const double* src = xv.row(e.in_row);
    double* dst = y.row(e.out_row);
    for (int c = 0; c < xv.cols(); ++c) dst[c] += e.coef * src[c];
  }
  std::vector<ScatterEntry> es(entries.begin(), entries.end());
  const int xi = x.id();
  return t.record("scatter_rows", std::move(y), {xi}, [xi, es = std::move(es)](Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    Matrix& gx = tp.grad_buffer(xi);
    for (const auto& e : es) {
      const double* src = g.row(e.out_row);
      double* dst = gx.row(e.in_row);
      for (int c = 0; c < g.cols(); ++c) dst[c] += e.coef * src[c];
    }
  });
}

}  // namespace pursuit::ad
