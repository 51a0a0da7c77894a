#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "pursuit/autodiff/adam.hpp"
#include "pursuit/autodiff/checkpoint.hpp"
#include "pursuit/autodiff/layers.hpp"
#include "pursuit/autodiff/tape.hpp"

using namespace pursuit;
using namespace pursuit::ad;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

// Random linear functional of a tape value, so every output entry matters.
Var probe(Tape& t, Var y, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(y, t.constant(random_matrix(y.rows(), y.cols(), rng))));
}

double op_gradient_error(const std::function<Var(Var)>& op, Matrix x, std::uint64_t seed = 5) {
  return oracle::check_input_gradient(x, [&](Tape& t, Var v) { return probe(t, op(v), seed); });
}

// Plain-loop LSTM step with gate order input, forget, candidate, output.
void lstm_reference(const Matrix& x, const Matrix& wx, const Matrix& wh, const Matrix& b, std::vector<double>& h,
                    std::vector<double>& c) {
  const int n = static_cast<int>(h.size());
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<double> z(4 * n);
  for (int j = 0; j < 4 * n; ++j) {
    double s = b(0, j);
    for (int i = 0; i < x.cols(); ++i) s += x(0, i) * wx(i, j);
    for (int i = 0; i < n; ++i) s += h[i] * wh(i, j);
    z[j] = s;
  }
  for (int j = 0; j < n; ++j) {
    const double ig = sig(z[j]), fg = sig(z[n + j]), gg = std::tanh(z[2 * n + j]), og = sig(z[3 * n + j]);
    c[j] = fg * c[j] + ig * gg;
    h[j] = og * std::tanh(c[j]);
  }
}

}  // namespace

TEST_CASE("gemm against loops") {
  Rng rng(1);
  const Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 2, rng);
  Matrix c(3, 2);
  gemm(a, false, b, false, c, false);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  Matrix ct(2, 3);
  gemm(b, true, a, true, ct, false);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) CHECK(ct(j, i) == doctest::Approx(c(i, j)).epsilon(1e-14));
  CHECK_THROWS_AS(gemm(a, false, a, false, c, false), ShapeError);
}

TEST_CASE("affine") {
  Rng rng(2);
  Tape t;
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(1, 4, rng);
  const Var id = affine(t.constant(x), t.constant(Matrix::identity(4)), t.constant(Matrix(1, 4)));
  CHECK(id.value() == x);
  const Var bias = affine(t.constant(Matrix(3, 4)), t.constant(random_matrix(4, 4, rng)), t.constant(b));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) CHECK(bias.value()(r, c) == b(0, c));
  CHECK_THROWS_AS(affine(t.constant(x), t.constant(Matrix(3, 2)), t.constant(Matrix(1, 2))), ShapeError);

  ParameterSet ps;
  Parameter& w = ps.add("w", random_matrix(4, 5, rng));
  Parameter& bb = ps.add("b", random_matrix(1, 5, rng));
  Matrix in = random_matrix(3, 4, rng);
  auto loss = [&](Tape& tp, Var v) { return probe(tp, affine(v, tp.param(w), tp.param(bb)), 9); };
  CHECK(oracle::check_input_gradient(in, loss) < 1e-6);
  const auto r = oracle::check_gradients(ps.all(), [&](Tape& tp) { return loss(tp, tp.constant(in)); }, 25, 3);
  CHECK(r.max_rel < 1e-6);
}

TEST_CASE("element-wise and structural ops match finite differences") {
  Rng rng(3);
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix pos = random_matrix(3, 4, rng, 0.2, 2.0);
  Matrix away = x;  // keep relu inputs off the kink
  for (std::size_t i = 0; i < away.size(); ++i) away[i] += away[i] >= 0.0 ? 0.1 : -0.1;

  CHECK(op_gradient_error([](Var v) { return sigmoid(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return ad::tanh(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return relu(v); }, away) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return softplus(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return ad::exp(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return ad::log(v); }, pos) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return ad::sqrt(v); }, pos) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return square(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return scale(add_scalar(v, 0.3), -2.0); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return mul(v, v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return sub(add(v, v), mul(v, v)); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return matmul(v, slice_cols(v, 0, 3)); }, random_matrix(3, 3, rng)) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return add_row(v, matmul(v.tape()->constant(Matrix(1, 3, 1.0)), v)); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return slice_cols(v, 1, 2); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) {
          const Var parts[] = {v, ad::tanh(v)};
          return concat_cols(parts);
        }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) {
          const int idx[] = {3, 0, 2};
          return pick_cols(v, idx);
        }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return mean(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return log_sum_exp_rows(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return log_softmax_rows(v); }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) {
          const ScatterEntry e[] = {{0, 2, 0.5}, {0, 1, -1.0}, {1, 0, 2.0}, {1, 0, 1.0}};
          return scatter_rows(v, e, 2);
        }, x) < 1e-6);
  CHECK(op_gradient_error([](Var v) { return activate(v, Activation::sigmoid); }, x) < 1e-6);
}

TEST_CASE("log-sum-exp") {
  Tape t;
  CHECK(log_sum_exp(t.constant(Matrix(1, 2))).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(t.constant(Matrix(1, 2, 1000.0))).item() == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(t.constant(Matrix(1, 5, -7.25))).item() == doctest::Approx(-7.25 + std::log(5.0)).epsilon(1e-15));
  CHECK(log_sum_exp_rows(t.constant(Matrix::from_rows({{-1000.0, -1000.0}}))).item() ==
        doctest::Approx(-1000.0 + std::log(2.0)));

  Rng rng(4);
  const Matrix x = random_matrix(1, 6, rng, -3.0, 3.0);
  Tape g;
  const Var v = g.variable(x);
  g.backward(log_sum_exp(v));
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(x[i]);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(g.grad(v)[i] == doctest::Approx(std::exp(x[i]) / z).epsilon(1e-12));
  CHECK(op_gradient_error([](Var w) { return log_sum_exp(w); }, x) < 1e-6);
}

TEST_CASE("tape semantics") {
  SUBCASE("fan-out accumulates") {
    Tape t;
    const Var x = t.variable(Matrix::from_rows({{1.5, -2.0}}));
    t.backward(sum(add(mul(x, x), x)));
    CHECK(t.grad(x)[0] == doctest::Approx(4.0));
    CHECK(t.grad(x)[1] == doctest::Approx(-3.0));
  }
  SUBCASE("second backward and recording after backward are rejected") {
    Tape t;
    const Var x = t.variable(Matrix(1, 1, 2.0));
    const Var y = square(x);
    t.backward(y);
    CHECK_THROWS_AS(t.backward(y), TapeError);
    CHECK_THROWS_AS(square(x), TapeError);
    t.reset();
    const Var x2 = t.variable(Matrix(1, 1, 3.0));
    t.backward(square(x2));
    CHECK(t.grad(x2)[0] == doctest::Approx(6.0));
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape t;
    CHECK_THROWS_AS(t.backward(t.variable(Matrix(2, 1))), ShapeError);
  }
  SUBCASE("non-finite values are caught when checking is on") {
    Tape t;
    t.set_check_finite(true);
    try {
      ad::log(t.constant(Matrix(1, 1, -1.0)));
      FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
      CHECK(std::string(e.what()).find("log") != std::string::npos);
    }
  }
  SUBCASE("parameter leaves are shared and accumulate") {
    ParameterSet ps;
    Parameter& p = ps.add("p", Matrix(1, 1, 3.0));
    Tape t;
    CHECK(t.param(p).id() == t.param(p).id());
    t.backward(add(square(t.param(p)), t.param(p)));
    CHECK(p.grad[0] == doctest::Approx(7.0));
    CHECK_THROWS_AS(ps.add("p", Matrix(1, 1)), std::invalid_argument);
  }
  SUBCASE("forward ops are deterministic") {
    Rng rng(6);
    const Matrix x = random_matrix(4, 4, rng);
    Tape a, b;
    CHECK(log_softmax_rows(matmul(a.constant(x), a.constant(x))).value() ==
          log_softmax_rows(matmul(b.constant(x), b.constant(x))).value());
  }
}

TEST_CASE("recurrent cell") {
  Rng rng(7);
  const int in = 3, hid = 4;

  SUBCASE("zero weights give a zero state") {
    Tape t;
    const LstmState s0{t.constant(Matrix(2, hid)), t.constant(Matrix(2, hid))};
    const LstmState s1 = lstm_cell(t.constant(random_matrix(2, in, rng)), s0, t.constant(Matrix(in, 4 * hid)),
                                   t.constant(Matrix(hid, 4 * hid)), t.constant(Matrix(1, 4 * hid)));
    for (std::size_t i = 0; i < s1.h.value().size(); ++i) CHECK(s1.h.value()[i] == 0.0);
  }

  SUBCASE("matches a loop implementation") {
    const Matrix wx = random_matrix(in, 4 * hid, rng), wh = random_matrix(hid, 4 * hid, rng),
                 b = random_matrix(1, 4 * hid, rng);
    std::vector<double> h(hid, 0.0), c(hid, 0.0);
    Tape t;
    LstmState s{t.constant(Matrix(1, hid)), t.constant(Matrix(1, hid))};
    for (int step = 0; step < 4; ++step) {
      const Matrix x = random_matrix(1, in, rng);
      lstm_reference(x, wx, wh, b, h, c);
      s = lstm_cell(t.constant(x), s, t.constant(wx), t.constant(wh), t.constant(b));
    }
    for (int j = 0; j < hid; ++j) {
      CHECK(s.h.value()[j] == doctest::Approx(h[j]).epsilon(1e-13));
      CHECK(s.c.value()[j] == doctest::Approx(c[j]).epsilon(1e-13));
    }
  }

  SUBCASE("gradient through a 5-step chain") {
    ParameterSet ps;
    const LstmCell cell(ps, "lstm", in, hid, rng);
    std::vector<Matrix> xs;
    for (int i = 0; i < 5; ++i) xs.push_back(random_matrix(2, in, rng));
    auto loss = [&](Tape& t) {
      LstmState s = cell.zero_state(t, 2);
      for (const auto& x : xs) s = cell(t, t.constant(x), s);
      return probe(t, add(s.h, s.c), 11);
    };
    const auto r = oracle::check_gradients(ps.all(), loss, 40, 12);
    CHECK(r.max_rel < 1e-5);
    Matrix x0 = xs[0];
    CHECK(oracle::check_input_gradient(x0, [&](Tape& t, Var v) {
            LstmState s = cell(t, v, cell.zero_state(t, 2));
            for (std::size_t i = 1; i < xs.size(); ++i) s = cell(t, t.constant(xs[i]), s);
            return probe(t, s.h, 13);
          }) < 1e-5);
  }

  SUBCASE("hidden state stays inside (-1, 1)") {
    const Matrix wx = random_matrix(in, 4 * hid, rng, -5, 5), wh = random_matrix(hid, 4 * hid, rng, -5, 5),
                 b = random_matrix(1, 4 * hid, rng, -5, 5);
    const Matrix x = random_matrix(1, in, rng, -3, 3);
    Tape t;
    LstmState s{t.constant(Matrix(1, hid)), t.constant(Matrix(1, hid))};
    for (int step = 0; step < 60; ++step) {
      s = lstm_cell(t.constant(x), s, t.constant(wx), t.constant(wh), t.constant(b));
      for (std::size_t i = 0; i < s.h.value().size(); ++i) REQUIRE(std::abs(s.h.value()[i]) < 1.0);
    }
  }

  SUBCASE("forget gate bias starts at one") {
    ParameterSet ps;
    const LstmCell cell(ps, "c", in, hid, rng);
    for (int j = 0; j < hid; ++j) {
      CHECK(cell.b->value(0, j) == 0.0);
      CHECK(cell.b->value(0, hid + j) == 1.0);
    }
  }
}

TEST_CASE("graph layer") {
  SUBCASE("two connected nodes average their features") {
    Tape t;
    const Edge e[] = {{0, 1}};
    const Var out = gnn_layer(t.constant(Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}})), e,
                              t.constant(Matrix::identity(2)), Activation::relu);
    CHECK(out.value() == Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
  }
  SUBCASE("a single node is unchanged") {
    Tape t;
    const Matrix h = Matrix::from_rows({{0.3, -2.0, 7.0}});
    const Var out = gnn_layer(t.constant(h), std::span<const Edge>{}, t.constant(Matrix::identity(3)),
                              Activation::identity);
    CHECK(out.value() == h);
  }
  SUBCASE("matches the dense normalized update and its gradient") {
    Rng rng(8);
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {0, 2}, {1, 0}};
    const Matrix h = random_matrix(4, 3, rng), w = random_matrix(3, 2, rng);
    // Dense oracle: adjacency with self-loops, D^-1/2 A D^-1/2.
    double a[4][4] = {};
    for (int i = 0; i < 4; ++i) a[i][i] = 1.0;
    for (const auto& e : edges) a[e.u][e.v] = a[e.v][e.u] = 1.0;
    double deg[4] = {};
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) deg[i] += a[i][j];
    Tape t;
    const Var out = gnn_layer(t.constant(h), edges, t.constant(w), Activation::tanh);
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j)
          for (int k = 0; k < 3; ++k) s += a[i][j] / std::sqrt(deg[i] * deg[j]) * h(j, k) * w(k, c);
        CHECK(out.value()(i, c) == doctest::Approx(std::tanh(s)).epsilon(1e-14));
      }
    Matrix hx = h;
    CHECK(oracle::check_input_gradient(hx, [&](Tape& tp, Var v) {
            return probe(tp, gnn_layer(v, edges, tp.constant(w), Activation::tanh), 3);
          }) < 1e-6);
    Matrix wx = w;
    CHECK(oracle::check_input_gradient(wx, [&](Tape& tp, Var v) {
            return probe(tp, gnn_layer(tp.constant(h), edges, v, Activation::tanh), 3);
          }) < 1e-6);
  }
  SUBCASE("block replication keeps graphs separate") {
    const auto edges = complete_graph(3);
    CHECK(edges.size() == 3);
    const auto entries = normalized_adjacency(3, edges, 2);
    CHECK(entries.size() == 18);
    for (const auto& e : entries) {
      CHECK(e.out_row / 3 == e.in_row / 3);
      CHECK(e.coef == doctest::Approx(1.0 / 3.0));
    }
    CHECK_THROWS(normalized_adjacency(2, std::vector<Edge>{{0, 2}}));
  }
}

TEST_CASE("adam") {
  SUBCASE("first step moves by the learning rate") {
    ParameterSet ps;
    Parameter& p = ps.add("p", Matrix(1, 1, 1.0));
    p.grad[0] = 1.0;
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.1;
    const auto params = ps.all();
    adam_step(params, st, cfg);
    CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(st.step == 1);
  }
  SUBCASE("zero gradient leaves parameters unchanged and moments decay") {
    ParameterSet ps;
    Parameter& p = ps.add("p", Matrix::from_rows({{0.5, -0.25}}));
    const auto params = ps.all();
    AdamState st;
    adam_step(params, st, {});
    CHECK(p.value == Matrix::from_rows({{0.5, -0.25}}));

    p.grad.fill(2.0);
    adam_step(params, st, {});
    p.zero_grad();
    double m_prev = st.m[0][0], v_prev = st.v[0][0];
    for (int i = 0; i < 20; ++i) {
      adam_step(params, st, {});
      CHECK(std::abs(st.m[0][0]) < std::abs(m_prev));
      CHECK(st.v[0][0] < v_prev);
      m_prev = st.m[0][0];
      v_prev = st.v[0][0];
    }
  }
  SUBCASE("minimizes a quadratic") {
    ParameterSet ps;
    Parameter& p = ps.add("p", Matrix::from_rows({{3.0, -4.0}}));
    const auto params = ps.all();
    AdamState st;
    AdamConfig cfg;
    cfg.lr = 0.05;
    for (int i = 0; i < 2000; ++i) {
      ps.zero_grad();
      Tape t;
      t.backward(sum(square(add_scalar(t.param(p), -1.0))));
      adam_step(params, st, cfg);
    }
    CHECK(p.value[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.value[1] == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("checkpoint json") {
  Rng rng(9);
  ParameterSet a;
  a.add("x.w", random_matrix(2, 3, rng));
  a.add("x.b", random_matrix(1, 3, rng));
  const auto j = parameters_to_json(a);
  CHECK(j["version"] == kCheckpointVersion);
  CHECK(j.dump() == parameters_to_json(a).dump());

  ParameterSet b;
  b.add("x.w", Matrix(2, 3));
  b.add("x.b", Matrix(1, 3));
  parameters_from_json(j, b);
  CHECK(b[0].value == a[0].value);
  CHECK(b[1].value == a[1].value);

  ParameterSet wrong_shape;
  wrong_shape.add("x.w", Matrix(3, 2));
  wrong_shape.add("x.b", Matrix(1, 3));
  CHECK_THROWS_AS(parameters_from_json(j, wrong_shape), CheckpointError);

  ParameterSet missing;
  missing.add("x.w", Matrix(2, 3));
  missing.add("x.b", Matrix(1, 3));
  missing.add("y", Matrix(1, 1));
  CHECK_THROWS_AS(parameters_from_json(j, missing), CheckpointError);
}
