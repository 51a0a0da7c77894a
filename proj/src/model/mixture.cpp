#include "pursuit/model/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pursuit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct Terms {
  double zx, zy, q, quad, log_density;
};

Terms evaluate(double mux, double muy, double sx, double sy, double rho, double x, double y) {
  Terms t;
  t.zx = (x - mux) / sx;
  t.zy = (y - muy) / sy;
  t.q = 1.0 - rho * rho;
  t.quad = t.zx * t.zx - 2.0 * rho * t.zx * t.zy + t.zy * t.zy;
  t.log_density = -kLog2Pi - std::log(sx) - std::log(sy) - 0.5 * std::log(t.q) - t.quad / (2.0 * t.q);
  return t;
}

}  // namespace

Vec2 MixtureOutput::mean() const {
  Vec2 m{0.0, 0.0};
  for (int k = 0; k < size(); ++k) m = m + components[k].mu * pi[k];
  return m;
}

int MixtureOutput::top() const {
  return static_cast<int>(std::max_element(pi.begin(), pi.end()) - pi.begin());
}

void MixtureOutput::validate() const {
  if (pi.empty() || pi.size() != components.size()) throw std::invalid_argument("mixture size mismatch");
  double s = 0.0;
  for (double p : pi) {
    if (!(p > 0.0)) throw std::invalid_argument("mixing coefficient must be positive");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("mixing coefficients do not sum to 1");
  for (const auto& c : components)
    if (!(c.sigma.x > 0.0 && c.sigma.y > 0.0 && std::abs(c.rho) < 1.0))
      throw std::invalid_argument("component covariance is not positive definite");
}

std::vector<double> softmax(std::span<const double> w) {
  std::vector<double> out(w.size());
  if (w.empty()) return out;
  const double m = *std::max_element(w.begin(), w.end());
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += out[i] = std::exp(w[i] - m);
  for (double& v : out) v /= s;
  return out;
}

double bivariate_log_density(const Component& c, Vec2 y) {
  return evaluate(c.mu.x, c.mu.y, c.sigma.x, c.sigma.y, c.rho, y.x, y.y).log_density;
}

double mixture_log_likelihood(const MixtureOutput& m, Vec2 y) {
  std::vector<double> terms(m.size());
  for (int k = 0; k < m.size(); ++k) terms[k] = std::log(m.pi[k]) + bivariate_log_density(m.components[k], y);
  const double mx = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

ad::Var bivariate_log_density(ad::Var mux, ad::Var muy, ad::Var sx, ad::Var sy, ad::Var rho,
                              const ad::Matrix& target) {
  using ad::Matrix;
  const Matrix& a = mux.value();
  for (const ad::Var* v : {&muy, &sx, &sy, &rho})
    if (!v->value().same_shape(a) || v->tape() != mux.tape())
      throw ad::ShapeError("bivariate_log_density: parameter shape mismatch");
  if (target.rows() != a.rows() || target.cols() != 2) throw ad::ShapeError("bivariate_log_density: bad target shape");

  Matrix out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int k = 0; k < a.cols(); ++k)
      out(r, k) = evaluate(a(r, k), muy.value()(r, k), sx.value()(r, k), sy.value()(r, k), rho.value()(r, k),
                           target(r, 0), target(r, 1))
                      .log_density;

  const std::vector<int> ids{mux.id(), muy.id(), sx.id(), sy.id(), rho.id()};
  return mux.tape()->record("bivariate_log_density", std::move(out), ids, [ids, target](ad::Tape& tp, int self) {
    const Matrix& g = tp.grad_buffer(self);
    const Matrix &mx = tp.value(ids[0]), &my = tp.value(ids[1]), &vx = tp.value(ids[2]), &vy = tp.value(ids[3]),
                 &vr = tp.value(ids[4]);
    // d/d{mux, muy, sx, sy, rho}
    Matrix d[5];
    for (auto& m : d) m = Matrix(g.rows(), g.cols());
    for (int r = 0; r < g.rows(); ++r)
      for (int k = 0; k < g.cols(); ++k) {
        const double sxv = vx(r, k), syv = vy(r, k), rv = vr(r, k);
        const Terms t = evaluate(mx(r, k), my(r, k), sxv, syv, rv, target(r, 0), target(r, 1));
        const double ax = (t.zx - rv * t.zy) / t.q;
        const double ay = (t.zy - rv * t.zx) / t.q;
        const double gg = g(r, k);
        d[0](r, k) = gg * ax / sxv;
        d[1](r, k) = gg * ay / syv;
        d[2](r, k) = gg * (-1.0 + ax * t.zx) / sxv;
        d[3](r, k) = gg * (-1.0 + ay * t.zy) / syv;
        d[4](r, k) = gg * (rv / t.q + t.zx * t.zy / t.q - t.quad * rv / (t.q * t.q));
      }
    for (int i = 0; i < 5; ++i)
      if (tp.requires_grad(ids[i])) tp.grad_buffer(ids[i]) += d[i];
  });
}

}  // namespace pursuit
