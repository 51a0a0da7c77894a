// Independent reference implementations shared by the unit tests and the
// acceptance binary. Nothing here calls into the code it checks, apart from
// the tape used to obtain the analytic gradients being compared.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pursuit/autodiff/tape.hpp"
#include "pursuit/data/samples.hpp"
#include "pursuit/model/mixture.hpp"
#include "pursuit/sim/random.hpp"
#include "pursuit/sim/terrain.hpp"

namespace oracle {

using pursuit::Cell;
using pursuit::Rng;
using pursuit::TerrainGrid;
using pursuit::Vec2;

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

struct GradCheck {
  double max_rel = 0.0;
  int coordinates = 0;
};

// Central differences on `coords` random scalar coordinates drawn across all
// parameters, compared against one backward pass.
inline GradCheck check_gradients(const std::vector<pursuit::ad::Parameter*>& params,
                                 const std::function<pursuit::ad::Var(pursuit::ad::Tape&)>& loss, int coords,
                                 std::uint64_t seed, double step = 1e-5) {
  for (auto* p : params) p->zero_grad();
  {
    pursuit::ad::Tape t;
    t.backward(loss(t));
  }
  auto eval = [&] {
    pursuit::ad::Tape t;
    return loss(t).item();
  };
  std::size_t total = 0;
  for (auto* p : params) total += p->value.size();
  Rng rng(seed);
  GradCheck out;
  for (int i = 0; i < coords; ++i) {
    std::size_t flat = rng.below(total);
    std::size_t k = 0;
    while (flat >= params[k]->value.size()) flat -= params[k++]->value.size();
    double& x = params[k]->value[flat];
    const double saved = x;
    x = saved + step;
    const double up = eval();
    x = saved - step;
    const double down = eval();
    x = saved;
    out.max_rel = std::max(out.max_rel, rel_error(params[k]->grad[flat], (up - down) / (2.0 * step)));
    ++out.coordinates;
  }
  return out;
}

// Same, for the gradient of a tape variable (input sensitivity).
inline double check_input_gradient(pursuit::ad::Matrix& x,
                                   const std::function<pursuit::ad::Var(pursuit::ad::Tape&, pursuit::ad::Var)>& loss,
                                   double step = 1e-5) {
  pursuit::ad::Matrix analytic;
  {
    pursuit::ad::Tape t;
    pursuit::ad::Var v = t.variable(x);
    t.backward(loss(t, v));
    analytic = t.grad(v);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    pursuit::ad::Tape t1;
    const double up = loss(t1, t1.variable(x)).item();
    x[i] = saved - step;
    pursuit::ad::Tape t2;
    const double down = loss(t2, t2.variable(x)).item();
    x[i] = saved;
    worst = std::max(worst, rel_error(analytic[i], (up - down) / (2.0 * step)));
  }
  return worst;
}

// Plain O(V^2) Dijkstra on the 8-connected grid with the forest-weighted
// move cost; diagonals need both orthogonal neighbours open.
inline double dijkstra_cost(const TerrainGrid& g, Cell start, Cell goal, double forest_weight) {
  const int w = g.width(), h = g.height();
  const auto inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(w) * h, inf);
  std::vector<char> done(dist.size(), 0);
  auto id = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  auto open = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && g.traversable({x, y}); };
  dist[id(start.x, start.y)] = 0.0;
  for (;;) {
    std::size_t best = dist.size();
    for (std::size_t i = 0; i < dist.size(); ++i)
      if (!done[i] && dist[i] < inf && (best == dist.size() || dist[i] < dist[best])) best = i;
    if (best == dist.size()) return inf;
    done[best] = 1;
    const int x = static_cast<int>(best % w), y = static_cast<int>(best / w);
    if (x == goal.x && y == goal.y) return dist[best];
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!open(nx, ny)) continue;
        if (dx != 0 && dy != 0 && (!open(x + dx, y) || !open(x, y + dy))) continue;
        const double len = (dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0;
        const double c = len * (1.0 + forest_weight * (1.0 - g.forest_density({nx, ny})));
        dist[id(nx, ny)] = std::min(dist[id(nx, ny)], dist[best] + c);
      }
  }
}

// N(y; mu, Sigma) from the explicit covariance matrix, its determinant and
// inverse.
inline double gaussian_density(const pursuit::Component& c, Vec2 y) {
  const double s11 = c.sigma.x * c.sigma.x;
  const double s22 = c.sigma.y * c.sigma.y;
  const double s12 = c.rho * c.sigma.x * c.sigma.y;
  const double det = s11 * s22 - s12 * s12;
  const double i11 = s22 / det, i22 = s11 / det, i12 = -s12 / det;
  const double dx = y.x - c.mu.x, dy = y.y - c.mu.y;
  const double quad = dx * (i11 * dx + i12 * dy) + dy * (i12 * dx + i22 * dy);
  return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
}

inline double naive_mixture_density(const pursuit::MixtureOutput& m, Vec2 y) {
  double p = 0.0;
  for (int k = 0; k < m.size(); ++k) p += m.pi[k] * gaussian_density(m.components[k], y);
  return p;
}

// P(|Y - mu| <= delta) for an isotropic bivariate normal.
inline double rayleigh_cdf(double sigma, double delta) { return 1.0 - std::exp(-delta * delta / (2.0 * sigma * sigma)); }

inline pursuit::MixtureOutput random_mixture(Rng& rng, int g, double sigma_lo = 0.02, double sigma_hi = 0.3) {
  pursuit::MixtureOutput m;
  double total = 0.0;
  for (int k = 0; k < g; ++k) {
    const double w = rng.uniform(0.05, 1.0);
    m.pi.push_back(w);
    total += w;
    m.components.push_back({{rng.uniform(), rng.uniform()},
                            {rng.uniform(sigma_lo, sigma_hi), rng.uniform(sigma_lo, sigma_hi)},
                            rng.uniform(-0.95, 0.95)});
  }
  for (double& p : m.pi) p /= total;
  return m;
}

// Synthetic samples with random features in [0, 1].
inline std::vector<pursuit::Sample> random_samples(int n, int agents, int history, int k, Rng& rng) {
  std::vector<pursuit::Sample> out;
  for (int i = 0; i < n; ++i) {
    pursuit::Sample s;
    s.rollout = 0;
    s.t = i;
    s.agents = agents;
    s.history = history;
    for (int j = 0; j < (history + 1) * agents * pursuit::kStateDim; ++j) s.agent_window.push_back(rng.uniform());
    s.window_mask.assign(history + 1, 1);
    for (int j = 0; j < k * pursuit::kDetectionFeatures; ++j) s.detection_features.push_back(rng.uniform());
    s.detection_count = rng.uniform();
    s.target = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace oracle
