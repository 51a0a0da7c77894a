#include "pursuit/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pursuit/sim/random.hpp"

namespace pursuit {

namespace {

void check_sizes(std::span<const MixtureOutput> p, std::span<const Vec2> t) {
  if (p.empty()) throw std::invalid_argument("metric over an empty set");
  if (p.size() != t.size()) throw std::invalid_argument("prediction and truth counts differ");
}

}  // namespace

double log_likelihood(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth) {
  check_sizes(predictions, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += mixture_log_likelihood(predictions[i], truth[i]);
  return s / static_cast<double>(predictions.size());
}

double ade(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth, bool top_component) {
  check_sizes(predictions, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const MixtureOutput& m = predictions[i];
    const Vec2 point = top_component ? m.components[m.top()].mu : m.mean();
    s += distance(point, truth[i]);
  }
  return s / static_cast<double>(predictions.size());
}

double prob_within(const MixtureOutput& m, Vec2 center, double delta, int n_samples, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (m.size() < 1) throw std::invalid_argument("empty mixture");
  Rng rng(seed);
  // Latin hypercube over (component, radius, angle) uniforms, mapped through
  // Box-Muller. Each coordinate is stratified, which keeps the estimate within
  // a fraction of the plain Monte-Carlo error at the same n.
  std::vector<double> uc(n_samples), ur(n_samples), ua(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    uc[i] = (i + rng.uniform()) / n_samples;
    ur[i] = (i + rng.uniform()) / n_samples;
    ua[i] = (i + rng.uniform()) / n_samples;
  }
  for (int i = n_samples - 1; i > 0; --i) {
    std::swap(ur[i], ur[rng.below(i + 1)]);
    std::swap(ua[i], ua[rng.below(i + 1)]);
  }
  const double d2 = delta * delta;
  int inside = 0;
  for (int i = 0; i < n_samples; ++i) {
    int k = 0;
    double acc = m.pi[0];
    while (k + 1 < m.size() && uc[i] >= acc) acc += m.pi[++k];
    const double r = std::sqrt(-2.0 * std::log(1.0 - ur[i]));
    const double e1 = r * std::cos(2.0 * M_PI * ua[i]);
    const double e2 = r * std::sin(2.0 * M_PI * ua[i]);
    const Component& c = m.components[k];
    const double x = c.mu.x + c.sigma.x * e1;
    const double y = c.mu.y + c.sigma.y * (c.rho * e1 + std::sqrt(1.0 - c.rho * c.rho) * e2);
    const double dx = x - center.x, dy = y - center.y;
    if (dx * dx + dy * dy <= d2) ++inside;
  }
  return static_cast<double>(inside) / n_samples;
}

double ct_delta(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth, double delta,
                double p_threshold, int n_samples, std::uint64_t seed) {
  check_sizes(predictions, truth);
  int hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (prob_within(predictions[i], truth[i], delta, n_samples, derive_seed(seed, i)) >= p_threshold) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace pursuit
