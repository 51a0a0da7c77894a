#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "pursuit/model/mixture.hpp"

namespace pursuit {

// Mean of log p(y_i) over the set.
double log_likelihood(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth);

// Mean euclidean distance from the point estimate (mixture mean, or the mean
// of the heaviest component) to the truth.
double ade(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth, bool top_component = false);

// Monte-Carlo P(|Y - center| <= delta). The draws depend only on `seed`, the
// mixture and n_samples, so the estimate is nondecreasing in delta.
double prob_within(const MixtureOutput& m, Vec2 center, double delta, int n_samples, std::uint64_t seed);

// Fraction of predictions with prob_within(truth, delta) >= p_threshold.
// Sample i uses stream derive_seed(seed, i).
double ct_delta(std::span<const MixtureOutput> predictions, std::span<const Vec2> truth, double delta,
                double p_threshold = 0.5, int n_samples = 2000, std::uint64_t seed = 0);

}  // namespace pursuit
