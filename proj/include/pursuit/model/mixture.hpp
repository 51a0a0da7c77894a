#pragma once

#include <span>
#include <vector>

#include "pursuit/autodiff/tape.hpp"
#include "pursuit/sim/geometry.hpp"

namespace pursuit {

// One bivariate Gaussian: means, standard deviations, correlation.
struct Component {
  Vec2 mu;
  Vec2 sigma;
  double rho = 0.0;
};

struct MixtureOutput {
  std::vector<double> pi;
  std::vector<Component> components;

  int size() const { return static_cast<int>(pi.size()); }
  // Sum_k pi_k mu_k.
  Vec2 mean() const;
  // Index of the largest pi (lowest index on ties).
  int top() const;
  // Throws std::invalid_argument when pi is not a distribution or a
  // covariance is not positive definite.
  void validate() const;
};

inline constexpr double kSigmaFloor = 1e-4;
inline constexpr double kRhoScale = 0.99;

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> w);

double bivariate_log_density(const Component& c, Vec2 y);

// log sum_k pi_k N(y; mu_k, Sigma_k) through a max-shifted log-sum-exp.
double mixture_log_likelihood(const MixtureOutput& m, Vec2 y);
inline double mixture_nll(const MixtureOutput& m, Vec2 y) { return -mixture_log_likelihood(m, y); }

// Element-wise bivariate log-density on the tape. All parameter inputs are
// [B x G]; `target` is [B x 2] and broadcast across the G columns.
ad::Var bivariate_log_density(ad::Var mux, ad::Var muy, ad::Var sx, ad::Var sy, ad::Var rho,
                              const ad::Matrix& target);

}  // namespace pursuit
