#pragma once

#include "mixscale/random.hpp"
#include "mixscale/types.hpp"

#include <span>
#include <vector>

namespace mixscale {

/// Discount a in [0, 1) and strength b > -a of the Poisson-Dirichlet prior.
struct PDHyper {
  double a = 0.5;
  double b = 1.0;
};

/// Hyperpriors f(a) = alpha delta_0 + (1 - alpha) Be(a | a_shape0, a_shape1)
/// and f(b | a) = Ga(b + a | b_shape, b_rate), plus the random-walk width for b.
struct PDPrior {
  double alpha = 0.5;
  double a_shape0 = 1.0;
  double a_shape1 = 1.0;
  double b_shape = 1.0;
  double b_rate = 1.0;
  double phi_b = 2.0;
};

void validate(const PDHyper& hyper);
void validate(const PDPrior& prior);

/// Polya-urn weights for record i given the sizes of the clusters formed by
/// the other n - 1 records: entry 0 is the new-value weight
/// (b + a r_i) / (b + n - 1), entry j the weight (n_j - a) / (b + n - 1).
std::vector<double> urn_prior_weights(const PDHyper& hyper, std::span<const int> sizes, int n);

/// Log EPPF of the partition with the given cluster sizes:
/// log Gamma(b+1)/Gamma(b+n) + sum_{j<r} log(b + j a) + sum_j log Gamma(n_j - a)/Gamma(1 - a).
double eppf_log(double a, double b, std::span<const int> sizes);

/// Log of the unnormalised prior weight of a, w.r.t. the measure delta_0 + Lebesgue.
double log_prior_a(double a, const PDPrior& prior);
/// Log Ga(b + a | b_shape, b_rate).
double log_prior_b_given_a(double b, double a, const PDPrior& prior);

/// Metropolis-Hastings update of a with the independence proposal
/// 1/2 delta_0 + 1/2 Un(0, 1). The target is the EPPF times f(a) f(b | a);
/// empty `sizes` disables the likelihood (prior-only mode).
double update_a(const PDHyper& current, const PDPrior& prior, std::span<const int> sizes, Rng& rng);

/// Random-walk update of b with proposal Un(b - phi_b, b + phi_b); proposals
/// at or below -a are rejected. Empty `sizes` disables the likelihood.
double update_b(const PDHyper& current, const PDPrior& prior, std::span<const int> sizes, Rng& rng);

/// Diagonal base-measure variances sigma^2_mu.
struct BaseMeasure {
  Vector variances;
};

struct BaseMeasurePrior {
  double shape = 2.1;
  double scale = 30.0;
};

/// Conjugate inverse-gamma draw of every sigma^2_mu,l given the r distinct
/// locations. An empty list draws from the prior.
void update_sigma_mu(BaseMeasure& base, const BaseMeasurePrior& prior,
                     const std::vector<Vector>& centers, Rng& rng);

}  // namespace mixscale
