#pragma once

#include "mixscale/sampler.hpp"
#include "mixscale/schema.hpp"
#include "mixscale/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixscale {

/// Joint-distribution test on a small model with one continuous and one
/// binary variable. Priors must be proper with finite second moments.
struct GewekeConfig {
  Vector weights;                     // one per record; design mode uses pi_i = 1 / w_i
  double kappa = 1.0;
  std::size_t ancestral_draws = 20000;
  std::size_t successive_draws = 20000;
  std::size_t batches = 40;
  std::uint64_t seed = 1;
  bool with_nominal = false;  // adds a three-level nominal variable
  PriorSettings priors;
  CovarianceTuning tuning;
};

/// Five records, unequal weights, IGa(4, 3) variance priors, Ga(2, 2) on b + a.
GewekeConfig default_geweke_config();

Schema geweke_schema(bool with_nominal = false);

std::vector<std::string> geweke_statistic_names(bool with_nominal = false);

/// Test functions of the joint state (parameters and data).
Vector geweke_statistics(const ChainState& state, const Dataset& ds);

/// Draws parameters, partition, latents and data from the prior model.
/// Writes the data into `ds` (whose weights must already be set).
ChainState draw_prior_state(const Schema& schema, Dataset& ds, const GewekeConfig& config, Rng& rng);

/// Normalised inverse-Wishart(q + 1, I) draw: each off-diagonal entry is
/// marginally uniform on (-1, 1).
Matrix draw_uniform_margin_correlation(std::size_t q, Rng& rng);

/// Standard error of a mean from non-overlapping batch means.
double batch_means_se(const std::vector<double>& x, std::size_t batches);

struct GewekeStatistic {
  std::string name;
  double ancestral_mean = 0.0, ancestral_se = 0.0;
  double successive_mean = 0.0, successive_se = 0.0;
  double z = 0.0;
};

struct GewekeReport {
  std::vector<GewekeStatistic> statistics;
  double max_abs_z() const;
};

GewekeReport run_geweke(const GewekeConfig& config);

/// Likelihood-free chain: the MH and conjugate moves for the variances,
/// correlations, base variances, a and b, with no data.
struct PriorChainConfig {
  std::vector<bool> free;  // variance flags, size q
  std::size_t iterations = 20000;
  std::uint64_t seed = 1;
  PriorSettings priors;
  CovarianceTuning tuning;
};

struct PriorChainTrace {
  Matrix correlations;    // iterations x q(q-1)/2, row-major upper triangle
  Matrix variances;       // iterations x q
  Matrix base_variances;  // iterations x q
  std::vector<double> a, b;
};

PriorChainTrace run_prior_chain(const PriorChainConfig& config);

}  // namespace mixscale
