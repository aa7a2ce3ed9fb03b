#pragma once

#include "mixscale/covariance.hpp"
#include "mixscale/latent.hpp"
#include "mixscale/mixture.hpp"
#include "mixscale/pdprocess.hpp"
#include "mixscale/schema.hpp"
#include "mixscale/types.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mixscale {

/// How survey weights enter the kernel variance kappa * pi_i * Sigma.
enum class WeightMode {
  ignore,  // pi_i = 1
  design,  // pi_i = 1 / w_i
};

struct PriorSettings {
  CovariancePrior variance;  // d0^z, d1^z
  BaseMeasurePrior base;     // d0^mu, d1^mu
  PDPrior pd;
};

struct SamplerConfig {
  std::size_t iterations = 4700;
  std::size_t burn_in = 200;
  std::size_t thinning = 3;
  double kappa = 1.0;
  std::uint64_t seed = 1;
  WeightMode weight_mode = WeightMode::ignore;
  PriorSettings priors;
  CovarianceTuning tuning;
  bool check_invariants = true;
};

void validate(const SamplerConfig& config);

/// Number of partitions a run with this config keeps.
std::size_t kept_count(const SamplerConfig& config);

struct AcceptanceCounts {
  std::size_t variance_proposed = 0, variance_accepted = 0;
  std::size_t correlation_proposed = 0, correlation_accepted = 0;
  std::size_t a_proposed = 0, a_accepted = 0;
  std::size_t b_proposed = 0, b_accepted = 0;
};

/// Everything one chain mutates.
struct ChainState {
  LatentState latents;
  MixtureState mixture;
  CovarianceState cov;
  BaseMeasure base;
  PDHyper hyper;
  Rng rng;
  std::size_t iteration = 0;
};

struct ChainOutput {
  std::vector<std::vector<int>> partitions;   // one per kept iteration
  std::vector<std::size_t> kept_iterations;   // 1-based sweep numbers
  std::vector<std::size_t> clusters;          // r at every kept iteration
  std::vector<std::size_t> clusters_all;      // r after every sweep, burn-in included
  std::vector<double> a, b;
  Matrix free_variances;                      // kept x c
  Matrix base_variances;                      // kept x q
  AcceptanceCounts acceptance;
  double seconds = 0.0;

  std::size_t kept() const { return partitions.size(); }
};

/// pi_i under the chosen weight mode.
std::vector<double> effective_probabilities(const Dataset& ds, WeightMode mode);

/// Start state: every record in its own cluster at its own latent vector,
/// Omega = I, free scales at the column standard deviations.
ChainState initialize_chain(const Dataset& ds, const Schema& schema, const SamplerConfig& config);

/// Log D_0, log D_1, ..., log D_r for a record with latent z and kernel
/// scale kappa * pi_i, against clusters (centers, counts) that exclude it.
Vector allocation_log_weights(const Vector& z, const std::vector<Vector>& centers,
                              const std::vector<int>& counts, const CovarianceState& cov,
                              const BaseMeasure& base, const PDHyper& hyper, double scale);

struct GaussianMoments {
  Vector mean;
  Matrix covariance;
};

/// N(nu, V) of a location given latents with precision-weight sum
/// `weight_sum` = sum 1/pi_i and weighted total `weighted_sum` = sum z_i / pi_i:
/// V = ((weight_sum / kappa) Sigma^{-1} + Sigma_mu^{-1})^{-1},
/// nu = V Sigma^{-1} weighted_sum / kappa.
GaussianMoments location_posterior(const Vector& weighted_sum, double weight_sum,
                                   const CovarianceState& cov, const BaseMeasure& base, double kappa);

/// Conditional (a) for record i. Returns the sum of the normalised selection
/// probabilities (for invariant checks).
double update_mu_i(std::size_t i, const LatentState& latents, MixtureState& mixture,
                   const CovarianceState& cov, const BaseMeasure& base, const PDHyper& hyper,
                   double probability, double kappa, Rng& rng);

/// Conditional (b): redraws every distinct location given the allocation.
void update_unique_mus(const LatentState& latents, MixtureState& mixture, const CovarianceState& cov,
                       const BaseMeasure& base, std::span<const double> probabilities, double kappa,
                       Rng& rng);

/// One scan (a) -> (b) -> (c) -> (d) -> (e) -> (f) -> (g) -> (h).
void gibbs_sweep(ChainState& state, const Dataset& ds, const Schema& schema, const SamplerConfig& config,
                 std::span<const double> probabilities, AcceptanceCounts* acceptance = nullptr);

/// Throws StateError on any violated invariant of the full state.
void check_state(const ChainState& state, const Dataset& ds, const Schema& schema);

using ProgressCallback = std::function<void(std::size_t iteration, const ChainState& state)>;

/// Runs config.iterations sweeps from initialize_chain().
ChainOutput run_chain(const Dataset& ds, const Schema& schema, const SamplerConfig& config,
                      const ProgressCallback& progress = {});

/// Continues an existing chain until state.iteration == config.iterations,
/// appending kept draws to `out`.
void continue_chain(ChainState& state, ChainOutput& out, const Dataset& ds, const Schema& schema,
                    const SamplerConfig& config, const ProgressCallback& progress = {});

/// Probability of each cluster count among the kept draws (index = r).
std::vector<double> cluster_count_histogram(const ChainOutput& out);

/// Most frequent cluster count among the kept draws (smallest on ties).
std::size_t modal_cluster_count(const ChainOutput& out);

}  // namespace mixscale
