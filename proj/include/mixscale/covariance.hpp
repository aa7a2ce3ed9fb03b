#pragma once

#include "mixscale/latent.hpp"
#include "mixscale/mixture.hpp"
#include "mixscale/types.hpp"

#include <Eigen/Cholesky>

#include <span>
#include <vector>

namespace mixscale {

/// Sigma = Lambda Omega Lambda with its Cholesky factor and inverse cached.
/// Entries of `sd` flagged fixed are exactly 1.
struct CovarianceState {
  Vector sd;
  Matrix corr;
  std::vector<bool> free;

  Matrix sigma;
  Eigen::LLT<Matrix> chol;
  Matrix precision;
  double logdet = 0.0;

  std::size_t q() const { return static_cast<std::size_t>(sd.size()); }

  /// Recomputes the cached Sigma, factor and precision. Returns false (and
  /// leaves the cache untouched) if Sigma is not numerically PD.
  bool refresh();

  /// Omega = I, sd = 1 (or `initial_sd` where the variance is free).
  static CovarianceState identity(const std::vector<bool>& free, const Vector& initial_sd = {});
};

/// Prior IGa(shape, scale) on every free variance.
struct CovariancePrior {
  double shape = 2.1;
  double scale = 30.0;
};

/// Proposal tuning. The Hastings flags exist for sampler-validation
/// experiments only and must stay on in real runs.
struct CovarianceTuning {
  double phi_sigma = 5.0;
  double phi_rho = 4.0;
  bool variance_hastings = true;
  bool correlation_hastings = true;
};

/// S = sum_i (z_i - mu_i)(z_i - mu_i)' / (kappa pi_i).
Matrix scatter_matrix(const LatentState& latents, const MixtureState& mixture,
                      std::span<const double> probabilities, double kappa);

/// Log full-conditional density of sigma^2_j (up to a constant) at the
/// candidate `sd`, or -inf if the implied Sigma is not PD.
double log_variance_target(const Vector& sd, const Matrix& corr, std::size_t j, const Matrix& scatter,
                           std::size_t n, const CovariancePrior& prior);

/// Gamma-proposal MH step for free variance j. Returns true on acceptance.
bool update_variance(CovarianceState& state, std::size_t j, const Matrix& scatter, std::size_t n,
                     const CovariancePrior& prior, const CovarianceTuning& tuning, Rng& rng);

struct CorrelationSupport {
  double lower;
  double upper;
};

/// Range of entry (j, k) that keeps det(Omega) > 0, from the roots of the
/// quadratic h(rho) = det(Omega(rho)).
CorrelationSupport correlation_support(const Matrix& corr, std::size_t j, std::size_t k);

/// Log full-conditional density of Omega (up to a constant), or -inf if not PD.
double log_correlation_target(const Matrix& corr, const Vector& sd, const Matrix& scatter, std::size_t n);

/// Windowed uniform random-walk MH step for rho_jk (j < k).
bool update_correlation(CovarianceState& state, std::size_t j, std::size_t k, const Matrix& scatter,
                        std::size_t n, const CovarianceTuning& tuning, Rng& rng);

/// Throws StateError unless Omega is a valid correlation matrix, fixed
/// scales are exactly 1 and the cache matches (sd, corr).
void check_covariance(const CovarianceState& state);

}  // namespace mixscale
