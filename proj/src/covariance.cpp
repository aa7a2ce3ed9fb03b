#include "mixscale/covariance.hpp"

#include "mixscale/linalg.hpp"
#include "mixscale/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mixscale {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return std::log(draw_uniform(0.0, 1.0, rng)) < log_ratio;
}

double det_with_entry(Matrix corr, std::size_t j, std::size_t k, double rho) {
  const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
  corr(jj, kk) = rho;
  corr(kk, jj) = rho;
  return corr.partialPivLu().determinant();
}

}  // namespace

bool CovarianceState::refresh() {
  Matrix candidate = compose_sigma(sd, corr);
  auto llt = try_cholesky(candidate);
  if (!llt) return false;
  sigma = std::move(candidate);
  chol = std::move(*llt);
  precision = chol.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  logdet = log_det(chol);
  return true;
}

CovarianceState CovarianceState::identity(const std::vector<bool>& free, const Vector& initial_sd) {
  const auto q = static_cast<Eigen::Index>(free.size());
  CovarianceState s;
  s.free = free;
  s.sd = Vector::Ones(q);
  if (initial_sd.size() == q)
    for (Eigen::Index l = 0; l < q; ++l)
      if (free[static_cast<std::size_t>(l)]) s.sd(l) = initial_sd(l);
  s.corr = Matrix::Identity(q, q);
  if (!s.refresh()) throw InputError("initial covariance is not positive definite");
  return s;
}

Matrix scatter_matrix(const LatentState& latents, const MixtureState& mixture,
                      std::span<const double> probabilities, double kappa) {
  const auto q = latents.z.cols();
  Matrix s = Matrix::Zero(q, q);
  Vector d(q);
  for (Eigen::Index i = 0; i < latents.z.rows(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    d = latents.z.row(i).transpose() - mixture.mean_of(ii);
    s.noalias() += (d * d.transpose()) / (kappa * probabilities[ii]);
  }
  return s;
}

double log_variance_target(const Vector& sd, const Matrix& corr, std::size_t j, const Matrix& scatter,
                           std::size_t n, const CovariancePrior& prior) {
  const double var = sd(static_cast<Eigen::Index>(j)) * sd(static_cast<Eigen::Index>(j));
  if (!(var > 0.0) || !std::isfinite(var)) return kNegInf;
  auto llt = try_cholesky(compose_sigma(sd, corr));
  if (!llt) return kNegInf;
  const double trace = llt->solve(scatter).trace();
  return -(prior.shape + 0.5 * static_cast<double>(n) + 1.0) * std::log(var) - prior.scale / var -
         0.5 * trace;
}

bool update_variance(CovarianceState& state, std::size_t j, const Matrix& scatter, std::size_t n,
                     const CovariancePrior& prior, const CovarianceTuning& tuning, Rng& rng) {
  if (!state.free.at(j)) throw InputError("update_variance on a fixed-variance coordinate");
  const auto jj = static_cast<Eigen::Index>(j);
  const double current = state.sd(jj) * state.sd(jj);
  const double phi = tuning.phi_sigma;
  const double proposal = draw_gamma(phi, phi / current, rng);
  if (!(proposal > 0.0) || !std::isfinite(proposal)) return false;

  Vector candidate_sd = state.sd;
  candidate_sd(jj) = std::sqrt(proposal);
  const double target_new = log_variance_target(candidate_sd, state.corr, j, scatter, n, prior);
  if (target_new == kNegInf) return false;
  double log_ratio = target_new - log_variance_target(state.sd, state.corr, j, scatter, n, prior);
  if (tuning.variance_hastings)
    log_ratio += log_gamma_density(current, phi, phi / proposal) -
                 log_gamma_density(proposal, phi, phi / current);
  if (!accept(log_ratio, rng)) return false;

  const Vector previous = state.sd;
  state.sd = candidate_sd;
  if (!state.refresh()) {
    state.sd = previous;
    return false;
  }
  return true;
}

CorrelationSupport correlation_support(const Matrix& corr, std::size_t j, std::size_t k) {
  const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
  const double current = corr(jj, kk);
  const double h_pos = det_with_entry(corr, j, k, 1.0);
  const double h_neg = det_with_entry(corr, j, k, -1.0);
  const double h_zero = det_with_entry(corr, j, k, 0.0);
  const double t1 = 0.5 * (h_pos + h_neg - 2.0 * h_zero);
  const double t2 = 0.5 * (h_pos - h_neg);
  const double t3 = h_zero;

  std::vector<double> roots;
  const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1e-300});
  if (std::abs(t1) <= 1e-12 * scale) {
    if (t2 != 0.0) roots.push_back(-t3 / t2);
  } else {
    const double disc = std::max(0.0, t2 * t2 - 4.0 * t1 * t3);
    const double sq = std::sqrt(disc);
    const double qv = -0.5 * (t2 + (t2 >= 0.0 ? sq : -sq));
    if (qv != 0.0) {
      roots.push_back(qv / t1);
      roots.push_back(t3 / qv);
    } else {
      roots.push_back(0.0);
    }
  }

  // Segment of [-1, 1] cut by the roots that holds the current value.
  CorrelationSupport out{-1.0, 1.0};
  for (double root : roots) {
    if (!(root > -1.0 && root < 1.0)) continue;
    if (root <= current)
      out.lower = std::max(out.lower, root);
    else
      out.upper = std::min(out.upper, root);
  }
  return out;
}

double log_correlation_target(const Matrix& corr, const Vector& sd, const Matrix& scatter, std::size_t n) {
  auto llt = try_cholesky(corr);
  if (!llt) return kNegInf;
  const double q = static_cast<double>(corr.rows());
  const Matrix inv = llt->solve(Matrix::Identity(corr.rows(), corr.cols()));
  const double logdet = log_det(*llt);
  // log|Omega_{-j}| = log|Omega| + log (Omega^{-1})_jj for the principal
  // submatrix with row and column j removed.
  double minors = 0.0;
  for (Eigen::Index l = 0; l < corr.rows(); ++l) minors += logdet + std::log(inv(l, l));
  const Vector inv_sd = sd.cwiseInverse();
  const Matrix scaled = inv_sd.asDiagonal() * scatter * inv_sd.asDiagonal();
  const double trace = (inv * scaled).trace();
  return -0.5 * (q + 1.0) * minors - 0.5 * (static_cast<double>(n) + 2.0 - q * (q - 1.0)) * logdet -
         0.5 * trace;
}

bool update_correlation(CovarianceState& state, std::size_t j, std::size_t k, const Matrix& scatter,
                        std::size_t n, const CovarianceTuning& tuning, Rng& rng) {
  if (!(j < k && k < state.q())) throw InputError("update_correlation needs j < k < q");
  const auto jj = static_cast<Eigen::Index>(j), kk = static_cast<Eigen::Index>(k);
  const double current = state.corr(jj, kk);
  const auto support = correlation_support(state.corr, j, k);
  const double length = support.upper - support.lower;
  if (!(length > 0.0)) return false;
  const double half = length / tuning.phi_rho;

  auto window = [&](double rho) {
    return std::pair{std::max(support.lower, rho - half), std::min(support.upper, rho + half)};
  };
  const auto [lo, hi] = window(current);
  if (!(hi > lo)) return false;
  const double proposal = draw_uniform(lo, hi, rng);
  if (!(proposal > support.lower && proposal < support.upper)) return false;

  Matrix candidate = state.corr;
  candidate(jj, kk) = proposal;
  candidate(kk, jj) = proposal;
  const double target_new = log_correlation_target(candidate, state.sd, scatter, n);
  if (target_new == kNegInf) return false;
  double log_ratio = target_new - log_correlation_target(state.corr, state.sd, scatter, n);
  if (tuning.correlation_hastings) {
    const auto [rlo, rhi] = window(proposal);
    log_ratio += std::log(hi - lo) - std::log(rhi - rlo);
  }
  if (!accept(log_ratio, rng)) return false;

  const Matrix previous = state.corr;
  state.corr = std::move(candidate);
  if (!state.refresh()) {
    state.corr = previous;
    return false;
  }
  return true;
}

void check_covariance(const CovarianceState& state) {
  const auto q = static_cast<Eigen::Index>(state.q());
  if (state.corr.rows() != q || state.corr.cols() != q)
    throw StateError("correlation matrix has the wrong shape");
  for (Eigen::Index l = 0; l < q; ++l) {
    if (state.corr(l, l) != 1.0) throw StateError("correlation matrix diagonal differs from 1");
    if (!state.free[static_cast<std::size_t>(l)] && state.sd(l) != 1.0)
      throw StateError("fixed-variance coordinate has a scale different from 1");
    if (!(state.sd(l) > 0.0)) throw StateError("nonpositive standard deviation");
    for (Eigen::Index m = 0; m < l; ++m)
      if (std::abs(state.corr(l, m) - state.corr(m, l)) > 1e-12)
        throw StateError("correlation matrix is not symmetric");
  }
  if (!try_cholesky(state.corr)) throw StateError("correlation matrix is not positive definite");
  const Matrix expected = compose_sigma(state.sd, state.corr);
  if ((expected - state.sigma).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, expected.cwiseAbs().maxCoeff()))
    throw StateError("cached Sigma is stale");
}

}  // namespace mixscale
