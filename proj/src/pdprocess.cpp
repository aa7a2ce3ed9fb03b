#include "mixscale/pdprocess.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mixscale {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0.0) return true;
  return std::log(draw_uniform(0.0, 1.0, rng)) < log_ratio;
}

// EPPF terms that depend on a: sum_{j<r} log(b + j a) + sum_j log Gamma(n_j - a)/Gamma(1 - a).
double eppf_a_terms(double a, double b, std::span<const int> sizes) {
  double out = 0.0;
  const auto r = sizes.size();
  for (std::size_t j = 1; j < r; ++j) out += std::log(b + static_cast<double>(j) * a);
  const double base = std::lgamma(1.0 - a);
  for (int size : sizes) out += std::lgamma(static_cast<double>(size) - a) - base;
  return out;
}

}  // namespace

void validate(const PDHyper& hyper) {
  if (!(hyper.a >= 0.0 && hyper.a < 1.0)) throw InputError("PD discount a must lie in [0, 1)");
  if (!(hyper.b > -hyper.a)) throw InputError("PD strength b must exceed -a");
}

void validate(const PDPrior& prior) {
  if (!(prior.alpha >= 0.0 && prior.alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  if (!(prior.a_shape0 > 0 && prior.a_shape1 > 0 && prior.b_shape > 0 && prior.b_rate > 0))
    throw InputError("PD hyperprior constants must be positive");
  if (!(prior.phi_b > 0)) throw InputError("phi_b must be positive");
}

std::vector<double> urn_prior_weights(const PDHyper& hyper, std::span<const int> sizes, int n) {
  const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  if (total != n - 1) {
    std::ostringstream msg;
    msg << "urn_prior_weights: cluster sizes sum to " << total << ", expected " << n - 1;
    throw InputError(msg.str());
  }
  for (int s : sizes)
    if (s < 1) throw InputError("urn_prior_weights: empty cluster");

  std::vector<double> w(sizes.size() + 1);
  if (sizes.empty()) {
    w[0] = 1.0;
    return w;
  }
  const double denom = hyper.b + static_cast<double>(n) - 1.0;
  w[0] = (hyper.b + hyper.a * static_cast<double>(sizes.size())) / denom;
  for (std::size_t j = 0; j < sizes.size(); ++j) w[j + 1] = (sizes[j] - hyper.a) / denom;
  return w;
}

double eppf_log(double a, double b, std::span<const int> sizes) {
  if (!(a >= 0.0 && a < 1.0) || !(b > -a)) throw InputError("eppf_log: invalid (a, b)");
  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  for (int s : sizes)
    if (s < 1) throw InputError("eppf_log: empty cluster");
  return std::lgamma(b + 1.0) - std::lgamma(b + n) + eppf_a_terms(a, b, sizes);
}

double log_prior_a(double a, const PDPrior& prior) {
  if (a == 0.0) return prior.alpha > 0.0 ? std::log(prior.alpha) : kNegInf;
  if (prior.alpha >= 1.0) return kNegInf;
  return std::log1p(-prior.alpha) + log_beta_density(a, prior.a_shape0, prior.a_shape1);
}

double log_prior_b_given_a(double b, double a, const PDPrior& prior) {
  return log_gamma_density(b + a, prior.b_shape, prior.b_rate);
}

double update_a(const PDHyper& current, const PDPrior& prior, std::span<const int> sizes, Rng& rng) {
  const double proposal = draw_uniform(0.0, 1.0, rng) < 0.5 ? 0.0 : draw_uniform(0.0, 1.0, rng);
  if (!(current.b > -proposal) || proposal >= 1.0) return current.a;

  // The proposal puts mass 1/2 on {0} and density 1/2 on (0, 1); relative to
  // delta_0 + Lebesgue it is constant, so only the target ratio remains.
  auto log_target = [&](double a) {
    double out = log_prior_a(a, prior) + log_prior_b_given_a(current.b, a, prior);
    if (!sizes.empty()) out += eppf_a_terms(a, current.b, sizes);
    return out;
  };
  const double log_ratio = log_target(proposal) - log_target(current.a);
  return accept(log_ratio, rng) ? proposal : current.a;
}

double update_b(const PDHyper& current, const PDPrior& prior, std::span<const int> sizes, Rng& rng) {
  const double proposal = draw_uniform(current.b - prior.phi_b, current.b + prior.phi_b, rng);
  if (!(proposal > -current.a)) return current.b;

  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  auto log_target = [&](double b) {
    double out = log_prior_b_given_a(b, current.a, prior);
    if (!sizes.empty()) {
      out += std::lgamma(b + 1.0) - std::lgamma(b + n);
      for (std::size_t j = 1; j < sizes.size(); ++j)
        out += std::log(b + static_cast<double>(j) * current.a);
    }
    return out;
  };
  const double log_ratio = log_target(proposal) - log_target(current.b);
  return accept(log_ratio, rng) ? proposal : current.b;
}

void update_sigma_mu(BaseMeasure& base, const BaseMeasurePrior& prior,
                     const std::vector<Vector>& centers, Rng& rng) {
  const auto q = base.variances.size();
  const double r = static_cast<double>(centers.size());
  for (Eigen::Index l = 0; l < q; ++l) {
    double ss = 0.0;
    for (const auto& c : centers) ss += c(l) * c(l);
    base.variances(l) = draw_inverse_gamma(prior.shape + 0.5 * r, prior.scale + 0.5 * ss, rng);
  }
}

}  // namespace mixscale
