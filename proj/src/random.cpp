#include "mixscale/random.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace mixscale {

double draw_uniform(double lo, double hi, Rng& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double draw_std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double draw_exponential(double rate, Rng& rng) {
  return std::exponential_distribution<double>(rate)(rng);
}

double draw_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double draw_inverse_gamma(double shape, double scale, Rng& rng) {
  return 1.0 / draw_gamma(shape, scale, rng);
}

double draw_beta(double s0, double s1, Rng& rng) {
  const double x = draw_gamma(s0, 1.0, rng);
  const double y = draw_gamma(s1, 1.0, rng);
  return x / (x + y);
}

std::size_t draw_log_categorical(const Vector& logw, Rng& rng, double* normaliser_check) {
  const double top = logw.maxCoeff();
  Vector w = (logw.array() - top).exp();
  const double total = w.sum();
  w /= total;
  if (normaliser_check) *normaliser_check = w.sum();
  double u = draw_uniform(0.0, 1.0, rng);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    u -= w(k);
    if (u < 0.0) return static_cast<std::size_t>(k);
  }
  // Rounding left u marginally positive: fall back to the last positive weight.
  for (Eigen::Index k = w.size() - 1; k >= 0; --k)
    if (w(k) > 0.0) return static_cast<std::size_t>(k);
  return 0;
}

double log_gamma_density(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_inverse_gamma_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_beta_density(double x, double s0, double s1) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return std::lgamma(s0 + s1) - std::lgamma(s0) - std::lgamma(s1) + (s0 - 1.0) * std::log(x) +
         (s1 - 1.0) * std::log1p(-x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace mixscale
