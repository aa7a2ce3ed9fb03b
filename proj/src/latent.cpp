#include "mixscale/latent.hpp"

#include "mixscale/covariance.hpp"
#include "mixscale/linalg.hpp"
#include "mixscale/mixture.hpp"
#include "mixscale/random.hpp"
#include "mixscale/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <sstream>

namespace mixscale {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailStart = 3.0;

// Standard normal restricted to (alpha, beta] with alpha > 0 well into the
// upper tail. Robert (1995): translated-exponential proposal, or a uniform
// proposal when the interval is narrow relative to the exponential scale.
double sample_upper_tail(double alpha, double beta, Rng& rng) {
  const double root = std::sqrt(alpha * alpha + 4.0);
  const double rate = 0.5 * (alpha + root);
  const bool narrow =
      std::isfinite(beta) &&
      beta < alpha + 2.0 * std::sqrt(std::numbers::e) / (alpha + root) *
                         std::exp(0.25 * (alpha * alpha - alpha * root));
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    if (narrow) {
      const double x = draw_uniform(alpha, beta, rng);
      if (draw_uniform(0.0, 1.0, rng) <= std::exp(0.5 * (alpha * alpha - x * x))) return x;
    } else {
      const double x = alpha + draw_exponential(rate, rng);
      if (x > beta) continue;
      if (draw_uniform(0.0, 1.0, rng) <= std::exp(-0.5 * (x - rate) * (x - rate))) return x;
    }
  }
  warn("truncated normal tail sampler exhausted its attempts; returning the lower bound");
  return std::nextafter(alpha, kInf);
}

double clamp_into(double x, TruncationRegion region) {
  if (x <= region.lower) x = std::nextafter(region.lower, kInf);
  if (x > region.upper) x = region.upper;
  return x;
}

}  // namespace

double transform_continuous(double y, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformKind::identity:
      return y;
    case TransformKind::log_shift: {
      if (!spec.shift) throw InputError("log-shift transform used before its shift was resolved");
      const double arg = y + *spec.shift;
      if (!(arg > 0.0)) {
        std::ostringstream msg;
        msg << "log-shift transform of " << y << " with shift " << *spec.shift << " is undefined";
        throw InputError(msg.str());
      }
      return std::log(arg);
    }
  }
  return y;
}

int decode_ordinal(double z, std::span<const double> cutoffs) {
  // Smallest k with z <= cut[k+1].
  const auto it = std::lower_bound(cutoffs.begin() + 1, cutoffs.end(), z);
  return static_cast<int>(std::distance(cutoffs.begin() + 1, it));
}

int decode_nominal(std::span<const double> block) {
  const auto top = std::max_element(block.begin(), block.end());
  if (*top < 0.0) return static_cast<int>(block.size());
  return static_cast<int>(std::distance(block.begin(), top));
}

double sample_truncated_normal(double mean, double var, TruncationRegion region, Rng& rng) {
  if (!(var > 0.0) || !std::isfinite(var))
    throw StateError("truncated normal with nonpositive variance");
  if (!(region.lower < region.upper)) throw StateError("empty truncation region");

  const double sd = std::sqrt(var);
  const double alpha = (region.lower - mean) / sd;
  const double beta = (region.upper - mean) / sd;

  if (alpha > kTailStart) return clamp_into(mean + sd * sample_upper_tail(alpha, beta, rng), region);
  if (beta < -kTailStart) return clamp_into(mean - sd * sample_upper_tail(-beta, -alpha, rng), region);

  // Inverse CDF, using upper-tail probabilities when the region sits above
  // the mean to keep precision.
  const bool upper = alpha > 0.0;
  const double pa = upper ? normal_sf(beta) : normal_cdf(alpha);
  const double pb = upper ? normal_sf(alpha) : normal_cdf(beta);
  if (pb > pa) {
    const double u = normal_quantile(draw_uniform(pa, pb, rng));
    return clamp_into(mean + sd * (upper ? -u : u), region);
  }

  std::ostringstream msg;
  msg << "truncation region (" << region.lower << ", " << region.upper
      << "] has numerically zero mass under N(" << mean << ", " << var << ")";
  warn(msg.str());
  const double offset = 1e-9 * std::max(1.0, sd);
  double out = mean <= region.lower ? region.lower + offset : region.upper - offset;
  if (!(out > region.lower && out <= region.upper))
    out = std::isfinite(region.lower) ? 0.5 * (region.lower + region.upper) : region.upper;
  return clamp_into(out, region);
}

TruncationRegion nominal_region(std::span<const double> block, int category, int slot) {
  const int width = static_cast<int>(block.size());
  if (category == width) return {-kInf, std::nextafter(0.0, -kInf)};
  if (slot != category) return {-kInf, std::nextafter(block[static_cast<std::size_t>(category)], -kInf)};
  double floor_value = 0.0;
  for (int l = 0; l < width; ++l)
    if (l != slot) floor_value = std::max(floor_value, block[static_cast<std::size_t>(l)]);
  return {floor_value, kInf};
}

LatentState initialize_latents(const Dataset& ds, const Schema& schema) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  LatentState state{Matrix::Zero(n, static_cast<Eigen::Index>(schema.q()))};
  for (std::size_t j = 0; j < schema.p(); ++j) {
    const auto& var = schema.variable(j);
    const auto col = static_cast<Eigen::Index>(schema.latent_offset(j));
    const auto jj = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = ds.y(i, jj);
      switch (var.kind) {
        case VariableKind::continuous:
          state.z(i, col) = transform_continuous(y, var.transform);
          break;
        case VariableKind::ordinal: {
          const auto& cut = schema.cutoffs(j);
          const auto k = static_cast<std::size_t>(y);
          const double lo = cut[k], hi = cut[k + 1];
          if (std::isfinite(lo) && std::isfinite(hi)) {
            state.z(i, col) = 0.5 * (lo + hi);
          } else if (std::isfinite(lo)) {
            state.z(i, col) = lo + 1.0;
          } else {
            state.z(i, col) = hi - 1.0;
          }
          break;
        }
        case VariableKind::nominal: {
          const auto width = static_cast<Eigen::Index>(schema.latent_width(j));
          const auto k = static_cast<Eigen::Index>(y);
          for (Eigen::Index l = 0; l < width; ++l) state.z(i, col + l) = (l == k) ? 1.0 : -1.0;
          break;
        }
      }
    }
  }
  return state;
}

void resample_latents(LatentState& latents, const Dataset& ds, const Schema& schema,
                      const MixtureState& mixture, const CovarianceState& cov,
                      std::span<const double> probabilities, double kappa, Rng& rng) {
  if (schema.num_ordinal() == 0 && schema.num_nominal() == 0) return;
  const Matrix& precision = cov.precision;
  const auto n = static_cast<Eigen::Index>(ds.n());
  const std::size_t first_ordinal = schema.num_continuous();
  const std::size_t first_nominal = first_ordinal + schema.num_ordinal();

  Vector z(static_cast<Eigen::Index>(schema.q()));
  std::vector<double> block;
  for (Eigen::Index i = 0; i < n; ++i) {
    z = latents.z.row(i).transpose();
    const Vector& mu = mixture.mean_of(static_cast<std::size_t>(i));
    const double scale = kappa * probabilities[static_cast<std::size_t>(i)];

    for (std::size_t j = first_ordinal; j < first_nominal; ++j) {
      const auto col = static_cast<Eigen::Index>(schema.latent_offset(j));
      const auto k = static_cast<std::size_t>(ds.y(i, static_cast<Eigen::Index>(j)));
      const auto& cut = schema.cutoffs(j);
      const auto m = conditional_moments_from_precision(precision, mu, z, col, scale);
      z(col) = sample_truncated_normal(m.mean, m.variance, {cut[k], cut[k + 1]}, rng);
    }

    for (std::size_t j = first_nominal; j < schema.p(); ++j) {
      const auto col = static_cast<Eigen::Index>(schema.latent_offset(j));
      const auto width = static_cast<Eigen::Index>(schema.latent_width(j));
      const int category = static_cast<int>(ds.y(i, static_cast<Eigen::Index>(j)));
      for (Eigen::Index l = 0; l < width; ++l) {
        block.assign(z.data() + col, z.data() + col + width);
        const auto region = nominal_region(block, category, static_cast<int>(l));
        const auto m = conditional_moments_from_precision(precision, mu, z, col + l, scale);
        z(col + l) = sample_truncated_normal(m.mean, m.variance, region, rng);
      }
    }
    latents.z.row(i) = z.transpose();
  }
}

std::optional<std::size_t> find_decode_violation(const LatentState& latents, const Dataset& ds,
                                                 const Schema& schema) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  std::vector<double> block;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < schema.p(); ++j) {
      const auto& var = schema.variable(j);
      const auto col = static_cast<Eigen::Index>(schema.latent_offset(j));
      const double y = ds.y(i, static_cast<Eigen::Index>(j));
      switch (var.kind) {
        case VariableKind::continuous:
          if (latents.z(i, col) != transform_continuous(y, var.transform))
            return static_cast<std::size_t>(i);
          break;
        case VariableKind::ordinal:
          if (decode_ordinal(latents.z(i, col), schema.cutoffs(j)) != static_cast<int>(y))
            return static_cast<std::size_t>(i);
          break;
        case VariableKind::nominal: {
          const auto width = static_cast<Eigen::Index>(schema.latent_width(j));
          block.clear();
          for (Eigen::Index l = 0; l < width; ++l) block.push_back(latents.z(i, col + l));
          const int category = decode_nominal(block);
          if (category != static_cast<int>(y)) return static_cast<std::size_t>(i);
          // The selected slot must be strictly positive.
          if (category < width && !(block[static_cast<std::size_t>(category)] > 0.0))
            return static_cast<std::size_t>(i);
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace mixscale
