#include "mixscale/sampler.hpp"

#include "mixscale/linalg.hpp"
#include "mixscale/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mixscale {
namespace {

void remove_from_cluster(MixtureState& mixture, std::size_t i) {
  const auto c = static_cast<std::size_t>(mixture.labels[i]);
  mixture.labels[i] = -1;
  if (--mixture.counts[c] > 0) return;
  // Move the last cluster into the emptied slot.
  const std::size_t last = mixture.r() - 1;
  if (c != last) {
    mixture.centers[c] = std::move(mixture.centers[last]);
    mixture.counts[c] = mixture.counts[last];
    for (auto& label : mixture.labels)
      if (label == static_cast<int>(last)) label = static_cast<int>(c);
  }
  mixture.centers.pop_back();
  mixture.counts.pop_back();
}

Vector draw_gaussian(const Vector& mean, const Eigen::LLT<Matrix>& precision_chol, Rng& rng) {
  Vector eps(mean.size());
  for (Eigen::Index l = 0; l < eps.size(); ++l) eps(l) = draw_std_normal(rng);
  // x = L^{-T} eps has covariance (L L^T)^{-1}.
  precision_chol.matrixU().solveInPlace(eps);
  return mean + eps;
}

// Precision-form posterior shared by location_posterior and the draws.
struct PrecisionForm {
  Eigen::LLT<Matrix> chol;
  Vector mean;
};

PrecisionForm location_precision_form(const Vector& weighted_sum, double weight_sum,
                                      const CovarianceState& cov, const BaseMeasure& base, double kappa) {
  Matrix precision = (weight_sum / kappa) * cov.precision;
  precision.diagonal() += base.variances.cwiseInverse();
  auto llt = try_cholesky(precision);
  if (!llt) throw StateError("location posterior precision is not positive definite");
  Vector mean = llt->solve(cov.precision * weighted_sum / kappa);
  return {std::move(*llt), std::move(mean)};
}

}  // namespace

void check_mixture(const MixtureState& mixture) {
  const std::size_t r = mixture.r();
  if (mixture.counts.size() != r) throw StateError("counts and centres differ in length");
  std::vector<int> seen(r, 0);
  for (int label : mixture.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= r) throw StateError("label outside 0..r-1");
    ++seen[static_cast<std::size_t>(label)];
  }
  int total = 0;
  for (std::size_t c = 0; c < r; ++c) {
    if (mixture.counts[c] < 1) throw StateError("empty cluster retained");
    if (seen[c] != mixture.counts[c]) throw StateError("cluster count disagrees with labels");
    total += mixture.counts[c];
  }
  if (static_cast<std::size_t>(total) != mixture.n()) throw StateError("cluster counts do not sum to n");
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::vector<int> map;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    if (l >= map.size()) map.resize(l + 1, -1);
    if (map[l] < 0) map[l] = next++;
    out[i] = map[l];
  }
  return out;
}

void canonicalize_labels(MixtureState& mixture) {
  const std::vector<int> relabelled = canonical_labels(mixture.labels);
  std::vector<Vector> centers(mixture.r());
  std::vector<int> counts(mixture.r());
  for (std::size_t i = 0; i < relabelled.size(); ++i) {
    const auto to = static_cast<std::size_t>(relabelled[i]);
    const auto from = static_cast<std::size_t>(mixture.labels[i]);
    centers[to] = mixture.centers[from];
    counts[to] = mixture.counts[from];
  }
  mixture.labels = relabelled;
  mixture.centers = std::move(centers);
  mixture.counts = std::move(counts);
}

void validate(const SamplerConfig& config) {
  if (config.thinning < 1) throw InputError("thinning must be at least 1");
  if (config.burn_in >= config.iterations) throw InputError("burn-in must be smaller than iterations");
  if (!(config.kappa > 0.0) || !std::isfinite(config.kappa)) throw InputError("kappa must be positive");
  if (!(config.priors.variance.shape > 0 && config.priors.variance.scale > 0 &&
        config.priors.base.shape > 0 && config.priors.base.scale > 0))
    throw InputError("variance prior constants must be positive");
  if (!(config.tuning.phi_sigma > 0 && config.tuning.phi_rho > 0))
    throw InputError("tuning constants must be positive");
  validate(config.priors.pd);
}

std::size_t kept_count(const SamplerConfig& config) {
  return (config.iterations - config.burn_in) / config.thinning;
}

std::vector<double> effective_probabilities(const Dataset& ds, WeightMode mode) {
  if (mode == WeightMode::ignore) return std::vector<double>(ds.n(), 1.0);
  return {ds.probabilities.begin(), ds.probabilities.end()};
}

ChainState initialize_chain(const Dataset& ds, const Schema& schema, const SamplerConfig& config) {
  validate(config);
  if (ds.n() == 0) throw InputError("cannot sample an empty dataset");
  ChainState s;
  s.rng.seed(config.seed);
  s.latents = initialize_latents(ds, schema);

  const Matrix& z = s.latents.z;
  const auto n = static_cast<double>(z.rows());
  const Vector means = z.colwise().mean().transpose();
  Vector variances(z.cols());
  for (Eigen::Index l = 0; l < z.cols(); ++l)
    variances(l) = n > 1 ? (z.col(l).array() - means(l)).square().sum() / (n - 1.0) : 1.0;

  Vector sd = Vector::Ones(z.cols());
  for (Eigen::Index l = 0; l < z.cols(); ++l)
    if (schema.variance_free(static_cast<std::size_t>(l)) && variances(l) > 0.0) sd(l) = std::sqrt(variances(l));
  s.cov = CovarianceState::identity(schema.variance_flags(), sd);
  s.base.variances = variances.cwiseMax(1.0);
  s.hyper = PDHyper{0.5, 1.0};

  // One cluster per record, located at its own latent vector.
  s.mixture.labels.resize(ds.n());
  s.mixture.counts.assign(ds.n(), 1);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    s.mixture.labels[i] = static_cast<int>(i);
    s.mixture.centers.push_back(z.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return s;
}

Vector allocation_log_weights(const Vector& z, const std::vector<Vector>& centers,
                              const std::vector<int>& counts, const CovarianceState& cov,
                              const BaseMeasure& base, const PDHyper& hyper, double scale) {
  const std::size_t r = centers.size();
  Vector logw(static_cast<Eigen::Index>(r + 1));
  if (r == 0) {
    logw(0) = 0.0;
    return logw;
  }

  Matrix marginal = scale * cov.sigma;
  marginal.diagonal() += base.variances;
  auto marginal_chol = try_cholesky(marginal);
  if (!marginal_chol) throw StateError("pi_i kappa Sigma + Sigma_mu is not positive definite");
  const Vector zero = Vector::Zero(z.size());
  logw(0) = std::log(hyper.b + hyper.a * static_cast<double>(r)) +
            log_normal_density(z, zero, *marginal_chol, log_det(*marginal_chol));
  for (std::size_t j = 0; j < r; ++j)
    logw(static_cast<Eigen::Index>(j + 1)) =
        std::log(counts[j] - hyper.a) + log_normal_density(z, centers[j], cov.chol, cov.logdet, scale);
  return logw;
}

GaussianMoments location_posterior(const Vector& weighted_sum, double weight_sum,
                                   const CovarianceState& cov, const BaseMeasure& base, double kappa) {
  auto form = location_precision_form(weighted_sum, weight_sum, cov, base, kappa);
  const auto q = weighted_sum.size();
  return {form.mean, form.chol.solve(Matrix::Identity(q, q))};
}

double update_mu_i(std::size_t i, const LatentState& latents, MixtureState& mixture,
                   const CovarianceState& cov, const BaseMeasure& base, const PDHyper& hyper,
                   double probability, double kappa, Rng& rng) {
  remove_from_cluster(mixture, i);
  const Vector z = latents.z.row(static_cast<Eigen::Index>(i)).transpose();
  const double scale = probability * kappa;

  const Vector logw = allocation_log_weights(z, mixture.centers, mixture.counts, cov, base, hyper, scale);
  double total = 1.0;
  const std::size_t choice = draw_log_categorical(logw, rng, &total);

  if (choice == 0) {
    // New value from N(nu_i, V_i), the location posterior of a singleton.
    auto form = location_precision_form(z / probability, 1.0 / probability, cov, base, kappa);
    mixture.centers.push_back(draw_gaussian(form.mean, form.chol, rng));
    mixture.counts.push_back(1);
    mixture.labels[i] = static_cast<int>(mixture.r() - 1);
  } else {
    mixture.labels[i] = static_cast<int>(choice - 1);
    ++mixture.counts[choice - 1];
  }
  return total;
}

void update_unique_mus(const LatentState& latents, MixtureState& mixture, const CovarianceState& cov,
                       const BaseMeasure& base, std::span<const double> probabilities, double kappa,
                       Rng& rng) {
  const std::size_t r = mixture.r();
  const auto q = latents.z.cols();
  std::vector<Vector> sums(r, Vector::Zero(q));
  std::vector<double> weights(r, 0.0);
  for (std::size_t i = 0; i < mixture.n(); ++i) {
    const auto c = static_cast<std::size_t>(mixture.labels[i]);
    const double w = 1.0 / probabilities[i];
    sums[c].noalias() += w * latents.z.row(static_cast<Eigen::Index>(i)).transpose();
    weights[c] += w;
  }
  for (std::size_t c = 0; c < r; ++c) {
    auto form = location_precision_form(sums[c], weights[c], cov, base, kappa);
    mixture.centers[c] = draw_gaussian(form.mean, form.chol, rng);
  }
}

void gibbs_sweep(ChainState& state, const Dataset& ds, const Schema& schema, const SamplerConfig& config,
                 std::span<const double> probabilities, AcceptanceCounts* acceptance) {
  const double kappa = config.kappa;
  const std::size_t n = ds.n();
  auto& rng = state.rng;

  // (a)
  for (std::size_t i = 0; i < n; ++i) {
    const double total = update_mu_i(i, state.latents, state.mixture, state.cov, state.base, state.hyper,
                                      probabilities[i], kappa, rng);
    if (config.check_invariants && std::abs(total - 1.0) > 1e-10) {
      std::ostringstream msg;
      msg << "allocation probabilities of record " << i << " sum to " << total;
      throw StateError(msg.str());
    }
  }
  // (b)
  update_unique_mus(state.latents, state.mixture, state.cov, state.base, probabilities, kappa, rng);
  // (c)
  update_sigma_mu(state.base, config.priors.base, state.mixture.centers, rng);
  // (d), (e)
  const Matrix scatter = scatter_matrix(state.latents, state.mixture, probabilities, kappa);
  const std::size_t q = state.cov.q();
  for (std::size_t j = 0; j < q; ++j) {
    if (!state.cov.free[j]) continue;
    const bool ok =
        update_variance(state.cov, j, scatter, n, config.priors.variance, config.tuning, rng);
    if (acceptance) {
      ++acceptance->variance_proposed;
      acceptance->variance_accepted += ok;
    }
  }
  for (std::size_t j = 0; j < q; ++j)
    for (std::size_t k = j + 1; k < q; ++k) {
      const bool ok = update_correlation(state.cov, j, k, scatter, n, config.tuning, rng);
      if (acceptance) {
        ++acceptance->correlation_proposed;
        acceptance->correlation_accepted += ok;
      }
    }
  // (f), (g)
  const std::vector<int>& sizes = state.mixture.counts;
  const double a = update_a(state.hyper, config.priors.pd, sizes, rng);
  if (acceptance) {
    ++acceptance->a_proposed;
    acceptance->a_accepted += (a != state.hyper.a);
  }
  state.hyper.a = a;
  const double b = update_b(state.hyper, config.priors.pd, sizes, rng);
  if (acceptance) {
    ++acceptance->b_proposed;
    acceptance->b_accepted += (b != state.hyper.b);
  }
  state.hyper.b = b;
  // (h)
  resample_latents(state.latents, ds, schema, state.mixture, state.cov, probabilities, kappa, rng);

  canonicalize_labels(state.mixture);
  ++state.iteration;
  if (config.check_invariants) check_state(state, ds, schema);
}

void check_state(const ChainState& state, const Dataset& ds, const Schema& schema) {
  check_mixture(state.mixture);
  if (state.mixture.n() != ds.n()) throw StateError("allocation length differs from n");
  check_covariance(state.cov);
  if (!(state.hyper.a >= 0.0 && state.hyper.a < 1.0) || !(state.hyper.b > -state.hyper.a))
    throw StateError("PD hyperparameters left their support");
  if (!(state.base.variances.array() > 0.0).all()) throw StateError("nonpositive base variance");
  if (auto bad = find_decode_violation(state.latents, ds, schema)) {
    std::ostringstream msg;
    msg << "latents of record " << *bad << " no longer decode to the observed values";
    throw StateError(msg.str());
  }
}

void continue_chain(ChainState& state, ChainOutput& out, const Dataset& ds, const Schema& schema,
                    const SamplerConfig& config, const ProgressCallback& progress) {
  validate(config);
  const auto probabilities = effective_probabilities(ds, config.weight_mode);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t c = schema.num_continuous();
  const auto q = static_cast<Eigen::Index>(schema.q());
  const std::size_t capacity = kept_count(config);
  if (out.free_variances.rows() < static_cast<Eigen::Index>(capacity)) {
    out.free_variances.conservativeResize(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(c));
    out.base_variances.conservativeResize(static_cast<Eigen::Index>(capacity), q);
  }

  while (state.iteration < config.iterations) {
    gibbs_sweep(state, ds, schema, config, probabilities, &out.acceptance);
    const std::size_t it = state.iteration;
    out.clusters_all.push_back(state.mixture.r());
    if (it > config.burn_in && (it - config.burn_in) % config.thinning == 0) {
      const auto row = static_cast<Eigen::Index>(out.kept());
      out.partitions.push_back(state.mixture.labels);
      out.kept_iterations.push_back(it);
      out.clusters.push_back(state.mixture.r());
      out.a.push_back(state.hyper.a);
      out.b.push_back(state.hyper.b);
      for (std::size_t j = 0; j < c; ++j) {
        const double s = state.cov.sd(static_cast<Eigen::Index>(j));
        out.free_variances(row, static_cast<Eigen::Index>(j)) = s * s;
      }
      out.base_variances.row(row) = state.base.variances.transpose();
    }
    if (progress) progress(it, state);
  }
  out.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ChainOutput run_chain(const Dataset& ds, const Schema& schema, const SamplerConfig& config,
                      const ProgressCallback& progress) {
  ChainState state = initialize_chain(ds, schema, config);
  ChainOutput out;
  continue_chain(state, out, ds, schema, config, progress);
  return out;
}

std::vector<double> cluster_count_histogram(const ChainOutput& out) {
  std::size_t top = 0;
  for (auto r : out.clusters) top = std::max(top, r);
  std::vector<double> hist(top + 1, 0.0);
  for (auto r : out.clusters) hist[r] += 1.0;
  for (auto& h : hist) h /= static_cast<double>(std::max<std::size_t>(out.clusters.size(), 1));
  return hist;
}

std::size_t modal_cluster_count(const ChainOutput& out) {
  const auto hist = cluster_count_histogram(out);
  return static_cast<std::size_t>(std::distance(hist.begin(), std::max_element(hist.begin(), hist.end())));
}

}  // namespace mixscale
