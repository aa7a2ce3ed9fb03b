#include "mixscale/geweke.hpp"

#include "mixscale/latent.hpp"
#include "mixscale/random.hpp"

#include <algorithm>
#include <cmath>

namespace mixscale {

GewekeConfig default_geweke_config() {
  GewekeConfig c;
  c.weights = Vector(5);
  c.weights << 1.0, 2.0, 0.5, 1.0, 1.5;
  c.priors.variance = {4.0, 3.0};
  c.priors.base = {4.0, 3.0};
  c.priors.pd.b_shape = 2.0;
  c.priors.pd.b_rate = 2.0;
  return c;
}

Schema geweke_schema(bool with_nominal) {
  std::vector<VariableSpec> vars{VariableSpec::continuous("x"), VariableSpec::ordinal("y", 2)};
  if (with_nominal) vars.push_back(VariableSpec::nominal("c", 3));
  return build_schema(std::move(vars));
}

std::vector<std::string> geweke_statistic_names(bool with_nominal) {
  std::vector<std::string> names{"a",     "a==0", "b",      "sigma2",  "sigma2_mu0", "sigma2_mu1", "rho",
                                 "rho^2", "r",    "y_mean", "z0_mean", "z0^2_mean",  "z0*z1_mean"};
  if (with_nominal) names.insert(names.end(), {"c==0", "c==2", "rho_c", "z2*z3_mean"});
  return names;
}

Vector geweke_statistics(const ChainState& state, const Dataset& ds) {
  const Matrix& z = state.latents.z;
  const bool nominal = ds.y.cols() > 2;
  Vector s(nominal ? 17 : 13);
  const double rho = state.cov.corr(0, 1);
  s << state.hyper.a, state.hyper.a == 0.0 ? 1.0 : 0.0, state.hyper.b, state.cov.sd(0) * state.cov.sd(0),
      state.base.variances(0), state.base.variances(1), rho, rho * rho,
      static_cast<double>(state.mixture.r()), ds.y.col(1).mean(), z.col(0).mean(),
      z.col(0).squaredNorm() / static_cast<double>(z.rows()),
      z.col(0).dot(z.col(1)) / static_cast<double>(z.rows());
  if (nominal) {
    const double n = static_cast<double>(z.rows());
    s(13) = (ds.y.col(2).array() == 0.0).cast<double>().sum() / n;
    s(14) = (ds.y.col(2).array() == 2.0).cast<double>().sum() / n;
    s(15) = state.cov.corr(2, 3);
    s(16) = z.col(2).dot(z.col(3)) / n;
  }
  return s;
}

Matrix draw_uniform_margin_correlation(std::size_t q, Rng& rng) {
  const auto qq = static_cast<Eigen::Index>(q);
  const double dof = static_cast<double>(q) + 1.0;
  // Bartlett factor of a Wishart(q + 1, I) draw.
  Matrix A = Matrix::Zero(qq, qq);
  for (Eigen::Index i = 0; i < qq; ++i) {
    A(i, i) = std::sqrt(2.0 * draw_gamma(0.5 * (dof - static_cast<double>(i)), 1.0, rng));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = draw_std_normal(rng);
  }
  const Matrix W = A * A.transpose();
  const Matrix S = W.llt().solve(Matrix::Identity(qq, qq));
  const Vector d = S.diagonal().cwiseSqrt().cwiseInverse();
  Matrix corr = d.asDiagonal() * S * d.asDiagonal();
  corr.diagonal().setOnes();
  return 0.5 * (corr + corr.transpose());
}

namespace {

void draw_data(ChainState& state, Dataset& ds, const Schema& schema, std::span<const double> probabilities,
               double kappa, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  const auto q = static_cast<Eigen::Index>(schema.q());
  const Matrix L = state.cov.chol.matrixL();
  Vector e(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index l = 0; l < q; ++l) e(l) = draw_std_normal(rng);
    const double scale = std::sqrt(kappa * probabilities[static_cast<std::size_t>(i)]);
    state.latents.z.row(i) = (state.mixture.mean_of(static_cast<std::size_t>(i)) + scale * (L * e)).transpose();
  }
  for (std::size_t j = 0; j < schema.p(); ++j) {
    const auto& var = schema.variable(j);
    const auto off = static_cast<Eigen::Index>(schema.latent_offset(j));
    const auto jj = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (var.kind == VariableKind::continuous) {
        ds.y(i, jj) = state.latents.z(i, off);
      } else if (var.kind == VariableKind::ordinal) {
        const auto cut = schema.cutoffs(j);
        ds.y(i, jj) = decode_ordinal(state.latents.z(i, off), cut);
      } else {
        const auto width = static_cast<Eigen::Index>(schema.latent_width(j));
        const Vector block = state.latents.z.row(i).segment(off, width).transpose();
        ds.y(i, jj) = decode_nominal(std::span<const double>(block.data(), static_cast<std::size_t>(width)));
      }
    }
  }
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

}  // namespace

ChainState draw_prior_state(const Schema& schema, Dataset& ds, const GewekeConfig& config, Rng& rng) {
  const auto& pd = config.priors.pd;
  const std::size_t n = ds.n();
  const std::size_t q = schema.q();
  ChainState s;

  s.hyper.a = draw_uniform(0.0, 1.0, rng) < pd.alpha ? 0.0 : draw_beta(pd.a_shape0, pd.a_shape1, rng);
  s.hyper.b = draw_gamma(pd.b_shape, pd.b_rate, rng) - s.hyper.a;

  s.base.variances.resize(static_cast<Eigen::Index>(q));
  for (auto& v : s.base.variances) v = draw_inverse_gamma(config.priors.base.shape, config.priors.base.scale, rng);

  s.cov.free = schema.variance_flags();
  s.cov.sd = Vector::Ones(static_cast<Eigen::Index>(q));
  for (std::size_t l = 0; l < q; ++l)
    if (s.cov.free[l])
      s.cov.sd(static_cast<Eigen::Index>(l)) =
          std::sqrt(draw_inverse_gamma(config.priors.variance.shape, config.priors.variance.scale, rng));
  do {
    s.cov.corr = draw_uniform_margin_correlation(q, rng);
  } while (!s.cov.refresh());

  // Sequential urn.
  auto& mix = s.mixture;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = static_cast<double>(mix.r());
    Vector logw(static_cast<Eigen::Index>(mix.r() + 1));
    logw(0) = i == 0 ? 0.0 : std::log(s.hyper.b + s.hyper.a * r);
    for (std::size_t j = 0; j < mix.r(); ++j)
      logw(static_cast<Eigen::Index>(j + 1)) = std::log(static_cast<double>(mix.counts[j]) - s.hyper.a);
    const std::size_t pick = draw_log_categorical(logw, rng);
    if (pick == 0) {
      Vector mu(static_cast<Eigen::Index>(q));
      for (Eigen::Index l = 0; l < mu.size(); ++l) mu(l) = std::sqrt(s.base.variances(l)) * draw_std_normal(rng);
      mix.centers.push_back(std::move(mu));
      mix.counts.push_back(1);
      mix.labels.push_back(static_cast<int>(mix.r() - 1));
    } else {
      ++mix.counts[pick - 1];
      mix.labels.push_back(static_cast<int>(pick - 1));
    }
  }
  canonicalize_labels(mix);

  s.latents.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  const auto probabilities = effective_probabilities(ds, WeightMode::design);
  draw_data(s, ds, schema, probabilities, config.kappa, rng);
  return s;
}

double batch_means_se(const std::vector<double>& x, std::size_t batches) {
  if (batches < 2 || x.size() < 2 * batches) throw InputError("batch_means_se: too few draws for the batch count");
  const std::size_t size = x.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t k = 0; k < batches; ++k) {
    double s = 0.0;
    for (std::size_t t = k * size; t < (k + 1) * size; ++t) s += x[t];
    means[k] = s / static_cast<double>(size);
  }
  const double m = mean_of(means);
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

double GewekeReport::max_abs_z() const {
  double m = 0.0;
  for (const auto& s : statistics) m = std::max(m, std::abs(s.z));
  return m;
}

GewekeReport run_geweke(const GewekeConfig& config) {
  const Schema schema = geweke_schema(config.with_nominal);
  if (config.weights.size() < 2) throw InputError("Geweke test needs at least two records");
  Dataset ds = make_dataset(Matrix::Zero(config.weights.size(), static_cast<Eigen::Index>(schema.p())), config.weights);
  const auto probabilities = effective_probabilities(ds, WeightMode::design);
  const auto names = geweke_statistic_names(config.with_nominal);
  const std::size_t k = names.size();

  SamplerConfig sc;
  sc.kappa = config.kappa;
  sc.weight_mode = WeightMode::design;
  sc.priors = config.priors;
  sc.tuning = config.tuning;
  sc.check_invariants = true;

  Rng rng(config.seed);
  std::vector<std::vector<double>> marginal(k), successive(k);
  for (std::size_t t = 0; t < config.ancestral_draws; ++t) {
    const ChainState s = draw_prior_state(schema, ds, config, rng);
    const Vector g = geweke_statistics(s, ds);
    for (std::size_t j = 0; j < k; ++j) marginal[j].push_back(g(static_cast<Eigen::Index>(j)));
  }

  ChainState state = draw_prior_state(schema, ds, config, rng);
  state.rng.seed(config.seed + 1);
  for (std::size_t t = 0; t < config.successive_draws; ++t) {
    gibbs_sweep(state, ds, schema, sc, probabilities);
    draw_data(state, ds, schema, probabilities, config.kappa, state.rng);
    const Vector g = geweke_statistics(state, ds);
    for (std::size_t j = 0; j < k; ++j) successive[j].push_back(g(static_cast<Eigen::Index>(j)));
  }

  GewekeReport report;
  for (std::size_t j = 0; j < k; ++j) {
    GewekeStatistic st;
    st.name = names[j];
    st.ancestral_mean = mean_of(marginal[j]);
    double ss = 0.0;
    for (double v : marginal[j]) ss += (v - st.ancestral_mean) * (v - st.ancestral_mean);
    st.ancestral_se = std::sqrt(ss / static_cast<double>(marginal[j].size() - 1) /
                                static_cast<double>(marginal[j].size()));
    st.successive_mean = mean_of(successive[j]);
    st.successive_se = batch_means_se(successive[j], config.batches);
    const double se = std::hypot(st.ancestral_se, st.successive_se);
    st.z = se > 0.0 ? (st.ancestral_mean - st.successive_mean) / se : 0.0;
    report.statistics.push_back(st);
  }
  return report;
}

PriorChainTrace run_prior_chain(const PriorChainConfig& config) {
  const std::size_t q = config.free.size();
  if (q == 0) throw InputError("prior chain needs at least one coordinate");
  Rng rng(config.seed);
  CovarianceState cov = CovarianceState::identity(config.free);
  BaseMeasure base{Vector::Ones(static_cast<Eigen::Index>(q))};
  PDHyper hyper;
  const Matrix zero = Matrix::Zero(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
  const std::vector<int> no_sizes;
  const std::vector<Vector> no_centers;

  PriorChainTrace out;
  const auto iters = static_cast<Eigen::Index>(config.iterations);
  out.correlations.resize(iters, static_cast<Eigen::Index>(q * (q - 1) / 2));
  out.variances.resize(iters, static_cast<Eigen::Index>(q));
  out.base_variances.resize(iters, static_cast<Eigen::Index>(q));
  for (Eigen::Index t = 0; t < iters; ++t) {
    for (std::size_t j = 0; j < q; ++j)
      if (cov.free[j]) update_variance(cov, j, zero, 0, config.priors.variance, config.tuning, rng);
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = j + 1; k < q; ++k) update_correlation(cov, j, k, zero, 0, config.tuning, rng);
    update_sigma_mu(base, config.priors.base, no_centers, rng);
    hyper.a = update_a(hyper, config.priors.pd, no_sizes, rng);
    hyper.b = update_b(hyper, config.priors.pd, no_sizes, rng);

    Eigen::Index c = 0;
    for (std::size_t j = 0; j < q; ++j)
      for (std::size_t k = j + 1; k < q; ++k)
        out.correlations(t, c++) = cov.corr(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    out.variances.row(t) = cov.sd.array().square().matrix().transpose();
    out.base_variances.row(t) = base.variances.transpose();
    out.a.push_back(hyper.a);
    out.b.push_back(hyper.b);
  }
  return out;
}

}  // namespace mixscale
