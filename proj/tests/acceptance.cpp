// Acceptance runner: `acceptance [criterion ...]`, all ten when none given.
// Prints one PASS/FAIL line per criterion; exit status 1 if any failed.

#include "oracles.hpp"
#include "stats.hpp"

#include "mixscale/geweke.hpp"
#include "mixscale/io.hpp"
#include "mixscale/linalg.hpp"
#include "mixscale/pdprocess.hpp"
#include "mixscale/postproc.hpp"
#include "mixscale/random.hpp"
#include "mixscale/sampler.hpp"
#include "mixscale/simgen.hpp"
#include "mixscale/warnings.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

using namespace mixscale;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one sub-check; the criterion passes only if all do.
  void require(bool ok, const std::string& what) {
    if (!detail.str().empty()) detail << "; ";
    detail << what << (ok ? "" : " [X]");
    pass = pass && ok;
  }
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// ------------------------------------------------------------ benchmark runs

struct BenchRun {
  SimulatedData sim;
  ChainOutput out;
  Selection selection;
  std::vector<double> histogram;
  std::size_t mode = 0;
  std::size_t sweeps_checked = 0;

  double mass(std::size_t r) const { return r < histogram.size() ? histogram[r] : 0.0; }
};

// Extra per-sweep checks on top of the sampler's own invariant assertions.
void check_sweep(const ChainState& s, const Dataset& ds, const Schema& schema) {
  check_state(s, ds, schema);
  if (auto v = find_decode_violation(s.latents, ds, schema)) throw StateError("decode violation");
  for (std::size_t l = 0; l < schema.q(); ++l)
    if (!schema.variance_free(l) && s.cov.sd(static_cast<Eigen::Index>(l)) != 1.0)
      throw StateError("fixed variance moved");
  int total = 0;
  for (int c : s.mixture.counts) total += c;
  if (static_cast<std::size_t>(total) != ds.n()) throw StateError("cluster sizes do not sum to n");
  if (!try_cholesky(s.cov.corr)) throw StateError("Omega lost positive definiteness");
}

// Data seed 1, chain seed 1, 4700 sweeps, burn-in 200, thinning 3.
const BenchRun& bench(Scenario sc, const std::string& preset) {
  static std::map<std::pair<int, std::string>, BenchRun> cache;
  const auto key = std::make_pair(static_cast<int>(sc), preset);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  BenchRun run;
  run.sim = generate({sc, 0, 1});
  SamplerConfig cfg;
  cfg.seed = 1;
  cfg.kappa = run.sim.kappa;
  cfg.weight_mode = run.sim.weight_mode;
  cfg.check_invariants = true;
  apply_preset(cfg.priors, preset);
  const Dataset& ds = run.sim.dataset;
  const Schema& schema = run.sim.schema;
  run.out = run_chain(ds, schema, cfg, [&](std::size_t, const ChainState& s) {
    check_sweep(s, ds, schema);
    ++run.sweeps_checked;
  });
  const Matrix sim = similarity(run.out.partitions);
  run.selection = dahl_select(run.out.partitions, sim);
  run.selection.hm = hm_measure(run.selection.partition, expand_variables(ds, schema).values, ds.weights);
  run.histogram = cluster_count_histogram(run.out);
  run.mode = modal_cluster_count(run.out);
  std::cerr << "  ran " << to_string(sc) << "/" << preset << ": modal r " << run.mode << " (" << fmt(run.mass(run.mode))
            << "), selected r " << cluster_count(run.selection.partition) << ", " << fmt(run.out.seconds) << " s\n";
  return cache.emplace(key, std::move(run)).first->second;
}

std::string describe(const BenchRun& r) {
  return "modal r " + std::to_string(r.mode) + " (mass " + fmt(r.mass(r.mode)) + "), selected r " +
         std::to_string(cluster_count(r.selection.partition));
}

// ------------------------------------------------------------ criteria

Outcome criterion1() {
  Outcome o;
  const auto& r = bench(Scenario::I, "C");
  o.require(r.mode == 3, "Scenario I/C " + describe(r) + ", want mode 3");
  o.require(r.mass(3) >= 0.3, "mass at 3 = " + fmt(r.mass(3)) + ", want >= 0.3");
  o.require(r.out.seconds <= 1800, "runtime " + fmt(r.out.seconds) + " s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto& r = bench(Scenario::II, "C");
  o.require(cluster_count(r.selection.partition) == 3, "Scenario II/C " + describe(r) + ", want selected r = 3");
  o.require(r.mode == 3 || r.mode == 4, "mode in {3, 4}");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto& r = bench(Scenario::III, "C");
  std::map<int, int> sizes;
  for (int l : r.selection.partition) ++sizes[l];
  std::vector<int> s;
  for (auto [l, c] : sizes) s.push_back(c);
  std::sort(s.rbegin(), s.rend());
  int top3 = 0;
  for (std::size_t k = 0; k < std::min<std::size_t>(3, s.size()); ++k) top3 += s[k];
  const double cover = static_cast<double>(top3) / static_cast<double>(r.selection.partition.size());
  o.require(s.size() == 5, "Scenario III/C " + describe(r) + ", want selected r = 5");
  o.require(cover >= 0.8, "three largest cover " + fmt(cover) + ", want >= 0.8");
  o.require(r.mode >= 4 && r.mode <= 6, "mode in {4, 5, 6}");
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (Scenario sc : {Scenario::I, Scenario::III}) {
    const auto a = bench(sc, "A").mode, b = bench(sc, "B").mode, c = bench(sc, "C").mode;
    o.require(a > b && b > c, "Scenario " + to_string(sc) + " modes A/B/C = " + std::to_string(a) + "/" +
                                  std::to_string(b) + "/" + std::to_string(c) + ", want strictly decreasing");
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const std::pair<const char*, double> targets[] = {{"A", 0.99}, {"B", 0.57}, {"C", 0.03}};
  for (auto [preset, want] : targets) {
    const auto& r = bench(Scenario::I, preset);
    const double mean_a = teststats::mean(r.out.a);
    o.require(std::abs(mean_a - want) <= 0.15,
              std::string("E[a] under ") + preset + " = " + fmt(mean_a) + ", want " + fmt(want) + " +- 0.15");
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto& iv = bench(Scenario::IV, "C");
  const auto& v = bench(Scenario::V, "C");
  const auto& vi = bench(Scenario::VI, "C");
  o.require(std::abs(iv.mass(1) - 0.8) <= 0.15, "IV mass at r = 1 is " + fmt(iv.mass(1)) + " (" + describe(iv) + ")");
  o.require(v.mode == 3, "V " + describe(v) + ", want mode 3");
  o.require(vi.mode == 5, "VI " + describe(vi) + ", want mode 5");
  for (const auto* r : {&iv, &v, &vi}) o.require(r->out.seconds <= 1200, "runtime " + fmt(r->out.seconds) + " s");
  return o;
}

Outcome criterion7() {
  Outcome o;
  auto cfg = default_geweke_config();
  cfg.ancestral_draws = 60000;
  cfg.successive_draws = 60000;
  cfg.seed = 1;
  const auto report = run_geweke(cfg);
  std::string worst;
  double max_z = 0.0;
  for (const auto& s : report.statistics)
    if (std::abs(s.z) > max_z) {
      max_z = std::abs(s.z);
      worst = s.name;
    }
  o.require(max_z < 3.0, "correct sampler max |z| = " + fmt(max_z) + " (" + worst + "), " +
                             std::to_string(report.statistics.size()) + " statistics");

  auto broken = cfg;
  broken.tuning.variance_hastings = false;
  const double zv = run_geweke(broken).max_abs_z();
  o.require(zv > 5.0, "without the variance Hastings term max |z| = " + fmt(zv));
  broken = cfg;
  broken.tuning.correlation_hastings = false;
  const double zr = run_geweke(broken).max_abs_z();
  o.require(zr > 5.0, "without the correlation Hastings term max |z| = " + fmt(zr));
  return o;
}

std::vector<double> column(const Matrix& m, Eigen::Index c, std::size_t thin) {
  std::vector<double> out;
  for (Eigen::Index t = 0; t < m.rows(); t += static_cast<Eigen::Index>(thin)) out.push_back(m(t, c));
  return out;
}

Outcome criterion8() {
  Outcome o;
  PriorSettings priors;  // preset C variances, default PD hyperpriors
  std::vector<std::vector<double>> rho(3), sigma2(2), sigma2_mu(3);
  std::vector<double> zero_flag, bpa, a_pos;
  // Several independent chains; rho needs thinning around 400 to decorrelate.
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    PriorChainConfig cfg;
    cfg.free = {true, true, false};
    cfg.iterations = 400000;
    cfg.seed = seed;
    cfg.priors = priors;
    const auto trace = run_prior_chain(cfg);
    for (Eigen::Index c = 0; c < 3; ++c) {
      const auto r = column(trace.correlations, c, 400);
      rho[static_cast<std::size_t>(c)].insert(rho[static_cast<std::size_t>(c)].end(), r.begin(), r.end());
      const auto m = column(trace.base_variances, c, 100);
      sigma2_mu[static_cast<std::size_t>(c)].insert(sigma2_mu[static_cast<std::size_t>(c)].end(), m.begin(), m.end());
    }
    for (Eigen::Index c = 0; c < 2; ++c) {
      const auto v = column(trace.variances, c, 100);
      sigma2[static_cast<std::size_t>(c)].insert(sigma2[static_cast<std::size_t>(c)].end(), v.begin(), v.end());
    }
    for (std::size_t t = 0; t < trace.a.size(); ++t) {
      zero_flag.push_back(trace.a[t] == 0.0);
      if (t % 100 == 0) {
        bpa.push_back(trace.b[t] + trace.a[t]);
        if (trace.a[t] > 0.0) a_pos.push_back(trace.a[t]);
      }
    }
  }

  const auto uniform = [](double x) { return std::clamp(0.5 * (x + 1.0), 0.0, 1.0); };
  for (std::size_t k = 0; k < 3; ++k) {
    const auto ks = teststats::ks_test(rho[k], uniform);
    o.require(ks.p > 0.01, "rho" + std::to_string(k) + " uniform KS p = " + fmt(ks.p) + " (n " +
                               std::to_string(rho[k].size()) + ")");
  }
  const auto& pd = priors.pd;
  const auto ks_b = teststats::ks_test(bpa, [&](double x) { return teststats::gamma_cdf(x, pd.b_shape, pd.b_rate); });
  o.require(ks_b.p > 0.01, "b + a ~ Ga KS p = " + fmt(ks_b.p));
  const auto ks_a = teststats::ks_test(a_pos, [&](double x) { return boost::math::ibeta(pd.a_shape0, pd.a_shape1, x); });
  o.require(ks_a.p > 0.01, "a | a > 0 ~ Be KS p = " + fmt(ks_a.p));
  const double p0 = teststats::mean(zero_flag), se = teststats::batch_se(zero_flag);
  o.require(std::abs(p0 - pd.alpha) < 3 * se, "P(a = 0) = " + fmt(p0, 4) + " +- " + fmt(se, 2) + ", alpha " +
                                                 fmt(pd.alpha));
  for (std::size_t k = 0; k < 2; ++k) {
    const auto ks = teststats::ks_test(sigma2[k], [&](double x) {
      return teststats::inverse_gamma_cdf(x, priors.variance.shape, priors.variance.scale);
    });
    o.require(ks.p > 0.01, "sigma2_" + std::to_string(k) + " ~ IGa KS p = " + fmt(ks.p));
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const auto ks = teststats::ks_test(sigma2_mu[k], [&](double x) {
      return teststats::inverse_gamma_cdf(x, priors.base.shape, priors.base.scale);
    });
    o.require(ks.p > 0.01, "sigma2_mu" + std::to_string(k) + " ~ IGa KS p = " + fmt(ks.p));
  }
  return o;
}

Outcome criterion9() {
  Outcome o;

  double eppf_err = 0.0;
  std::size_t partitions = 0;
  for (double b : {0.1, 0.5, 1.0, 3.7, 25.0})
    for (int n = 1; n <= 12; ++n)
      oracle::for_each_integer_partition(n, [&](const std::vector<int>& sizes) {
        eppf_err = std::max(eppf_err, std::abs(eppf_log(0.0, b, sizes) - oracle::ewens_log(b, sizes)));
        ++partitions;
      });
  o.require(eppf_err < 1e-10, "EPPF vs Ewens max error " + fmt(eppf_err, 2) + " over " + std::to_string(partitions));

  {
    const std::size_t n = 10;
    Matrix scatter(1, 1);
    scatter << 25.0;
    const CovariancePrior prior{2.1, 30.0};
    const double shape = prior.shape + 0.5 * n, scale = prior.scale + 0.5 * scatter(0, 0);
    auto state = CovarianceState::identity({true});
    Rng rng(5);
    std::vector<double> chain, direct;
    for (int t = 0; t < 200000; ++t) {
      update_variance(state, 0, scatter, n, prior, {}, rng);
      chain.push_back(state.sd(0) * state.sd(0));
    }
    for (int t = 0; t < 100000; ++t) direct.push_back(draw_inverse_gamma(shape, scale, rng));
    const auto ks = teststats::ks_two_sample(teststats::thin(chain, 20), teststats::thin(direct, 10));
    const double diff = std::abs(teststats::mean(chain) - teststats::mean(direct));
    const double se = std::hypot(teststats::batch_se(chain), teststats::batch_se(direct));
    o.require(ks.p > 0.01 && diff < 3 * se, "q = 1 variance MH vs inverse gamma: KS p = " + fmt(ks.p) +
                                                ", mean diff " + fmt(diff, 2) + " (3 SE " + fmt(3 * se, 2) + ")");
  }

  {
    Rng rng(5);
    double err = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
      Matrix a(3, 3);
      for (Eigen::Index i = 0; i < 9; ++i) a.data()[i] = draw_std_normal(rng);
      const Matrix sigma = a * a.transpose() + 0.5 * Matrix::Identity(3, 3);
      Vector mu(3), z(3);
      for (int l = 0; l < 3; ++l) {
        mu(l) = draw_uniform(-3, 3, rng);
        z(l) = mu(l) + 2.0 * draw_uniform(-1, 1, rng) * std::sqrt(sigma(l, l));
      }
      const double scale = draw_uniform(0.5, 2.0, rng);
      const auto c = static_cast<Eigen::Index>(trial % 3);
      const auto grid = oracle::grid_conditional(sigma, mu, z, c, scale);
      const auto m = conditional_moments(sigma, mu, z, c, scale);
      err = std::max({err, std::abs(m.mean - grid.mean), std::abs(m.variance - grid.variance)});
    }
    o.require(err < 1e-6, "conditional moments vs grid max error " + fmt(err, 2));
  }

  {
    Rng rng(4);
    double err = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 4 + static_cast<std::size_t>(draw_uniform(0, 20, rng));
      Matrix y(static_cast<Eigen::Index>(n), 4);
      for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = draw_std_normal(rng);
      Vector w(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = draw_uniform(0.1, 10, rng);
      Partition p(n);
      for (auto& l : p) l = static_cast<int>(draw_uniform(0, 4, rng));
      err = std::max(err, std::abs(hm_measure(p, y, w) - oracle::hm(p, y, w)));
    }
    o.require(err < 1e-12, "HM vs double loop max error " + fmt(err, 2));
  }

  {
    Rng rng(2);
    int mismatches = 0;
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t count = 1 + static_cast<std::size_t>(draw_uniform(0, 10, rng));
      std::vector<Partition> parts;
      for (std::size_t k = 0; k < count; ++k) {
        Partition p(9);
        for (auto& l : p) l = static_cast<int>(draw_uniform(0, 4, rng));
        parts.push_back(p);
      }
      const Matrix sim = similarity(parts);
      mismatches += dahl_select(parts, sim).index != oracle::brute_dahl(parts, sim);
    }
    o.require(mismatches == 0, "Dahl vs brute force: " + std::to_string(mismatches) + " mismatches in 300");
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::size_t runs = 0, sweeps = 0;
  bool all_ok = true;
  std::string failure;
  for (Scenario sc : {Scenario::I, Scenario::II, Scenario::III, Scenario::IV, Scenario::V, Scenario::VI})
    for (const char* preset : {"A", "B", "C"}) {
      try {
        const auto& r = bench(sc, preset);
        ++runs;
        sweeps += r.sweeps_checked;
        all_ok = all_ok && r.sweeps_checked == 4700;
      } catch (const std::exception& e) {
        all_ok = false;
        failure = to_string(sc) + "/" + preset + ": " + e.what();
      }
    }
  o.require(all_ok, std::to_string(runs) + " runs, " + std::to_string(sweeps) + " sweeps with state checks" +
                        (failure.empty() ? "" : " (" + failure + ")"));

  double worst = 0.0;
  for (Scenario sc : {Scenario::I, Scenario::III, Scenario::V}) {
    const auto sim = generate({sc, 0, 1});
    Partition singletons(sim.dataset.n());
    std::iota(singletons.begin(), singletons.end(), 0);
    const auto ex = expand_variables(sim.dataset, sim.schema);
    worst = std::max(worst, std::abs(hm_measure(singletons, ex.values, sim.dataset.weights)));
  }
  o.require(worst == 0.0, "HM(singletons) = " + fmt(worst));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  set_warnings_silenced(true);
  const std::function<Outcome()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                               criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) {
    const int c = std::atoi(argv[k]);
    if (c < 1 || c > 10) {
      std::cerr << "usage: acceptance [1-10 ...]\n";
      return 2;
    }
    selected.push_back(c);
  }
  if (selected.empty())
    for (int c = 1; c <= 10; ++c) selected.push_back(c);

  int failed = 0;
  for (int c : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c - 1]();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << "  ["
              << fmt(secs) << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
