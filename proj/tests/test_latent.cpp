#include "oracles.hpp"
#include "stats.hpp"

#include "mixscale/covariance.hpp"
#include "mixscale/linalg.hpp"
#include "mixscale/latent.hpp"
#include "mixscale/mixture.hpp"
#include "mixscale/random.hpp"
#include "mixscale/schema.hpp"
#include "mixscale/warnings.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace mixscale;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

int decode(double z, const std::vector<double>& cut) { return decode_ordinal(z, cut); }
int decode(std::vector<double> block) { return decode_nominal(block); }

// CDF of N(m, v) truncated to (lo, hi], using upper-tail areas above the mean.
double truncated_cdf(double x, double m, double v, double lo, double hi) {
  const double s = std::sqrt(v);
  const double a = (lo - m) / s, b = (hi - m) / s, t = (std::clamp(x, lo, hi) - m) / s;
  if (a > 0) {
    auto sf = [](double u) { return 0.5 * std::erfc(u / std::sqrt(2.0)); };
    return (sf(a) - sf(t)) / (sf(a) - sf(b));
  }
  return (teststats::phi_cdf(t) - teststats::phi_cdf(a)) / (teststats::phi_cdf(b) - teststats::phi_cdf(a));
}

}  // namespace

TEST_CASE("continuous transforms") {
  CHECK(transform_continuous(3.2, {}) == 3.2);
  TransformSpec log_shift{TransformKind::log_shift, 0.01, 1.0};
  CHECK(transform_continuous(0.0, log_shift) == 0.0);
  CHECK(transform_continuous(std::numbers::e - 1.0, log_shift) == doctest::Approx(1.0));
  CHECK_THROWS_AS(transform_continuous(-1.0, log_shift), InputError);
  CHECK_THROWS_AS(transform_continuous(1.0, TransformSpec{TransformKind::log_shift, 0.01, std::nullopt}), InputError);
}

TEST_CASE("log-shift of a skewed income column preserves ranks") {
  Rng rng(11);
  Matrix y(500, 1);
  for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, 0) = std::exp(8.0 + 1.2 * draw_std_normal(rng));
  TransformSpec t;
  t.kind = TransformKind::log_shift;
  Schema s = build_schema({VariableSpec::continuous("income", t)});
  const Dataset ds = make_dataset(y);
  s = resolve_transforms(s, ds);
  const auto& spec = s.variable(0).transform;
  REQUIRE(spec.shift.has_value());
  std::vector<double> col(y.data(), y.data() + y.rows());
  CHECK(*spec.shift == doctest::Approx(sample_quantile(col, 0.01)));

  std::vector<std::size_t> idx(col.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return col[a] < col[b]; });
  for (std::size_t k = 1; k < idx.size(); ++k)
    CHECK(transform_continuous(col[idx[k]], spec) > transform_continuous(col[idx[k - 1]], spec));
}

TEST_CASE("log-shift that cannot be made positive is an error") {
  TransformSpec t;
  t.kind = TransformKind::log_shift;
  t.shift_quantile = 0.5;
  const Schema s = build_schema({VariableSpec::continuous("x", t)});
  Matrix y(3, 1);
  y << -10.0, 1.0, 2.0;
  CHECK_THROWS_AS(resolve_transforms(s, make_dataset(y)), InputError);
}

TEST_CASE("ordinal decode uses left-open, right-closed intervals") {
  const std::vector<double> k3{-inf, 0.0, 4.0, inf}, k2{-inf, 0.0, inf};
  CHECK(decode(2.0, k3) == 1);
  CHECK(decode(-0.3, k2) == 0);
  CHECK(decode(0.0, k2) == 0);
  CHECK(decode(std::nextafter(0.0, 1.0), k2) == 1);
  CHECK(decode(4.0, k3) == 1);
  CHECK(decode(4.5, k3) == 2);
  CHECK(decode(-1e300, k3) == 0);
}

TEST_CASE("nominal decode") {
  CHECK(decode({-1.0, -2.0, -0.5}) == 3);
  CHECK(decode({0.5, -1.0}) == 0);
  CHECK(decode({0.2, 0.9, 0.1}) == 1);
  CHECK(decode({0.7, 0.7}) == 0);
}

TEST_CASE("conditional moments: closed forms") {
  Matrix eye = Matrix::Identity(3, 3);
  Vector mu(3), z(3);
  mu << 1.0, -2.0, 0.5;
  z << 7.0, 3.0, -4.0;
  for (Eigen::Index c = 0; c < 3; ++c) {
    auto m = conditional_moments(eye, mu, z, c, 1.0);
    CHECK(m.mean == doctest::Approx(mu(c)));
    CHECK(m.variance == doctest::Approx(1.0));
  }

  Matrix s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  Vector zero = Vector::Zero(2), zz(2);
  zz << 123.0, 1.0;
  auto m = conditional_moments(s, zero, zz, 0, 1.0);
  CHECK(m.mean == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.variance == doctest::Approx(0.75).epsilon(1e-14));
  auto p = conditional_moments_from_precision(s.inverse(), zero, zz, 0, 2.0);
  CHECK(p.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.variance == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("conditional moments match grid conditioning of the joint density") {
  Rng rng(5);
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
    CHECK(std::abs(m.mean - grid.mean) < 1e-6);
    CHECK(std::abs(m.variance - grid.variance) < 1e-6);
    const auto p = conditional_moments_from_precision(sigma.inverse(), mu, z, c, scale);
    CHECK(std::abs(p.mean - m.mean) < 1e-10);
    CHECK(std::abs(p.variance - m.variance) < 1e-10);
  }
}

TEST_CASE("truncated normal: half-normal, untruncated and far-tail means") {
  Rng rng(3);
  const int n = 100000;
  double s = 0;
  bool inside = true;
  for (int t = 0; t < n; ++t) {
    const double x = sample_truncated_normal(0, 1, {-inf, 0.0}, rng);
    inside = inside && x <= 0.0;
    s += x;
  }
  CHECK(inside);
  CHECK(std::abs(s / n + std::sqrt(2 / std::numbers::pi)) < 0.01);

  std::vector<double> free;
  for (int t = 0; t < n; ++t) free.push_back(sample_truncated_normal(1.5, 4.0, {-inf, inf}, rng));
  CHECK(std::abs(teststats::mean(free) - 1.5) < 4 * 2.0 / std::sqrt(n));
  CHECK(std::abs(teststats::variance(free) - 4.0) < 4 * 4.0 * std::sqrt(2.0 / n));

  const double sf4 = 0.5 * std::erfc(4 / std::sqrt(2.0));
  const double expected = std::exp(-8.0) / std::sqrt(2 * std::numbers::pi) / sf4;
  CHECK(expected == doctest::Approx(4.22561).epsilon(1e-5));
  s = 0;
  inside = true;
  for (int t = 0; t < n; ++t) {
    const double x = sample_truncated_normal(0, 1, {4.0, inf}, rng);
    inside = inside && x > 4.0;
    s += x;
  }
  CHECK(inside);
  CHECK(std::abs(s / n - expected) < 0.01);
}

TEST_CASE("truncated normal passes KS against the exact truncated CDF") {
  Rng cfg(17), rng(19);
  std::vector<TruncationRegion> regions{{-inf, 0.0}, {0.0, inf}, {0.0, 4.0}, {4.0, 8.0}, {4.0, inf},
                                        {-inf, -5.0}, {-1.0, 1.0}, {2.0, 2.5}, {8.0, 12.0}, {-inf, inf}};
  int passed = 0;
  for (const auto& region : regions) {
    const double m = draw_uniform(-2, 6, cfg), v = draw_uniform(0.2, 3.0, cfg);
    std::vector<double> x;
    for (int t = 0; t < 10000; ++t) x.push_back(sample_truncated_normal(m, v, region, rng));
    for (double value : x) REQUIRE((value > region.lower && value <= region.upper));
    const auto ks =
        teststats::ks_test(x, [&](double u) { return truncated_cdf(u, m, v, region.lower, region.upper); });
    INFO("region (" << region.lower << ", " << region.upper << "] mean " << m << " var " << v << " p " << ks.p);
    CHECK(ks.p > 0.01);
    passed += ks.p > 0.01;
  }
  CHECK(passed == 10);
}

TEST_CASE("truncated normal stays inside extreme and narrow regions") {
  Rng rng(23);
  set_warnings_silenced(true);
  for (int t = 0; t < 1000; ++t) {
    const double a = sample_truncated_normal(0, 1, {40.0, inf}, rng);
    CHECK(a > 40.0);
    const double b = sample_truncated_normal(0, 1, {50.0, 50.001}, rng);
    CHECK((b > 50.0 && b <= 50.001));
    const double c = sample_truncated_normal(0, 1, {-inf, -30.0}, rng);
    CHECK(c <= -30.0);
  }
  set_warnings_silenced(false);
  CHECK_THROWS_AS(sample_truncated_normal(0, 0, {-inf, inf}, rng), StateError);
  CHECK_THROWS_AS(sample_truncated_normal(0, 1, {1.0, 1.0}, rng), StateError);
}

namespace {

struct MixedFixture {
  Schema schema = build_schema({VariableSpec::continuous("x"), VariableSpec::ordinal("bin", 2),
                                VariableSpec::ordinal("ord", 3), VariableSpec::nominal("nom", 4)});
  Dataset ds;
  MixtureState mixture;
  CovarianceState cov;
  std::vector<double> probs;

  MixedFixture() {
    Rng rng(31);
    const int n = 40;
    Matrix y(n, 4);
    Vector w(n);
    for (int i = 0; i < n; ++i) {
      y(i, 0) = draw_std_normal(rng);
      y(i, 1) = i % 2;
      y(i, 2) = i % 3;
      y(i, 3) = i % 4;
      w(i) = draw_uniform(0.5, 3.0, rng);
    }
    ds = make_dataset(y, w);
    probs.assign(ds.probabilities.data(), ds.probabilities.data() + n);
    mixture.labels.assign(n, 0);
    mixture.counts = {n / 2, n - n / 2};
    for (int i = n / 2; i < n; ++i) mixture.labels[i] = 1;
    Vector c0(6), c1(6);
    c0 << 0.5, 1.0, 2.0, 0.3, -0.2, 0.1;
    c1 << -1.0, -1.0, 5.0, -0.5, 0.8, -1.0;
    mixture.centers = {c0, c1};
    cov = CovarianceState::identity(schema.variance_flags(), Vector::Constant(6, 1.7));
    for (Eigen::Index j = 0; j < 6; ++j)
      for (Eigen::Index k = 0; k < 6; ++k)
        if (j != k) cov.corr(j, k) = 0.3;
    REQUIRE(cov.refresh());
  }
};

}  // namespace

TEST_CASE("initial latents satisfy the decode rules") {
  MixedFixture f;
  const auto lat = initialize_latents(f.ds, f.schema);
  CHECK_FALSE(find_decode_violation(lat, f.ds, f.schema).has_value());
  CHECK(lat.z(0, 1) == -1.0);  // bin = 0 -> (-inf, 0]
  CHECK(lat.z(1, 1) == 1.0);
  CHECK(lat.z(1, 2) == 2.0);   // ord = 1 -> (0, 4] midpoint
  CHECK(lat.z(2, 2) == 5.0);
  CHECK(lat.z(3, 3) == -1.0);  // nom = 3 -> all negative
}

TEST_CASE("resample_latents keeps decode consistency and continuous values") {
  MixedFixture f;
  auto lat = initialize_latents(f.ds, f.schema);
  const Vector continuous = lat.z.col(0);
  Rng rng(41);
  for (int sweep = 0; sweep < 300; ++sweep) {
    resample_latents(lat, f.ds, f.schema, f.mixture, f.cov, f.probs, 1.3, rng);
    REQUIRE_FALSE(find_decode_violation(lat, f.ds, f.schema).has_value());
    REQUIRE((lat.z.col(0).array() == continuous.array()).all());
    for (Eigen::Index i = 0; i < lat.z.rows(); ++i) {
      if (f.ds.y(i, 1) == 1) REQUIRE(lat.z(i, 1) > 0.0);
      // At most one slot exceeds max(others, 0).
      int above = 0;
      for (int l = 0; l < 3; ++l) {
        double others = 0.0;
        for (int m = 0; m < 3; ++m)
          if (m != l) others = std::max(others, lat.z(i, 3 + m));
        above += lat.z(i, 3 + l) > others;
      }
      REQUIRE(above <= 1);
    }
  }
}

TEST_CASE("resample_latents leaves all-continuous data untouched") {
  const Schema s = build_schema({VariableSpec::continuous("a"), VariableSpec::continuous("b")});
  Matrix y(5, 2);
  y.setRandom();
  const Dataset ds = make_dataset(y);
  auto lat = initialize_latents(ds, s);
  const Matrix before = lat.z;
  MixtureState mix{std::vector<int>(5, 0), {Vector::Zero(2)}, {5}};
  auto cov = CovarianceState::identity(s.variance_flags());
  Rng rng(1);
  const Rng untouched = rng;
  std::vector<double> probs(5, 1.0);
  resample_latents(lat, ds, s, mix, cov, probs, 1.0, rng);
  CHECK((lat.z.array() == before.array()).all());
  CHECK(rng == untouched);
}

TEST_CASE("nominal truncation regions") {
  const std::vector<double> block{0.4, -0.2, 1.1};
  auto r = nominal_region(block, 3, 1);
  CHECK(r.lower == -inf);
  CHECK(r.upper < 0.0);
  r = nominal_region(block, 2, 0);
  CHECK(r.lower == -inf);
  CHECK(r.upper == std::nextafter(1.1, -inf));
  r = nominal_region(block, 2, 2);
  CHECK(r.lower == 0.4);
  CHECK(r.upper == inf);
  const std::vector<double> negative{-0.4, -0.2};
  CHECK(nominal_region(negative, 1, 1).lower == 0.0);
}
