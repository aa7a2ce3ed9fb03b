#include "mixscale/simgen.hpp"

#include "mixscale/random.hpp"

#include <cmath>
#include <numbers>

namespace mixscale {
namespace {

constexpr std::array<std::array<double, 3>, 3> kStudy1Means{{{2, 2, 5}, {6, 4, 2}, {1, 6, 2}}};
constexpr std::array<std::array<double, 3>, 3> kStudy1Variances{{{1, 1, 1}, {0.1, 2, 0.1}, {2, 0.1, 0.1}}};

}  // namespace

std::string to_string(Scenario s) {
  static const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
  return names[static_cast<int>(s)];
}

std::optional<Scenario> parse_scenario(const std::string& text) {
  for (int k = 0; k < 6; ++k)
    if (to_string(static_cast<Scenario>(k)) == text) return static_cast<Scenario>(k);
  return std::nullopt;
}

std::size_t ScenarioSpec::resolved_n() const {
  if (n > 0) return n;
  return scenario <= Scenario::III ? 100 : 200;
}

SimulatedData gen_study1(const ScenarioSpec& spec) {
  if (spec.scenario > Scenario::III) throw InputError("gen_study1 handles scenarios I-III");
  const std::size_t n = spec.resolved_n();
  Rng rng(spec.seed);

  SimulatedData out;
  out.latent.resize(static_cast<Eigen::Index>(n), 3);
  out.true_labels.resize(n);
  std::uniform_int_distribution<int> component(0, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = component(rng);
    out.true_labels[i] = k;
    for (int d = 0; d < 3; ++d)
      out.latent(static_cast<Eigen::Index>(i), d) =
          kStudy1Means[k][d] + std::sqrt(kStudy1Variances[k][d]) * draw_std_normal(rng);
  }

  const auto rows = static_cast<Eigen::Index>(n);
  const auto& z = out.latent;
  std::vector<VariableSpec> specs;
  Matrix y_input;  // columns in the order of `specs`
  switch (spec.scenario) {
    case Scenario::I:
      specs = {VariableSpec::continuous("y1"), VariableSpec::continuous("y2"), VariableSpec::continuous("y3")};
      y_input = z;
      break;
    case Scenario::II:
      specs = {VariableSpec::ordinal("y1", 2), VariableSpec::ordinal("y3", 2)};
      y_input.resize(rows, 2);
      for (Eigen::Index i = 0; i < rows; ++i) {
        y_input(i, 0) = z(i, 0) > 5.0 ? 1.0 : 0.0;
        y_input(i, 1) = z(i, 2) > 3.0 ? 1.0 : 0.0;
      }
      break;
    default: {
      specs = {VariableSpec::ordinal("y1", 2), VariableSpec::ordinal("y2", 3), VariableSpec::ordinal("y3", 2),
               VariableSpec::continuous("y4")};
      y_input.resize(rows, 4);
      for (Eigen::Index i = 0; i < rows; ++i) {
        y_input(i, 0) = z(i, 0) > 5.0 ? 1.0 : 0.0;
        y_input(i, 1) = (z(i, 1) > 4.0 && z(i, 1) <= 5.0 ? 1.0 : 0.0) + (z(i, 1) > 5.0 ? 2.0 : 0.0);
        y_input(i, 2) = z(i, 2) > 3.0 ? 1.0 : 0.0;
      }
      for (Eigen::Index i = 0; i < rows; ++i) y_input(i, 3) = draw_std_normal(rng);
      break;
    }
  }

  out.schema = build_schema(specs);
  Matrix y(rows, static_cast<Eigen::Index>(specs.size()));
  for (std::size_t in = 0; in < specs.size(); ++in)
    y.col(static_cast<Eigen::Index>(out.schema.canonical_index(in))) = y_input.col(static_cast<Eigen::Index>(in));
  out.dataset = make_dataset(std::move(y));
  out.weight_mode = WeightMode::ignore;
  out.kappa = 1.0;
  return out;
}

double FiveNormalMixture::density(double z) {
  double f = 0.0;
  for (std::size_t k = 0; k < 5; ++k) {
    const double d = z - means[k];
    f += weights[k] * std::exp(-0.5 * d * d / variances[k]) / std::sqrt(2.0 * std::numbers::pi * variances[k]);
  }
  return f;
}

double FiveNormalMixture::cdf(double z) {
  double f = 0.0;
  for (std::size_t k = 0; k < 5; ++k) f += weights[k] * normal_cdf((z - means[k]) / std::sqrt(variances[k]));
  return f;
}

std::vector<double> study2_interval_probabilities(std::size_t n, double width) {
  std::vector<double> p(n);
  double previous = FiveNormalMixture::cdf(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double next = FiveNormalMixture::cdf(width * static_cast<double>(i + 1));
    p[i] = next - previous;
    previous = next;
  }
  return p;
}

SimulatedData gen_study2(const ScenarioSpec& spec) {
  if (spec.scenario < Scenario::IV) throw InputError("gen_study2 handles scenarios IV-VI");
  const std::size_t n = spec.resolved_n();
  Rng rng(spec.seed);
  const auto p = study2_interval_probabilities(n, spec.interval_width);
  double mean_p = 0.0;
  for (double v : p) mean_p += v;
  mean_p /= static_cast<double>(n);

  SimulatedData out;
  out.schema = build_schema({VariableSpec::continuous("y")});
  Matrix y(static_cast<Eigen::Index>(n), 1);
  Vector w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = spec.interval_width * static_cast<double>(i);
    const double hi = lo + spec.interval_width;
    // Un(lo, hi]: reflect the half-open [lo, hi) draw.
    y(static_cast<Eigen::Index>(i), 0) = hi - draw_uniform(0.0, spec.interval_width, rng);
    w(static_cast<Eigen::Index>(i)) = p[i] / mean_p;
  }
  out.dataset = make_dataset(std::move(y), std::move(w));
  const double mean_w = out.dataset.mean_weight();
  switch (spec.scenario) {
    case Scenario::IV:
      out.weight_mode = WeightMode::ignore;
      out.kappa = 1.0;
      break;
    case Scenario::V:
      out.weight_mode = WeightMode::design;
      out.kappa = mean_w / 15.0;
      break;
    default:
      out.weight_mode = WeightMode::design;
      out.kappa = mean_w / 25.0;
      break;
  }
  return out;
}

SimulatedData generate(const ScenarioSpec& spec) {
  return spec.scenario <= Scenario::III ? gen_study1(spec) : gen_study2(spec);
}

}  // namespace mixscale
