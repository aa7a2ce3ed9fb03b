#pragma once

#include "mixscale/sampler.hpp"
#include "mixscale/schema.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mixscale {

enum class Scenario { I, II, III, IV, V, VI };

std::string to_string(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& text);

struct ScenarioSpec {
  Scenario scenario = Scenario::I;
  std::size_t n = 0;  // 0 selects the default: 100 for I-III, 200 for IV-VI
  std::uint64_t seed = 1;
  double interval_width = 0.25;

  std::size_t resolved_n() const;
};

/// Generated data plus what the sampler needs to treat it as intended.
struct SimulatedData {
  Schema schema;
  Dataset dataset;
  std::vector<int> true_labels;  // study 1: generating component; study 2: empty
  Matrix latent;                 // study 1: the n x 3 latent triples
  WeightMode weight_mode = WeightMode::ignore;
  double kappa = 1.0;
};

/// Scenarios I-III: three-component trivariate Gaussian latents, observed
/// directly (I), as two binaries (II), or as two binaries plus a 3-level
/// ordinal and a pure-noise continuous column (III).
SimulatedData gen_study1(const ScenarioSpec& spec);

/// The five-component univariate density behind scenarios IV-VI.
struct FiveNormalMixture {
  static constexpr std::array<double, 5> weights{0.1, 0.05, 0.3, 0.25, 0.3};
  static constexpr std::array<double, 5> means{10.0, 17.0, 20.0, 23.0, 32.0};
  static constexpr std::array<double, 5> variances{4.0, 0.49, 1.0, 1.21, 25.0};

  static double density(double z);
  static double cdf(double z);
};

/// Scenarios IV-VI: one draw uniformly from each of n consecutive intervals
/// of width 0.25 starting at 0, with weights proportional to the interval
/// probabilities under FiveNormalMixture (normalised to mean 1).
SimulatedData gen_study2(const ScenarioSpec& spec);

/// Interval probabilities p_i of study 2.
std::vector<double> study2_interval_probabilities(std::size_t n, double width);

SimulatedData generate(const ScenarioSpec& spec);

}  // namespace mixscale
