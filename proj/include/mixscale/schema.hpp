#pragma once

#include "mixscale/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mixscale {

enum class VariableKind { continuous, ordinal, nominal };

enum class TransformKind { identity, log_shift };

/// Normalising transform for a continuous variable. For log-shift the
/// realised shift is the `shift_quantile` quantile of the observed column,
/// filled in by resolve_transforms().
struct TransformSpec {
  TransformKind kind = TransformKind::identity;
  double shift_quantile = 0.01;
  std::optional<double> shift;
};

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  std::vector<std::string> levels;  // ordinal and nominal only
  TransformSpec transform;          // continuous only

  /// K for ordinal, L for nominal, 0 for continuous.
  int num_levels() const { return static_cast<int>(levels.size()); }

  static VariableSpec continuous(std::string name, TransformSpec transform = {});
  static VariableSpec ordinal(std::string name, int num_levels);
  static VariableSpec ordinal(std::string name, std::vector<std::string> levels);
  static VariableSpec nominal(std::string name, int num_levels);
  static VariableSpec nominal(std::string name, std::vector<std::string> levels);
};

/// Layout of the observed variables in canonical order (continuous, then
/// ordinal, then nominal) and of the q-dimensional latent vector.
class Schema {
 public:
  const std::vector<VariableSpec>& variables() const { return vars_; }
  const VariableSpec& variable(std::size_t j) const { return vars_.at(j); }

  std::size_t p() const { return vars_.size(); }
  std::size_t q() const { return q_; }
  std::size_t num_continuous() const { return c_; }
  std::size_t num_ordinal() const { return o_; }
  std::size_t num_nominal() const { return m_; }

  /// First latent coordinate of canonical variable j, and how many it uses.
  std::size_t latent_offset(std::size_t j) const { return offset_.at(j); }
  std::size_t latent_width(std::size_t j) const;

  /// True exactly for the latent coordinates of continuous variables.
  bool variance_free(std::size_t latent) const { return free_.at(latent); }
  const std::vector<bool>& variance_flags() const { return free_; }

  /// Cut-offs gamma_0..gamma_K of ordinal variable j (empty otherwise).
  const std::vector<double>& cutoffs(std::size_t j) const { return cutoffs_.at(j); }

  /// Canonical index of the variable given at position `input` in the
  /// original spec list, and the inverse map.
  std::size_t canonical_index(std::size_t input) const { return to_canonical_.at(input); }
  std::size_t input_index(std::size_t canonical) const { return to_input_.at(canonical); }

  /// Canonical index of the variable called `name`, if any.
  std::optional<std::size_t> find(const std::string& name) const;

  /// Replaces the transform of continuous variable j (e.g. with a realised shift).
  void set_transform(std::size_t j, TransformSpec transform);

 private:
  friend Schema build_schema(std::vector<VariableSpec> specs);

  std::vector<VariableSpec> vars_;
  std::vector<std::size_t> offset_;
  std::vector<bool> free_;
  std::vector<std::vector<double>> cutoffs_;
  std::vector<std::size_t> to_canonical_;
  std::vector<std::size_t> to_input_;
  std::size_t q_ = 0, c_ = 0, o_ = 0, m_ = 0;
};

Schema build_schema(std::vector<VariableSpec> specs);

/// (-inf, 0, 4, 8, ..., 4(K-2), +inf).
std::vector<double> default_cutoffs(int num_levels);

/// Observed records in canonical variable order. Categorical values are
/// 0-based level indices stored as doubles.
struct Dataset {
  Matrix y;                 // n x p
  Vector weights;           // w_i
  Vector probabilities;     // pi_i = 1 / w_i

  std::size_t n() const { return static_cast<std::size_t>(y.rows()); }
  double mean_weight() const { return weights.mean(); }
};

/// Builds a dataset from canonical-order values and expansion weights.
/// Does not validate; see validate_dataset().
Dataset make_dataset(Matrix y, Vector weights);
Dataset make_dataset(Matrix y);

struct ValidationIssue {
  std::size_t record;
  std::size_t variable;  // canonical index; p() for record-level issues
  std::string reason;
};

std::vector<ValidationIssue> validate_dataset(const Dataset& ds, const Schema& schema);

/// Realises the shift of every log-shift transform from the observed column.
/// Throws InputError if a shifted value would be nonpositive.
Schema resolve_transforms(Schema schema, const Dataset& ds);

/// Type-7 (linear interpolation) sample quantile.
double sample_quantile(std::vector<double> values, double prob);

const char* to_string(VariableKind kind);

}  // namespace mixscale
