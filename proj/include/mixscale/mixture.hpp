#pragma once

#include "mixscale/types.hpp"

#include <vector>

namespace mixscale {

/// Cluster allocation of the records and the distinct location values.
/// Labels are always contiguous in 0..r-1.
struct MixtureState {
  std::vector<int> labels;
  std::vector<Vector> centers;
  std::vector<int> counts;

  std::size_t r() const { return centers.size(); }
  std::size_t n() const { return labels.size(); }
  const Vector& mean_of(std::size_t i) const { return centers[static_cast<std::size_t>(labels[i])]; }
};

/// Throws StateError if counts, labels and centres disagree.
void check_mixture(const MixtureState& mixture);

/// Relabels clusters in order of first appearance among the records.
void canonicalize_labels(MixtureState& mixture);

/// First-appearance relabelling of a bare label vector.
std::vector<int> canonical_labels(const std::vector<int>& labels);

}  // namespace mixscale
