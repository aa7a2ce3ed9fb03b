#pragma once

#include "mixscale/schema.hpp"
#include "mixscale/types.hpp"

#include <string>
#include <vector>

namespace mixscale {

using Partition = std::vector<int>;

/// Number of distinct labels (labels need not be contiguous).
std::size_t cluster_count(const Partition& partition);

/// Co-clustering frequencies over the stored partitions, accumulated one
/// partition at a time. Symmetric with unit diagonal.
Matrix similarity(const std::vector<Partition>& partitions);

/// Adds one partition's adjacency into a running sum (for pooling chains).
void accumulate_adjacency(Matrix& sum, const Partition& partition);

/// sum_ij (A_ij - sim_ij)^2 for the adjacency A of `partition`.
double squared_distance(const Partition& partition, const Matrix& sim);

struct Selection {
  std::size_t index;   // position in the stored list
  Partition partition;
  double distance;     // squared distance to the similarity matrix
  double hm = 0.0;     // filled by select_min_hm
};

/// Stored partition closest to `sim` in squared distance; earliest wins ties.
Selection dahl_select(const std::vector<Partition>& partitions, const Matrix& sim);

/// Stored partition with the smallest HM; earliest wins ties.
Selection select_min_hm(const std::vector<Partition>& partitions, const Matrix& sim,
                        const Matrix& expanded, const Vector& weights);

struct ExpandedVariables {
  Matrix values;                     // n x p*
  std::vector<std::string> columns;  // names of the p* columns
};

/// y* for the heterogeneity measure: continuous columns standardised with
/// the unweighted mean and sample SD, binary columns passed through,
/// categorical columns with more than two levels as one indicator per level.
ExpandedVariables expand_variables(const Dataset& ds, const Schema& schema);

/// Weighted within-cluster variance total
/// HM = sum_k n_k sum_j [ sum_{i in C_k} w_i^(k) y*_ij^2 - (sum_{i in C_k} w_i^(k) y*_ij)^2 ].
double hm_measure(const Partition& partition, const Matrix& expanded, const Vector& weights);

/// Weighted group profile table: one row per cluster plus a population row.
struct SummaryTable {
  std::vector<std::string> columns;  // excludes the leading group label
  std::vector<std::string> groups;   // "1".."r", then "population"
  Matrix values;                     // (r + 1) x columns
};

/// Per cluster: weighted size share (%), record count, weighted mean of each
/// continuous and ordinal variable (level index), weighted share (%) of every
/// nominal category. The population row carries the overall weighted means
/// and the total weight in place of the size share.
SummaryTable cluster_summary(const Partition& partition, const Dataset& ds, const Schema& schema);

}  // namespace mixscale
