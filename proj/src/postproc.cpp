#include "mixscale/postproc.hpp"

#include "mixscale/warnings.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace mixscale {
namespace {

// Records grouped by label, labels in increasing order.
std::vector<std::vector<std::size_t>> groups_of(const Partition& partition) {
  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < partition.size(); ++i) by_label[partition[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(by_label.size());
  for (auto& [label, members] : by_label) out.push_back(std::move(members));
  return out;
}

// Strictly better beyond rounding noise, so exact ties go to the earlier draw.
bool improves(double candidate, double best) { return candidate < best - 1e-12 * std::max(1.0, std::abs(best)); }

}  // namespace

std::size_t cluster_count(const Partition& partition) {
  return std::set<int>(partition.begin(), partition.end()).size();
}

void accumulate_adjacency(Matrix& sum, const Partition& partition) {
  const auto n = static_cast<Eigen::Index>(partition.size());
  if (sum.rows() != n || sum.cols() != n) throw InputError("partition length differs from similarity size");
  for (const auto& members : groups_of(partition))
    for (std::size_t a : members)
      for (std::size_t b : members) sum(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += 1.0;
}

Matrix similarity(const std::vector<Partition>& partitions) {
  if (partitions.empty()) throw InputError("similarity needs at least one partition");
  const auto n = static_cast<Eigen::Index>(partitions.front().size());
  Matrix sum = Matrix::Zero(n, n);
  for (const auto& p : partitions) {
    if (static_cast<Eigen::Index>(p.size()) != n) throw InputError("partitions differ in length");
    accumulate_adjacency(sum, p);
  }
  return sum / static_cast<double>(partitions.size());
}

double squared_distance(const Partition& partition, const Matrix& sim) {
  const std::size_t n = partition.size();
  if (static_cast<std::size_t>(sim.rows()) != n) throw InputError("partition length differs from similarity size");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double a = partition[i] == partition[j] ? 1.0 : 0.0;
      const double d = a - sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      total += d * d;
    }
  return total;
}

Selection dahl_select(const std::vector<Partition>& partitions, const Matrix& sim) {
  if (partitions.empty()) throw InputError("no partitions to select from");
  Selection best{0, partitions[0], squared_distance(partitions[0], sim)};
  for (std::size_t k = 1; k < partitions.size(); ++k) {
    const double d = squared_distance(partitions[k], sim);
    if (improves(d, best.distance)) best = {k, partitions[k], d};
  }
  return best;
}

Selection select_min_hm(const std::vector<Partition>& partitions, const Matrix& sim,
                        const Matrix& expanded, const Vector& weights) {
  if (partitions.empty()) throw InputError("no partitions to select from");
  std::size_t best = 0;
  double best_hm = hm_measure(partitions[0], expanded, weights);
  for (std::size_t k = 1; k < partitions.size(); ++k) {
    const double hm = hm_measure(partitions[k], expanded, weights);
    if (improves(hm, best_hm)) {
      best = k;
      best_hm = hm;
    }
  }
  return {best, partitions[best], squared_distance(partitions[best], sim), best_hm};
}

ExpandedVariables expand_variables(const Dataset& ds, const Schema& schema) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  std::vector<Vector> cols;
  ExpandedVariables out;
  for (std::size_t in = 0; in < schema.p(); ++in) {
    const std::size_t j = schema.canonical_index(in);
    const auto& var = schema.variable(j);
    const Vector y = ds.y.col(static_cast<Eigen::Index>(j));
    if (var.kind == VariableKind::continuous) {
      const double mean = y.mean();
      const double var_hat = n > 1 ? (y.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
      if (!(var_hat > 0.0)) {
        warn("expand_variables: '" + var.name + "' has zero variance; emitted as zeros");
        cols.push_back(Vector::Zero(n));
      } else {
        cols.push_back((y.array() - mean) / std::sqrt(var_hat));
      }
      out.columns.push_back(var.name);
    } else if (var.num_levels() == 2) {
      cols.push_back(y);
      out.columns.push_back(var.name);
    } else {
      for (int k = 0; k < var.num_levels(); ++k) {
        cols.push_back((y.array() == static_cast<double>(k)).cast<double>());
        out.columns.push_back(var.name + "=" + var.levels[static_cast<std::size_t>(k)]);
      }
    }
  }
  out.values.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.values.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

double hm_measure(const Partition& partition, const Matrix& expanded, const Vector& weights) {
  if (static_cast<Eigen::Index>(partition.size()) != expanded.rows() || weights.size() != expanded.rows())
    throw InputError("hm_measure: dimension mismatch");
  const auto pstar = expanded.cols();
  double hm = 0.0;
  for (const auto& members : groups_of(partition)) {
    double total_w = 0.0;
    for (std::size_t i : members) total_w += weights(static_cast<Eigen::Index>(i));
    double spread = 0.0;
    for (Eigen::Index j = 0; j < pstar; ++j) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i : members) {
        const double w = weights(static_cast<Eigen::Index>(i)) / total_w;
        const double v = expanded(static_cast<Eigen::Index>(i), j);
        m1 += w * v;
        m2 += w * v * v;
      }
      spread += m2 - m1 * m1;
    }
    hm += static_cast<double>(members.size()) * spread;
  }
  // Rounding can leave a tiny negative total for near-constant clusters.
  return std::max(hm, 0.0);
}

SummaryTable cluster_summary(const Partition& partition, const Dataset& ds, const Schema& schema) {
  if (partition.size() != ds.n()) throw InputError("cluster_summary: partition length differs from n");
  SummaryTable table;
  table.columns = {"size_pct", "records", "total_weight"};

  struct Source {
    std::size_t var;
    int level;  // -1 for a mean column
  };
  std::vector<Source> sources;
  for (std::size_t in = 0; in < schema.p(); ++in) {
    const std::size_t j = schema.canonical_index(in);
    const auto& var = schema.variable(j);
    if (var.kind == VariableKind::nominal) {
      for (int k = 0; k < var.num_levels(); ++k) {
        sources.push_back({j, k});
        table.columns.push_back(var.name + "=" + var.levels[static_cast<std::size_t>(k)]);
      }
    } else {
      sources.push_back({j, -1});
      table.columns.push_back(var.name);
    }
  }

  auto groups = groups_of(partition);
  std::vector<std::size_t> everyone(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) everyone[i] = i;
  const double grand_weight = ds.weights.sum();

  table.values.resize(static_cast<Eigen::Index>(groups.size() + 1), static_cast<Eigen::Index>(table.columns.size()));
  auto fill = [&](Eigen::Index row, const std::vector<std::size_t>& members) {
    double total_w = 0.0;
    for (std::size_t i : members) total_w += ds.weights(static_cast<Eigen::Index>(i));
    table.values(row, 0) = 100.0 * total_w / grand_weight;
    table.values(row, 1) = static_cast<double>(members.size());
    table.values(row, 2) = total_w;
    for (std::size_t c = 0; c < sources.size(); ++c) {
      double acc = 0.0;
      for (std::size_t i : members) {
        const double y = ds.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sources[c].var));
        const double v = sources[c].level < 0 ? y : (y == sources[c].level ? 100.0 : 0.0);
        acc += ds.weights(static_cast<Eigen::Index>(i)) * v;
      }
      table.values(row, static_cast<Eigen::Index>(c + 3)) = acc / total_w;
    }
  };
  for (std::size_t k = 0; k < groups.size(); ++k) {
    fill(static_cast<Eigen::Index>(k), groups[k]);
    table.groups.push_back(std::to_string(k + 1));
  }
  fill(static_cast<Eigen::Index>(groups.size()), everyone);
  table.groups.push_back("population");
  return table;
}

}  // namespace mixscale
