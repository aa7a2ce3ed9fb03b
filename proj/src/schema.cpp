#include "mixscale/schema.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace mixscale {
namespace {

std::vector<std::string> numbered_levels(int count) {
  if (count < 2) throw InputError("a categorical variable needs at least 2 levels");
  std::vector<std::string> levels;
  levels.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) levels.push_back(std::to_string(k));
  return levels;
}

int kind_rank(VariableKind kind) {
  switch (kind) {
    case VariableKind::continuous: return 0;
    case VariableKind::ordinal: return 1;
    case VariableKind::nominal: return 2;
  }
  return 3;
}

}  // namespace

VariableSpec VariableSpec::continuous(std::string name, TransformSpec transform) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::continuous;
  v.transform = transform;
  return v;
}

VariableSpec VariableSpec::ordinal(std::string name, int num_levels) {
  return ordinal(std::move(name), numbered_levels(num_levels));
}

VariableSpec VariableSpec::ordinal(std::string name, std::vector<std::string> levels) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::ordinal;
  v.levels = std::move(levels);
  return v;
}

VariableSpec VariableSpec::nominal(std::string name, int num_levels) {
  return nominal(std::move(name), numbered_levels(num_levels));
}

VariableSpec VariableSpec::nominal(std::string name, std::vector<std::string> levels) {
  VariableSpec v;
  v.name = std::move(name);
  v.kind = VariableKind::nominal;
  v.levels = std::move(levels);
  return v;
}

const char* to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::continuous: return "continuous";
    case VariableKind::ordinal: return "ordinal";
    case VariableKind::nominal: return "nominal";
  }
  return "?";
}

std::vector<double> default_cutoffs(int num_levels) {
  if (num_levels < 2) throw InputError("ordinal variables need K >= 2");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(num_levels) + 1);
  cuts.push_back(-inf);
  for (int k = 1; k < num_levels; ++k) cuts.push_back(4.0 * (k - 1));
  cuts.push_back(inf);
  return cuts;
}

std::size_t Schema::latent_width(std::size_t j) const {
  const auto& v = vars_.at(j);
  return v.kind == VariableKind::nominal ? static_cast<std::size_t>(v.num_levels() - 1) : 1;
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
  for (std::size_t j = 0; j < vars_.size(); ++j)
    if (vars_[j].name == name) return j;
  return std::nullopt;
}

void Schema::set_transform(std::size_t j, TransformSpec transform) {
  if (vars_.at(j).kind != VariableKind::continuous)
    throw InputError("transform set on non-continuous variable " + vars_[j].name);
  vars_[j].transform = transform;
}

Schema build_schema(std::vector<VariableSpec> specs) {
  if (specs.empty()) throw InputError("schema needs at least one variable");

  std::set<std::string> names;
  for (const auto& v : specs) {
    if (v.kind != VariableKind::continuous) {
      if (v.num_levels() < 2)
        throw InputError("variable '" + v.name + "' needs at least 2 levels");
      std::set<std::string> distinct(v.levels.begin(), v.levels.end());
      if (distinct.size() != v.levels.size())
        throw InputError("variable '" + v.name + "' has duplicate level labels");
    } else if (v.transform.kind == TransformKind::log_shift &&
               !(v.transform.shift_quantile > 0.0 && v.transform.shift_quantile < 1.0)) {
      throw InputError("shift quantile of '" + v.name + "' must lie in (0, 1)");
    }
    if (!v.name.empty() && !names.insert(v.name).second)
      throw InputError("duplicate variable name '" + v.name + "'");
  }

  std::vector<std::size_t> order(specs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    return kind_rank(specs[l].kind) < kind_rank(specs[r].kind);
  });

  Schema s;
  s.to_canonical_.resize(specs.size());
  s.to_input_ = order;
  for (std::size_t canon = 0; canon < order.size(); ++canon) {
    s.to_canonical_[order[canon]] = canon;
    s.vars_.push_back(std::move(specs[order[canon]]));
  }

  for (const auto& v : s.vars_) {
    s.offset_.push_back(s.q_);
    switch (v.kind) {
      case VariableKind::continuous:
        ++s.c_;
        s.q_ += 1;
        s.free_.push_back(true);
        s.cutoffs_.emplace_back();
        break;
      case VariableKind::ordinal:
        ++s.o_;
        s.q_ += 1;
        s.free_.push_back(false);
        s.cutoffs_.push_back(default_cutoffs(v.num_levels()));
        break;
      case VariableKind::nominal:
        ++s.m_;
        s.q_ += static_cast<std::size_t>(v.num_levels() - 1);
        for (int l = 0; l + 1 < v.num_levels(); ++l) s.free_.push_back(false);
        s.cutoffs_.emplace_back();
        break;
    }
  }
  return s;
}

Dataset make_dataset(Matrix y, Vector weights) {
  Dataset ds;
  ds.y = std::move(y);
  ds.weights = std::move(weights);
  ds.probabilities = ds.weights.cwiseInverse();
  return ds;
}

Dataset make_dataset(Matrix y) {
  Vector w = Vector::Ones(y.rows());
  return make_dataset(std::move(y), std::move(w));
}

std::vector<ValidationIssue> validate_dataset(const Dataset& ds, const Schema& schema) {
  std::vector<ValidationIssue> issues;
  const std::size_t p = schema.p();
  if (ds.n() == 0) {
    issues.push_back({0, p, "dataset has no records"});
    return issues;
  }
  if (static_cast<std::size_t>(ds.y.cols()) != p) {
    std::ostringstream msg;
    msg << "dataset has " << ds.y.cols() << " columns, schema declares " << p;
    issues.push_back({0, p, msg.str()});
    return issues;
  }
  if (static_cast<std::size_t>(ds.weights.size()) != ds.n() ||
      static_cast<std::size_t>(ds.probabilities.size()) != ds.n()) {
    issues.push_back({0, p, "weight vector length differs from record count"});
    return issues;
  }

  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double w = ds.weights(static_cast<Eigen::Index>(i));
    const double pi = ds.probabilities(static_cast<Eigen::Index>(i));
    if (!std::isfinite(w) || w <= 0.0) {
      issues.push_back({i, p, "nonpositive weight"});
    } else if (std::abs(w * pi - 1.0) > 1e-9) {
      issues.push_back({i, p, "weight and sampling probability are not reciprocal"});
    }

    for (std::size_t j = 0; j < p; ++j) {
      const double v = ds.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const auto& var = schema.variable(j);
      if (!std::isfinite(v)) {
        issues.push_back({i, j, "missing or non-finite value"});
        continue;
      }
      if (var.kind == VariableKind::continuous) continue;
      if (v != std::floor(v)) {
        issues.push_back({i, j, "non-integer category index"});
      } else if (v < 0 || v >= var.num_levels()) {
        std::ostringstream msg;
        msg << "category index " << v << " outside 0.." << var.num_levels() - 1;
        issues.push_back({i, j, msg.str()});
      }
    }
  }
  return issues;
}

double sample_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Schema resolve_transforms(Schema schema, const Dataset& ds) {
  for (std::size_t j = 0; j < schema.num_continuous(); ++j) {
    TransformSpec t = schema.variable(j).transform;
    if (t.kind != TransformKind::log_shift) continue;
    const auto col = ds.y.col(static_cast<Eigen::Index>(j));
    std::vector<double> values(col.begin(), col.end());
    const double shift = sample_quantile(values, t.shift_quantile);
    const double lowest = *std::min_element(values.begin(), values.end());
    if (!(lowest + shift > 0.0)) {
      std::ostringstream msg;
      msg << "log-shift of '" << schema.variable(j).name << "': min value " << lowest
          << " plus shift " << shift << " is not positive";
      throw InputError(msg.str());
    }
    t.shift = shift;
    schema.set_transform(j, t);
  }
  return schema;
}

}  // namespace mixscale
