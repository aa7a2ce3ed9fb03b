#include "mixscale/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mixscale {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

std::vector<std::string> latent_names(const Schema& schema) {
  std::vector<std::string> names(schema.q());
  for (std::size_t j = 0; j < schema.p(); ++j) {
    const auto& v = schema.variable(j);
    const std::size_t off = schema.latent_offset(j);
    if (v.kind == VariableKind::nominal)
      for (std::size_t s = 0; s < schema.latent_width(j); ++s) names[off + s] = v.name + "=" + v.levels[s];
    else
      names[off] = v.name;
  }
  return names;
}

double require_number(const ConfigMap::value_type& kv) {
  auto v = parse_double(kv.second);
  if (!v || !std::isfinite(*v)) throw InputError("config key '" + kv.first + "': not a number: " + kv.second);
  return *v;
}

std::size_t require_count(const ConfigMap::value_type& kv) {
  auto v = parse_integer(kv.second);
  if (!v || *v < 0) throw InputError("config key '" + kv.first + "': not a nonnegative integer: " + kv.second);
  return static_cast<std::size_t>(*v);
}

bool require_bool(const ConfigMap::value_type& kv) {
  const std::string v = trim(kv.second);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config key '" + kv.first + "': expected true or false, got " + kv.second);
}

}  // namespace

// ---------------------------------------------------------------- schema

SchemaFile parse_schema_file(std::istream& in) {
  SchemaFile out;
  std::vector<VariableSpec> specs;
  std::vector<std::map<std::string, std::string>> blocks;
  std::string line;
  std::size_t lineno = 0;
  bool in_block = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "[variable]") {
      blocks.emplace_back();
      in_block = true;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError("schema line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (!in_block) {
      if (key == "weight_column")
        out.weight_column = value;
      else
        throw DataError("schema line " + std::to_string(lineno) + ": unknown top-level key '" + key + "'");
      continue;
    }
    if (!blocks.back().emplace(key, value).second)
      throw DataError("schema line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  if (blocks.empty()) throw DataError("schema declares no variables");

  for (const auto& b : blocks) {
    auto get = [&](const std::string& k) -> std::optional<std::string> {
      auto it = b.find(k);
      return it == b.end() ? std::nullopt : std::optional(it->second);
    };
    for (const auto& [k, v] : b)
      if (k != "name" && k != "kind" && k != "levels" && k != "transform" && k != "shift_quantile")
        throw DataError("schema: unknown variable key '" + k + "'");
    const auto name = get("name");
    const auto kind = get("kind");
    if (!name || name->empty()) throw DataError("schema: variable without a name");
    if (!kind) throw DataError("schema: variable '" + *name + "' has no kind");
    if (*kind == "continuous") {
      if (get("levels")) throw DataError("schema: continuous variable '" + *name + "' cannot have levels");
      TransformSpec t;
      const std::string tr = get("transform").value_or("identity");
      if (tr == "log_shift")
        t.kind = TransformKind::log_shift;
      else if (tr != "identity")
        throw DataError("schema: unknown transform '" + tr + "' for '" + *name + "'");
      if (auto qs = get("shift_quantile")) {
        auto v = parse_double(*qs);
        if (!v || *v < 0.0 || *v > 1.0) throw DataError("schema: bad shift_quantile for '" + *name + "'");
        t.shift_quantile = *v;
      }
      specs.push_back(VariableSpec::continuous(*name, t));
    } else if (*kind == "ordinal" || *kind == "nominal" || *kind == "binary") {
      if (get("transform") || get("shift_quantile"))
        throw DataError("schema: transform given for categorical variable '" + *name + "'");
      std::vector<std::string> levels;
      if (auto lv = get("levels")) levels = split_list(*lv);
      if (*kind == "binary") {
        if (levels.empty()) levels = {"0", "1"};
        if (levels.size() != 2) throw DataError("schema: binary variable '" + *name + "' needs 2 levels");
      }
      if (levels.size() < 2) throw DataError("schema: variable '" + *name + "' needs at least 2 levels");
      try {
        specs.push_back(*kind == "nominal" ? VariableSpec::nominal(*name, levels)
                                           : VariableSpec::ordinal(*name, levels));
      } catch (const InputError& e) {
        throw DataError(std::string("schema: ") + e.what());
      }
    } else {
      throw DataError("schema: unknown kind '" + *kind + "' for '" + *name + "'");
    }
  }
  try {
    out.schema = build_schema(std::move(specs));
  } catch (const DataError&) {
    throw;
  } catch (const InputError& e) {
    throw DataError(std::string("schema: ") + e.what());
  }
  if (out.weight_column && out.schema.find(*out.weight_column))
    throw DataError("schema: weight column '" + *out.weight_column + "' is also declared as a variable");
  return out;
}

SchemaFile read_schema_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open schema file " + path.string());
  return parse_schema_file(f);
}

void write_schema_file(std::ostream& out, const Schema& schema, const std::optional<std::string>& weight_column) {
  if (weight_column) out << "weight_column = " << *weight_column << "\n";
  for (std::size_t in = 0; in < schema.p(); ++in) {
    const auto& v = schema.variable(schema.canonical_index(in));
    out << "\n[variable]\nname = " << v.name << "\nkind = " << to_string(v.kind) << "\n";
    if (v.kind == VariableKind::continuous) {
      if (v.transform.kind == TransformKind::log_shift)
        out << "transform = log_shift\nshift_quantile = " << format_double(v.transform.shift_quantile) << "\n";
    } else {
      out << "levels = ";
      for (std::size_t k = 0; k < v.levels.size(); ++k) out << (k ? "," : "") << v.levels[k];
      out << "\n";
    }
  }
}

// ---------------------------------------------------------------- csv

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  auto end_row = [&] {
    row.push_back(trim(field));
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(trim(field));
      field.clear();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any) end_row();
  return rows;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

Dataset read_dataset(std::istream& in, const SchemaFile& file) {
  const Schema& schema = file.schema;
  const auto rows = parse_csv(in);
  if (rows.empty()) throw DataError("data file is empty");
  const auto& header = rows[0];
  std::map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k)
    if (!column.emplace(header[k], k).second) throw DataError("data: duplicate column '" + header[k] + "'");

  std::vector<std::size_t> source(schema.p());
  for (std::size_t j = 0; j < schema.p(); ++j) {
    auto it = column.find(schema.variable(j).name);
    if (it == column.end()) throw DataError("data: missing column '" + schema.variable(j).name + "'");
    source[j] = it->second;
  }
  std::optional<std::size_t> wcol;
  if (file.weight_column) {
    auto it = column.find(*file.weight_column);
    if (it == column.end()) throw DataError("data: missing weight column '" + *file.weight_column + "'");
    wcol = it->second;
  }

  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  if (n == 0) throw DataError("data file has no records");
  Matrix y(n, static_cast<Eigen::Index>(schema.p()));
  Vector w = Vector::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    const std::string where = "data row " + std::to_string(i + 1);
    if (row.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(row.size()));
    for (std::size_t j = 0; j < schema.p(); ++j) {
      const auto& var = schema.variable(j);
      const std::string& cell = row[source[j]];
      double value;
      if (var.kind == VariableKind::continuous) {
        auto v = parse_double(cell);
        if (!v || !std::isfinite(*v)) throw DataError(where + ", column '" + var.name + "': not a finite number: '" + cell + "'");
        value = *v;
      } else {
        auto lv = std::find(var.levels.begin(), var.levels.end(), cell);
        if (lv != var.levels.end()) {
          value = static_cast<double>(lv - var.levels.begin());
        } else {
          auto k = parse_integer(cell);
          if (!k || *k < 0 || *k >= var.num_levels())
            throw DataError(where + ", column '" + var.name + "': unknown category '" + cell + "'");
          value = static_cast<double>(*k);
        }
      }
      y(i, static_cast<Eigen::Index>(j)) = value;
    }
    if (wcol) {
      auto v = parse_double(row[*wcol]);
      if (!v || !std::isfinite(*v) || *v <= 0.0)
        throw DataError(where + ": weight must be a positive number, got '" + row[*wcol] + "'");
      w(i) = *v;
    }
  }
  Dataset ds = make_dataset(std::move(y), std::move(w));
  require_valid(ds, schema);
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path, const SchemaFile& file) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open data file " + path.string());
  return read_dataset(f, file);
}

void write_dataset(std::ostream& out, const Dataset& ds, const Schema& schema,
                   const std::optional<std::string>& weight_column) {
  for (std::size_t in = 0; in < schema.p(); ++in)
    out << (in ? "," : "") << csv_field(schema.variable(schema.canonical_index(in)).name);
  if (weight_column) out << "," << csv_field(*weight_column);
  out << "\n";
  for (Eigen::Index i = 0; i < ds.y.rows(); ++i) {
    for (std::size_t in = 0; in < schema.p(); ++in) {
      const std::size_t j = schema.canonical_index(in);
      const auto& var = schema.variable(j);
      const double v = ds.y(i, static_cast<Eigen::Index>(j));
      out << (in ? "," : "");
      if (var.kind == VariableKind::continuous)
        out << format_double(v);
      else
        out << csv_field(var.levels.at(static_cast<std::size_t>(v)));
    }
    if (weight_column) out << "," << format_double(ds.weights(i));
    out << "\n";
  }
}

void require_valid(const Dataset& ds, const Schema& schema) {
  const auto issues = validate_dataset(ds, schema);
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << issues.size() << " data validation issue(s)";
  for (std::size_t k = 0; k < std::min<std::size_t>(issues.size(), 5); ++k) {
    const auto& is = issues[k];
    msg << "; record " << is.record + 1;
    if (is.variable < schema.p()) msg << ", '" << schema.variable(is.variable).name << "'";
    msg << ": " << is.reason;
  }
  throw DataError(msg.str());
}

// ---------------------------------------------------------------- config

KappaRule parse_kappa_rule(const std::string& text) {
  const std::string t = trim(text);
  auto fail = [&]() -> KappaRule { throw InputError("bad kappa rule '" + text + "'"); };
  KappaRule rule;
  if (t == "wbar") return {true, 1.0};
  if (auto v = parse_double(t)) {
    rule = {false, *v};
  } else if (t.size() > 5 && t.compare(t.size() - 5, 5, "*wbar") == 0) {
    auto v = parse_double(t.substr(0, t.size() - 5));
    if (!v) return fail();
    rule = {true, *v};
  } else if (t.rfind("wbar*", 0) == 0) {
    auto v = parse_double(t.substr(5));
    if (!v) return fail();
    rule = {true, *v};
  } else if (t.rfind("wbar/", 0) == 0) {
    auto v = parse_double(t.substr(5));
    if (!v || *v == 0.0) return fail();
    rule = {true, 1.0 / *v};
  } else {
    return fail();
  }
  if (!(rule.value > 0.0) || !std::isfinite(rule.value)) throw InputError("kappa must be positive: '" + text + "'");
  return rule;
}

std::string to_string(const KappaRule& rule) {
  return rule.relative ? format_double(rule.value) + "*wbar" : format_double(rule.value);
}

std::string to_string(WeightMode mode) { return mode == WeightMode::ignore ? "ignore" : "design"; }
std::string to_string(SelectionMode mode) { return mode == SelectionMode::dahl ? "dahl" : "min-hm"; }

ConfigMap parse_config_map(std::istream& in) {
  ConfigMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (!out.emplace(key, trim(t.substr(eq + 1))).second)
      throw InputError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return out;
}

void apply_preset(PriorSettings& priors, const std::string& preset) {
  if (preset == "A") {
    priors.variance = {0.1, 0.1};
    priors.base = {0.1, 0.1};
  } else if (preset == "B") {
    priors.variance = {1.0, 1.0};
    priors.base = {1.0, 1.0};
  } else if (preset == "C") {
    priors.variance = {2.1, 30.0};
    priors.base = {2.1, 30.0};
  } else {
    throw InputError("unknown prior preset '" + preset + "' (expected A, B, C or custom)");
  }
}

void apply_config(RunConfig& c, const ConfigMap& entries) {
  static const char* custom_keys[] = {"d0_z", "d1_z", "d0_mu", "d1_mu"};
  if (auto it = entries.find("preset"); it != entries.end()) {
    c.preset = trim(it->second);
    if (c.preset == "custom") {
      for (const char* k : custom_keys)
        if (!entries.count(k)) throw InputError(std::string("preset custom requires '") + k + "'");
    } else {
      apply_preset(c.priors, c.preset);
    }
  }
  for (const auto& kv : entries) {
    const std::string& k = kv.first;
    const std::string v = trim(kv.second);
    if (k == "preset") continue;
    if (k == "data") c.data_path = v;
    else if (k == "schema") c.schema_path = v;
    else if (k == "output") c.output_dir = v;
    else if (k == "iterations") c.iterations = require_count(kv);
    else if (k == "burn_in") c.burn_in = require_count(kv);
    else if (k == "thinning") c.thinning = require_count(kv);
    else if (k == "seed") {
      auto s = parse_integer(v);
      if (!s || *s < 0) throw InputError("config key 'seed': not a nonnegative integer: " + v);
      c.seed = static_cast<std::uint64_t>(*s);
    }
    else if (k == "chains") c.chains = require_count(kv);
    else if (k == "threads") c.threads = require_count(kv);
    else if (k == "weight_mode") {
      if (v == "ignore") c.weight_mode = WeightMode::ignore;
      else if (v == "design") c.weight_mode = WeightMode::design;
      else throw InputError("weight_mode must be ignore or design, got '" + v + "'");
    }
    else if (k == "kappa") c.kappa = parse_kappa_rule(v);
    else if (k == "d0_z" || k == "d1_z" || k == "d0_mu" || k == "d1_mu") {
      if (c.preset != "custom")
        throw InputError("'" + k + "' is only allowed with preset = custom");
      const double x = require_number(kv);
      if (k == "d0_z") c.priors.variance.shape = x;
      else if (k == "d1_z") c.priors.variance.scale = x;
      else if (k == "d0_mu") c.priors.base.shape = x;
      else c.priors.base.scale = x;
    }
    else if (k == "alpha") c.priors.pd.alpha = require_number(kv);
    else if (k == "d0_a") c.priors.pd.a_shape0 = require_number(kv);
    else if (k == "d1_a") c.priors.pd.a_shape1 = require_number(kv);
    else if (k == "d0_b") c.priors.pd.b_shape = require_number(kv);
    else if (k == "d1_b") c.priors.pd.b_rate = require_number(kv);
    else if (k == "phi_b") c.priors.pd.phi_b = require_number(kv);
    else if (k == "phi_sigma") c.tuning.phi_sigma = require_number(kv);
    else if (k == "phi_rho") c.tuning.phi_rho = require_number(kv);
    else if (k == "selection") {
      if (v == "dahl") c.selection = SelectionMode::dahl;
      else if (v == "min-hm") c.selection = SelectionMode::min_hm;
      else throw InputError("selection must be dahl or min-hm, got '" + v + "'");
    }
    else if (k == "pool_chains") c.pool_chains = require_bool(kv);
    else if (k == "similarity_csv") c.similarity_csv = require_bool(kv);
    else throw InputError("unknown config key '" + k + "'");
  }
}

void validate_run_config(const RunConfig& c, bool need_paths) {
  if (need_paths) {
    if (c.data_path.empty()) throw InputError("missing required field 'data'");
    if (c.schema_path.empty()) throw InputError("missing required field 'schema'");
    if (c.output_dir.empty()) throw InputError("missing required field 'output'");
  }
  if (c.chains == 0) throw InputError("chains must be at least 1");
  if (c.threads == 0) throw InputError("threads must be at least 1");
  SamplerConfig s = sampler_config(c, 1.0, c.seed);
  validate(s);
  validate(c.priors.pd);
  if (!(c.tuning.phi_sigma > 0.0) || !(c.tuning.phi_rho > 0.0))
    throw InputError("phi_sigma and phi_rho must be positive");
  if (!(c.priors.variance.shape > 0.0 && c.priors.variance.scale > 0.0 && c.priors.base.shape > 0.0 &&
        c.priors.base.scale > 0.0))
    throw InputError("variance prior constants must be positive");
}

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  apply_config(c, parse_config_map(in));
  validate_run_config(c, true);
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file " + path.string());
  return parse_config(f);
}

SamplerConfig sampler_config(const RunConfig& c, double mean_weight, std::uint64_t seed) {
  SamplerConfig s;
  s.iterations = c.iterations;
  s.burn_in = c.burn_in;
  s.thinning = c.thinning;
  s.kappa = c.kappa.resolve(mean_weight);
  s.seed = seed;
  s.weight_mode = c.weight_mode;
  s.priors = c.priors;
  s.tuning = c.tuning;
  return s;
}

ConfigMap to_config_map(const RunConfig& c) {
  ConfigMap m{
      {"data", c.data_path},
      {"schema", c.schema_path},
      {"output", c.output_dir},
      {"iterations", std::to_string(c.iterations)},
      {"burn_in", std::to_string(c.burn_in)},
      {"thinning", std::to_string(c.thinning)},
      {"seed", std::to_string(c.seed)},
      {"chains", std::to_string(c.chains)},
      {"threads", std::to_string(c.threads)},
      {"weight_mode", to_string(c.weight_mode)},
      {"kappa", to_string(c.kappa)},
      {"preset", c.preset},
      {"alpha", format_double(c.priors.pd.alpha)},
      {"d0_a", format_double(c.priors.pd.a_shape0)},
      {"d1_a", format_double(c.priors.pd.a_shape1)},
      {"d0_b", format_double(c.priors.pd.b_shape)},
      {"d1_b", format_double(c.priors.pd.b_rate)},
      {"phi_b", format_double(c.priors.pd.phi_b)},
      {"phi_sigma", format_double(c.tuning.phi_sigma)},
      {"phi_rho", format_double(c.tuning.phi_rho)},
      {"selection", to_string(c.selection)},
      {"pool_chains", c.pool_chains ? "true" : "false"},
      {"similarity_csv", c.similarity_csv ? "true" : "false"},
  };
  if (c.preset == "custom") {
    m["d0_z"] = format_double(c.priors.variance.shape);
    m["d1_z"] = format_double(c.priors.variance.scale);
    m["d0_mu"] = format_double(c.priors.base.shape);
    m["d1_mu"] = format_double(c.priors.base.scale);
  }
  return m;
}

// ---------------------------------------------------------------- outputs

void write_similarity_binary(const std::filesystem::path& path, const Matrix& sim) {
  auto f = open_out(path, true);
  const std::uint64_t n = static_cast<std::uint64_t>(sim.rows());
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (Eigen::Index i = 0; i < sim.rows(); ++i)
    for (Eigen::Index j = 0; j < sim.cols(); ++j) {
      const double v = sim(i, j);
      f.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

Matrix read_similarity_binary(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::uint64_t n = 0;
  if (!f.read(reinterpret_cast<char*>(&n), sizeof n)) throw DataError("similarity file truncated");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!f.read(reinterpret_cast<char*>(&m(i, j)), sizeof(double))) throw DataError("similarity file truncated");
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto f = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) f << (j ? "," : "") << format_double(m(i, j));
    f << "\n";
  }
}

void write_partitions_csv(const std::filesystem::path& path, const ChainOutput& out) {
  auto f = open_out(path);
  const std::size_t n = out.partitions.empty() ? 0 : out.partitions.front().size();
  f << "iteration";
  for (std::size_t i = 0; i < n; ++i) f << ",r" << i + 1;
  f << "\n";
  for (std::size_t k = 0; k < out.partitions.size(); ++k) {
    f << out.kept_iterations[k];
    for (int label : out.partitions[k]) f << "," << label + 1;
    f << "\n";
  }
}

std::vector<Partition> read_partitions_csv(const std::filesystem::path& path, std::vector<std::size_t>* iterations) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  const auto rows = parse_csv(f);
  if (rows.empty()) throw DataError(path.string() + " is empty");
  std::vector<Partition> parts;
  if (iterations) iterations->clear();
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].size() != rows[0].size()) throw DataError(path.string() + ": ragged row " + std::to_string(k));
    Partition p;
    for (std::size_t c = 1; c < rows[k].size(); ++c) {
      auto v = parse_integer(rows[k][c]);
      if (!v || *v < 1) throw DataError(path.string() + ": bad label in row " + std::to_string(k));
      p.push_back(static_cast<int>(*v - 1));
    }
    if (iterations) {
      auto it = parse_integer(rows[k][0]);
      if (!it || *it < 0) throw DataError(path.string() + ": bad iteration in row " + std::to_string(k));
      iterations->push_back(static_cast<std::size_t>(*it));
    }
    parts.push_back(std::move(p));
  }
  return parts;
}

void write_trace_csv(const std::filesystem::path& path, const ChainOutput& out, const Schema& schema) {
  auto f = open_out(path);
  const auto names = latent_names(schema);
  std::vector<std::size_t> free;
  for (std::size_t l = 0; l < schema.q(); ++l)
    if (schema.variance_free(l)) free.push_back(l);
  f << "iteration,r,a,b";
  for (std::size_t l : free) f << "," << csv_field("sigma2_" + names[l]);
  for (const auto& nm : names) f << "," << csv_field("sigma2_mu_" + nm);
  f << "\n";
  for (std::size_t k = 0; k < out.kept(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    f << out.kept_iterations[k] << "," << out.clusters[k] << "," << format_double(out.a[k]) << ","
      << format_double(out.b[k]);
    for (Eigen::Index c = 0; c < out.free_variances.cols(); ++c) f << "," << format_double(out.free_variances(kk, c));
    for (Eigen::Index c = 0; c < out.base_variances.cols(); ++c) f << "," << format_double(out.base_variances(kk, c));
    f << "\n";
  }
}

void write_cluster_trace_csv(const std::filesystem::path& path, const ChainOutput& out) {
  auto f = open_out(path);
  f << "iteration,r\n";
  for (std::size_t t = 0; t < out.clusters_all.size(); ++t) f << t + 1 << "," << out.clusters_all[t] << "\n";
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& histogram) {
  auto f = open_out(path);
  f << "r,probability\n";
  for (std::size_t r = 1; r < histogram.size(); ++r)
    if (histogram[r] > 0.0) f << r << "," << format_double(histogram[r]) << "\n";
}

void write_partition_csv(const std::filesystem::path& path, const Partition& partition) {
  auto f = open_out(path);
  const auto labels = canonical_labels(partition);
  f << "record,cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i) f << i + 1 << "," << labels[i] + 1 << "\n";
}

void write_summary(std::ostream& out, const SummaryTable& table) {
  out << "group";
  for (const auto& c : table.columns) out << "," << csv_field(c);
  out << "\n";
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    out << csv_field(table.groups[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << "," << format_double(table.values(r, c));
    out << "\n";
  }
}

void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table) {
  auto f = open_out(path);
  write_summary(f, table);
}

}  // namespace mixscale
