#pragma once

#include "mixscale/postproc.hpp"
#include "mixscale/sampler.hpp"
#include "mixscale/schema.hpp"
#include "mixscale/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mixscale {

// Schema file: top-level `key = value` lines, then one `[variable]` block per
// column with keys name, kind, levels (comma separated), transform
// (identity | log_shift) and shift_quantile. `#` starts a comment.
struct SchemaFile {
  Schema schema;
  std::optional<std::string> weight_column;
};

SchemaFile parse_schema_file(std::istream& in);
SchemaFile read_schema_file(const std::filesystem::path& path);
void write_schema_file(std::ostream& out, const Schema& schema, const std::optional<std::string>& weight_column);

/// Minimal RFC 4180 reader: comma separated, double-quote quoting.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);
std::string csv_field(const std::string& text);

/// Reads a header-row CSV into a dataset in canonical order. Categorical
/// cells hold a level label or a 0-based level index. Throws DataError.
Dataset read_dataset(std::istream& in, const SchemaFile& file);
Dataset read_dataset(const std::filesystem::path& path, const SchemaFile& file);

/// Writes columns in input order with level labels, plus the weight column
/// when one is named.
void write_dataset(std::ostream& out, const Dataset& ds, const Schema& schema,
                   const std::optional<std::string>& weight_column);

/// Raises DataError listing the first issues of validate_dataset().
void require_valid(const Dataset& ds, const Schema& schema);

enum class SelectionMode { dahl, min_hm };

/// kappa = value (absolute) or value * mean weight.
struct KappaRule {
  bool relative = false;
  double value = 1.0;

  double resolve(double mean_weight) const { return relative ? value * mean_weight : value; }
};

/// "0.5", "wbar", "2*wbar", "wbar*2", "wbar/15".
KappaRule parse_kappa_rule(const std::string& text);
std::string to_string(const KappaRule& rule);

struct RunConfig {
  std::string data_path, schema_path, output_dir;
  std::size_t iterations = 4700, burn_in = 200, thinning = 3;
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  std::size_t threads = 1;
  WeightMode weight_mode = WeightMode::ignore;
  KappaRule kappa;
  std::string preset = "C";
  PriorSettings priors;
  CovarianceTuning tuning;
  SelectionMode selection = SelectionMode::dahl;
  bool pool_chains = false;
  bool similarity_csv = false;
};

using ConfigMap = std::map<std::string, std::string>;

/// `key = value` lines; `#` comments; duplicate keys are an error.
ConfigMap parse_config_map(std::istream& in);

/// Applies entries over `config`, expanding the prior preset. Unknown keys,
/// bad numbers and bad enums raise InputError.
void apply_config(RunConfig& config, const ConfigMap& entries);

/// Checks ranges and, if `need_paths`, that data, schema and output are set.
void validate_run_config(const RunConfig& config, bool need_paths);

RunConfig parse_config(std::istream& in);
RunConfig parse_config(const std::filesystem::path& path);

/// Sets the four variance-prior constants for preset A, B or C.
void apply_preset(PriorSettings& priors, const std::string& preset);

SamplerConfig sampler_config(const RunConfig& config, double mean_weight, std::uint64_t seed);

ConfigMap to_config_map(const RunConfig& config);

std::string to_string(WeightMode mode);
std::string to_string(SelectionMode mode);

// Output writers.
void write_similarity_binary(const std::filesystem::path& path, const Matrix& sim);
Matrix read_similarity_binary(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_partitions_csv(const std::filesystem::path& path, const ChainOutput& out);
/// Returns the stored partitions and their sweep numbers.
std::vector<Partition> read_partitions_csv(const std::filesystem::path& path,
                                           std::vector<std::size_t>* iterations = nullptr);
void write_trace_csv(const std::filesystem::path& path, const ChainOutput& out, const Schema& schema);
void write_cluster_trace_csv(const std::filesystem::path& path, const ChainOutput& out);
void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& histogram);
/// Record id (1-based) and cluster label (1-based, first-appearance order).
void write_partition_csv(const std::filesystem::path& path, const Partition& partition);
void write_summary_csv(const std::filesystem::path& path, const SummaryTable& table);
void write_summary(std::ostream& out, const SummaryTable& table);

}  // namespace mixscale
