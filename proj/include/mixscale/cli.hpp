#pragma once

#include "mixscale/io.hpp"
#include "mixscale/postproc.hpp"
#include "mixscale/sampler.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mixscale {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

struct LoadedInput {
  SchemaFile schema;  // transforms resolved against the data
  Dataset data;
};

/// Reads and validates schema and data; every failure is a DataError.
LoadedInput load_input(const std::string& data_path, const std::string& schema_path);

struct ChainResult {
  std::uint64_t seed = 0;
  ChainOutput output;
  ChainState final_state;
};

/// Chain k (0-based) uses seed config.seed + k; chains run on a pool of
/// config.threads workers.
std::vector<ChainResult> run_chains(const RunConfig& config, const LoadedInput& input);

struct RunReport {
  std::vector<ChainResult> chains;
  double kappa = 1.0;
  Matrix similarity;             // of the chain (or pool) the selection came from
  std::string selection_source;  // "chain1" or "pooled"
  Selection selection;
  std::size_t selection_iteration = 0;
  SummaryTable summary;
};

/// Runs the chains and writes every output file into config.output_dir.
RunReport execute_run(const RunConfig& config, const LoadedInput& input, std::ostream* log);

/// Selection among stored partitions according to `mode`.
Selection select_partition(const std::vector<Partition>& partitions, const Matrix& sim, SelectionMode mode,
                           const Dataset& ds, const Schema& schema);

/// Entry point of the command-line tool; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace mixscale
