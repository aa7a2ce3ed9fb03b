#include "mixscale/cli.hpp"

#include "mixscale/checkpoint.hpp"
#include "mixscale/simgen.hpp"
#include "mixscale/warnings.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace mixscale {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

std::string chain_tag(std::size_t k) { return "chain" + std::to_string(k + 1); }

double mean(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double rate(std::size_t accepted, std::size_t proposed) {
  return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
}

json acceptance_json(const AcceptanceCounts& a) {
  return {{"variance", rate(a.variance_accepted, a.variance_proposed)},
          {"correlation", rate(a.correlation_accepted, a.correlation_proposed)},
          {"a", rate(a.a_accepted, a.a_proposed)},
          {"b", rate(a.b_accepted, a.b_proposed)}};
}

void write_config_file(const fs::path& path, const RunConfig& config) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : to_config_map(config)) f << k << " = " << v << "\n";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

}  // namespace

LoadedInput load_input(const std::string& data_path, const std::string& schema_path) {
  LoadedInput in;
  in.schema = read_schema_file(schema_path);
  in.data = read_dataset(fs::path(data_path), in.schema);
  try {
    in.schema.schema = resolve_transforms(in.schema.schema, in.data);
  } catch (const DataError&) {
    throw;
  } catch (const InputError& e) {
    throw DataError(e.what());
  }
  return in;
}

std::vector<ChainResult> run_chains(const RunConfig& config, const LoadedInput& input) {
  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::atomic<std::size_t> next{0};
  const double wbar = input.data.mean_weight();
  auto worker = [&] {
    for (std::size_t k = next++; k < config.chains; k = next++) {
      try {
        const std::uint64_t seed = config.seed + k;
        const SamplerConfig sc = sampler_config(config, wbar, seed);
        ChainState state = initialize_chain(input.data, input.schema.schema, sc);
        ChainOutput out;
        continue_chain(state, out, input.data, input.schema.schema, sc);
        results[k] = {seed, std::move(out), std::move(state)};
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(config.threads, config.chains);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

Selection select_partition(const std::vector<Partition>& partitions, const Matrix& sim, SelectionMode mode,
                           const Dataset& ds, const Schema& schema) {
  const ExpandedVariables ex = expand_variables(ds, schema);
  if (mode == SelectionMode::min_hm) return select_min_hm(partitions, sim, ex.values, ds.weights);
  Selection s = dahl_select(partitions, sim);
  s.hm = hm_measure(s.partition, ex.values, ds.weights);
  return s;
}

RunReport execute_run(const RunConfig& config, const LoadedInput& input, std::ostream* log) {
  validate_run_config(config, false);
  const Schema& schema = input.schema.schema;
  const Dataset& ds = input.data;
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  RunReport report;
  report.kappa = config.kappa.resolve(ds.mean_weight());
  report.chains = run_chains(config, input);

  json chains = json::array();
  std::vector<Matrix> sims;
  for (std::size_t k = 0; k < report.chains.size(); ++k) {
    const auto& res = report.chains[k];
    const auto& out = res.output;
    if (out.kept() == 0) throw InputError("no draws kept: burn-in and thinning leave nothing to store");
    const std::string tag = chain_tag(k);
    write_trace_csv(dir / ("trace_" + tag + ".csv"), out, schema);
    write_cluster_trace_csv(dir / ("clusters_" + tag + ".csv"), out);
    write_partitions_csv(dir / ("partitions_" + tag + ".csv"), out);
    write_histogram_csv(dir / ("histogram_" + tag + ".csv"), cluster_count_histogram(out));
    save_checkpoint(dir / ("checkpoint_" + tag + ".txt"), res.final_state);
    sims.push_back(similarity(out.partitions));
    write_similarity_binary(dir / ("similarity_" + tag + ".bin"), sims.back());
    if (config.similarity_csv) write_matrix_csv(dir / ("similarity_" + tag + ".csv"), sims.back());

    const auto hist = cluster_count_histogram(out);
    const std::size_t mode = modal_cluster_count(out);
    chains.push_back({{"chain", k + 1},
                      {"seed", res.seed},
                      {"seconds", out.seconds},
                      {"kept", out.kept()},
                      {"modal_r", mode},
                      {"modal_r_probability", hist[mode]},
                      {"mean_a", mean(out.a)},
                      {"mean_b", mean(out.b)},
                      {"acceptance", acceptance_json(out.acceptance)}});
    if (log)
      *log << tag << ": seed " << res.seed << ", " << out.kept() << " kept draws, modal r = " << mode << " (p = "
           << hist[mode] << "), " << out.seconds << " s\n";
  }

  std::vector<Partition> pool;
  std::vector<std::size_t> pool_iterations;
  if (config.pool_chains && report.chains.size() > 1) {
    const auto n = static_cast<Eigen::Index>(ds.n());
    Matrix sum = Matrix::Zero(n, n);
    std::size_t total = 0;
    for (const auto& res : report.chains)
      for (std::size_t t = 0; t < res.output.kept(); ++t) {
        accumulate_adjacency(sum, res.output.partitions[t]);
        pool.push_back(res.output.partitions[t]);
        pool_iterations.push_back(res.output.kept_iterations[t]);
        ++total;
      }
    report.similarity = sum / static_cast<double>(total);
    report.selection_source = "pooled";
    write_similarity_binary(dir / "similarity_pooled.bin", report.similarity);
    if (config.similarity_csv) write_matrix_csv(dir / "similarity_pooled.csv", report.similarity);
  } else {
    pool = report.chains[0].output.partitions;
    pool_iterations = report.chains[0].output.kept_iterations;
    report.similarity = sims[0];
    report.selection_source = chain_tag(0);
  }

  report.selection = select_partition(pool, report.similarity, config.selection, ds, schema);
  report.selection_iteration = pool_iterations[report.selection.index];
  report.summary = cluster_summary(report.selection.partition, ds, schema);
  write_partition_csv(dir / "partition.csv", report.selection.partition);
  write_summary_csv(dir / "summary.csv", report.summary);
  write_config_file(dir / "config.txt", config);

  json manifest = {
      {"tool", "mixscale"},
      {"version", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
      {"config", to_config_map(config)},
      {"data", {{"n", ds.n()},
                {"p", schema.p()},
                {"q", schema.q()},
                {"mean_weight", ds.mean_weight()},
                {"kappa", report.kappa}}},
      {"chains", chains},
      {"selection",
       {{"mode", to_string(config.selection)},
        {"source", report.selection_source},
        {"index", report.selection.index},
        {"iteration", report.selection_iteration},
        {"r", cluster_count(report.selection.partition)},
        {"squared_distance", report.selection.distance},
        {"hm", report.selection.hm}}},
      {"warnings", warning_count()},
  };
  write_json(dir / "manifest.json", manifest);
  if (log)
    *log << "selected partition (" << to_string(config.selection) << ", " << report.selection_source
         << "): r = " << cluster_count(report.selection.partition) << ", HM = " << report.selection.hm << "\n";
  return report;
}

namespace {

// Options shared by run and the config-driven commands. Values are kept as
// strings and merged over the config file as `key = value` entries.
struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool pool = false, similarity_csv = false;
  CLI::Option* pool_opt = nullptr;
  CLI::Option* csv_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file");
    const std::pair<const char*, const char*> keys[] = {
        {"data", "data CSV"},
        {"schema", "schema file"},
        {"output", "output directory"},
        {"iterations", "total sweeps"},
        {"burn_in", "discarded leading sweeps"},
        {"thinning", "keep every t-th sweep after burn-in"},
        {"seed", "seed of the first chain"},
        {"chains", "number of chains"},
        {"threads", "worker threads for chains"},
        {"weight_mode", "ignore | design"},
        {"kappa", "absolute value or a multiple of wbar: 2*wbar, wbar/15"},
        {"preset", "A | B | C | custom"},
        {"d0_z", "custom shape of the kernel variance prior"},
        {"d1_z", "custom scale of the kernel variance prior"},
        {"d0_mu", "custom shape of the base variance prior"},
        {"d1_mu", "custom scale of the base variance prior"},
        {"alpha", "prior mass of a = 0"},
        {"d0_a", "beta shape 1 for a"},
        {"d1_a", "beta shape 2 for a"},
        {"d0_b", "gamma shape for b + a"},
        {"d1_b", "gamma rate for b + a"},
        {"phi_b", "random-walk half width for b"},
        {"phi_sigma", "gamma proposal shape for variances"},
        {"phi_rho", "window divisor for correlations"},
        {"selection", "dahl | min-hm"},
    };
    for (const auto& [key, help] : keys) {
      std::string flag = std::string("--") + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = app->add_option(flag, values[key], help);
    }
    pool_opt = app->add_flag("--pool-chains", pool, "select from the pooled chains");
    csv_opt = app->add_flag("--similarity-csv", similarity_csv, "also write the similarity matrix as CSV");
  }

  RunConfig resolve(bool need_paths) const {
    ConfigMap merged;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw InputError("cannot open config file " + config_path);
      merged = parse_config_map(f);
    }
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) merged[key] = values.at(key);
    if (options.at("preset")->count() > 0 && values.at("preset") != "custom")
      for (const char* k : {"d0_z", "d1_z", "d0_mu", "d1_mu"}) merged.erase(k);
    if (pool_opt->count() > 0) merged["pool_chains"] = pool ? "true" : "false";
    if (csv_opt->count() > 0) merged["similarity_csv"] = similarity_csv ? "true" : "false";
    RunConfig c;
    apply_config(c, merged);
    validate_run_config(c, need_paths);
    return c;
  }
};

int command_run(const RunFlags& flags) {
  const RunConfig config = flags.resolve(true);
  const LoadedInput input = load_input(config.data_path, config.schema_path);
  execute_run(config, input, &std::cerr);
  return kExitOk;
}

int command_validate(const RunFlags& flags) {
  const RunConfig config = flags.resolve(false);
  if (config.data_path.empty() || config.schema_path.empty())
    throw InputError("validate needs --data and --schema (directly or through --config)");
  const LoadedInput input = load_input(config.data_path, config.schema_path);
  const Schema& s = input.schema.schema;
  std::cout << "ok: " << input.data.n() << " records, " << s.p() << " variables (" << s.num_continuous()
            << " continuous, " << s.num_ordinal() << " ordinal, " << s.num_nominal() << " nominal), q = " << s.q()
            << ", mean weight " << input.data.mean_weight() << ", kappa "
            << config.kappa.resolve(input.data.mean_weight()) << "\n";
  return kExitOk;
}

struct SummarizeFlags {
  std::string dir;
  std::string selection;
  std::string output;
  std::size_t chain = 1;
  bool pooled = false;
};

int command_summarize(const SummarizeFlags& f) {
  const fs::path dir = f.dir;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw InputError("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: ") + e.what());
  }
  RunConfig config;
  apply_config(config, manifest.at("config").get<ConfigMap>());
  if (!f.selection.empty()) apply_config(config, {{"selection", f.selection}});
  const LoadedInput input = load_input(config.data_path, config.schema_path);

  std::vector<Partition> pool;
  std::string source;
  if (f.pooled) {
    for (std::size_t k = 0; k < config.chains; ++k) {
      auto parts = read_partitions_csv(dir / ("partitions_" + chain_tag(k) + ".csv"));
      pool.insert(pool.end(), parts.begin(), parts.end());
    }
    source = "pooled";
  } else {
    if (f.chain < 1 || f.chain > config.chains) throw InputError("--chain out of range");
    pool = read_partitions_csv(dir / ("partitions_" + chain_tag(f.chain - 1) + ".csv"));
    source = chain_tag(f.chain - 1);
  }
  if (pool.empty()) throw DataError("no stored partitions");
  for (const auto& p : pool)
    if (p.size() != input.data.n()) throw DataError("stored partitions do not match the data size");
  const Matrix sim = similarity(pool);
  const Selection sel = select_partition(pool, sim, config.selection, input.data, input.schema.schema);
  const SummaryTable table = cluster_summary(sel.partition, input.data, input.schema.schema);
  std::cerr << "selected partition (" << to_string(config.selection) << ", " << source
            << "): r = " << cluster_count(sel.partition) << ", HM = " << sel.hm << ", squared distance "
            << sel.distance << "\n";
  if (f.output.empty()) {
    write_summary(std::cout, table);
  } else {
    write_summary_csv(f.output, table);
  }
  return kExitOk;
}

struct BenchFlags {
  std::string scenarios = "I";
  std::string presets = "C";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> chain_seed;
  std::size_t n = 0;
  std::size_t iterations = 4700, burn_in = 200, thinning = 3;
  std::string output = "bench";
  bool similarity_csv = false;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int command_bench(const BenchFlags& f) {
  std::vector<Scenario> scenarios;
  for (const auto& s : split(f.scenarios)) {
    if (s == "all" || s == "study1")
      scenarios.insert(scenarios.end(), {Scenario::I, Scenario::II, Scenario::III});
    if (s == "all" || s == "study2")
      scenarios.insert(scenarios.end(), {Scenario::IV, Scenario::V, Scenario::VI});
    if (s == "all" || s == "study1" || s == "study2") continue;
    auto sc = parse_scenario(s);
    if (!sc) throw InputError("unknown scenario '" + s + "'");
    scenarios.push_back(*sc);
  }
  const auto presets = split(f.presets);
  if (scenarios.empty() || presets.empty()) throw InputError("bench needs at least one scenario and preset");
  for (const auto& p : presets) {
    PriorSettings tmp;
    apply_preset(tmp, p);
  }

  const fs::path root = f.output;
  fs::create_directories(root);
  std::ofstream table(root / "bench_summary.csv");
  if (!table) throw std::runtime_error("cannot write bench_summary.csv");
  table << "scenario,preset,modal_r,modal_probability,selected_r,mean_a,mean_b,seconds\n";
  std::cout << "scenario preset modal_r p(modal) selected_r mean_a mean_b seconds\n";

  for (Scenario sc : scenarios)
    for (const auto& preset : presets) {
      ScenarioSpec spec;
      spec.scenario = sc;
      spec.n = f.n;
      spec.seed = f.seed;
      const SimulatedData sim = generate(spec);
      const fs::path dir = root / (to_string(sc) + "_" + preset);
      fs::create_directories(dir);

      {
        std::ofstream data(dir / "data.csv"), schema(dir / "schema.txt");
        write_dataset(data, sim.dataset, sim.schema, std::string("weight"));
        write_schema_file(schema, sim.schema, std::string("weight"));
        if (!data || !schema) throw std::runtime_error("cannot write bench inputs in " + dir.string());
      }
      if (!sim.true_labels.empty()) {
        std::ofstream truth(dir / "truth.csv");
        truth << "record,component\n";
        for (std::size_t i = 0; i < sim.true_labels.size(); ++i) truth << i + 1 << "," << sim.true_labels[i] + 1 << "\n";
      }

      RunConfig config;
      config.data_path = (dir / "data.csv").string();
      config.schema_path = (dir / "schema.txt").string();
      config.output_dir = dir.string();
      config.iterations = f.iterations;
      config.burn_in = f.burn_in;
      config.thinning = f.thinning;
      config.seed = f.chain_seed.value_or(f.seed);
      config.weight_mode = sim.weight_mode;
      config.kappa = {false, sim.kappa};
      config.preset = preset;
      apply_preset(config.priors, preset);
      config.similarity_csv = f.similarity_csv;

      const LoadedInput input = load_input(config.data_path, config.schema_path);
      const RunReport report = execute_run(config, input, nullptr);
      const auto& out = report.chains[0].output;
      const auto hist = cluster_count_histogram(out);
      const std::size_t mode = modal_cluster_count(out);
      std::ostringstream line;
      line << to_string(sc) << "," << preset << "," << mode << "," << hist[mode] << ","
           << cluster_count(report.selection.partition) << "," << mean(out.a) << "," << mean(out.b) << ","
           << out.seconds;
      table << line.str() << "\n";
      std::string pretty = line.str();
      std::replace(pretty.begin(), pretty.end(), ',', ' ');
      std::cout << pretty << std::endl;
    }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Poisson-Dirichlet mixture clustering of mixed-scale survey data", "mixscale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings on stderr");

  RunFlags run_flags, validate_flags;
  auto* run = app.add_subcommand("run", "fit the model to a data file and write all outputs");
  run_flags.add(run);
  auto* validate = app.add_subcommand("validate", "check a schema, data file and config without sampling");
  validate_flags.add(validate);

  SummarizeFlags sum_flags;
  auto* summarize = app.add_subcommand("summarize", "recompute the selection and summary table of a finished run");
  summarize->add_option("--dir", sum_flags.dir, "output directory of a run")->required();
  summarize->add_option("--selection", sum_flags.selection, "dahl | min-hm");
  summarize->add_option("--chain", sum_flags.chain, "chain to summarise (1-based)");
  summarize->add_flag("--pooled", sum_flags.pooled, "pool the stored partitions of all chains");
  summarize->add_option("--output", sum_flags.output, "write the table here instead of stdout");

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "simulate a scenario and run it with the benchmark settings");
  bench->add_option("--scenario", bench_flags.scenarios, "I..VI, comma separated, or study1 | study2 | all");
  bench->add_option("--preset", bench_flags.presets, "A, B, C, comma separated");
  bench->add_option("--seed", bench_flags.seed, "data seed (also the chain seed unless --chain-seed)");
  bench->add_option("--chain-seed", bench_flags.chain_seed, "chain seed");
  bench->add_option("--n", bench_flags.n, "records (0 = scenario default)");
  bench->add_option("--iterations", bench_flags.iterations);
  bench->add_option("--burn-in", bench_flags.burn_in);
  bench->add_option("--thinning", bench_flags.thinning);
  bench->add_option("--output", bench_flags.output, "root directory for the result bundles");
  bench->add_flag("--similarity-csv", bench_flags.similarity_csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_warnings_silenced(quiet);

  try {
    if (*run) return command_run(run_flags);
    if (*validate) return command_validate(validate_flags);
    if (*summarize) return command_summarize(sum_flags);
    if (*bench) return command_bench(bench_flags);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InputError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mixscale
