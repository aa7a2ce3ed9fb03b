#include "tempdir.hpp"

#include "mixscale/cli.hpp"
#include "mixscale/simgen.hpp"
#include "mixscale/warnings.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace mixscale;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mixscale");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

// Writes data.csv and schema.txt for a simulated scenario.
void write_inputs(const testutil::TempDir& dir, Scenario sc, std::size_t n, std::uint64_t seed) {
  const auto sim = generate({sc, n, seed});
  std::ofstream data(dir / "data.csv"), schema(dir / "schema.txt");
  write_dataset(data, sim.dataset, sim.schema, std::string("weight"));
  write_schema_file(schema, sim.schema, std::string("weight"));
}

std::vector<std::string> short_run(const testutil::TempDir& dir, const std::string& out) {
  return {"-q",           "run",    "--data",      (dir / "data.csv").string(), "--schema",
          (dir / "schema.txt").string(), "--output", (dir / out).string(), "--iterations", "120",
          "--burn-in",    "40",     "--thinning",  "2"};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  set_warnings_silenced(true);
  CHECK(run_cli({}) == kExitUsage);
  CHECK(run_cli({"fly"}) == kExitUsage);
  CHECK(run_cli({"run", "--no-such-flag"}) == kExitUsage);
  CHECK(run_cli({"run"}) == kExitUsage);
  CHECK(run_cli({"run", "--data", "x.csv", "--schema", "s.txt"}) == kExitUsage);
  CHECK(run_cli({"bench", "--scenario", "IX"}) == kExitUsage);
  CHECK(run_cli({"bench", "--preset", "Z"}) == kExitUsage);
  CHECK(run_cli({"summarize"}) == kExitUsage);
  CHECK(run_cli({"--version"}) == kExitOk);

  testutil::TempDir dir("cli_usage");
  write_inputs(dir, Scenario::I, 20, 1);
  auto args = short_run(dir, "out");
  args.insert(args.end(), {"--weight-mode", "sometimes"});
  CHECK(run_cli(args) == kExitUsage);
  args = short_run(dir, "out");
  args.insert(args.end(), {"--burn-in", "500"});
  CHECK(run_cli(args) == kExitUsage);
  write_text(dir / "bad.cfg", "iterations = 10\nfavourite = blue\n");
  args = short_run(dir, "out");
  args.insert(args.end(), {"--config", (dir / "bad.cfg").string()});
  CHECK(run_cli(args) == kExitUsage);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("data errors exit with 2") {
  testutil::TempDir dir("cli_data");
  write_inputs(dir, Scenario::III, 20, 1);
  auto base = short_run(dir, "out");
  auto args = base;
  args[3] = (dir / "missing.csv").string();
  CHECK(run_cli(args) == kExitData);

  const std::string good = slurp(dir / "data.csv");
  std::string bad = good;
  bad.replace(bad.find('\n') + 1, 0, "1,2,7,0.5,1\n");  // level 7 of a binary
  write_text(dir / "data.csv", bad);
  CHECK(run_cli(base) == kExitData);
  CHECK(run_cli({"validate", "--data", (dir / "data.csv").string(), "--schema", (dir / "schema.txt").string()}) ==
        kExitData);

  write_text(dir / "data.csv", good);
  write_text(dir / "schema.txt", "[variable]\nname = y1\nkind = sometimes\n");
  CHECK(run_cli(base) == kExitData);
}

TEST_CASE("runtime failures exit with 3") {
  testutil::TempDir dir("cli_runtime");
  write_inputs(dir, Scenario::I, 20, 1);
  write_text(dir / "blocker", "not a directory");
  auto args = short_run(dir, "blocker");
  CHECK(run_cli(args) == kExitRuntime);
  args = short_run(dir, "blocker/inner");
  CHECK(run_cli(args) == kExitRuntime);
}

TEST_CASE("validate reports ok") {
  testutil::TempDir dir("cli_validate");
  write_inputs(dir, Scenario::V, 0, 1);
  CHECK(run_cli({"validate", "--data", (dir / "data.csv").string(), "--schema", (dir / "schema.txt").string(),
                 "--kappa", "wbar/15"}) == kExitOk);
}

TEST_CASE("run is deterministic and writes the output bundle") {
  testutil::TempDir dir("cli_det");
  write_inputs(dir, Scenario::III, 40, 2);
  REQUIRE(run_cli(short_run(dir, "a")) == kExitOk);
  REQUIRE(run_cli(short_run(dir, "b")) == kExitOk);
  for (const char* name : {"partition.csv", "summary.csv", "partitions_chain1.csv", "trace_chain1.csv",
                           "clusters_chain1.csv", "histogram_chain1.csv", "similarity_chain1.bin",
                           "checkpoint_chain1.txt"}) {
    INFO(name);
    REQUIRE(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(fs::exists(dir / "a" / "config.txt"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["data"]["n"] == 40);
  CHECK(manifest["chains"][0]["kept"] == 40);
  CHECK(manifest["chains"][0]["seed"] == 1);

  // The stored config reproduces the run.
  REQUIRE(run_cli({"-q", "run", "--config", (dir / "a" / "config.txt").string(), "--output",
                   (dir / "c").string()}) == kExitOk);
  CHECK(slurp(dir / "a" / "partition.csv") == slurp(dir / "c" / "partition.csv"));
  CHECK(slurp(dir / "a" / "partitions_chain1.csv") == slurp(dir / "c" / "partitions_chain1.csv"));

  // summarize recomputes the same table from the stored partitions.
  REQUIRE(run_cli({"summarize", "--dir", (dir / "a").string(), "--output", (dir / "again.csv").string()}) ==
          kExitOk);
  CHECK(slurp(dir / "again.csv") == slurp(dir / "a" / "summary.csv"));

  auto other = short_run(dir, "d");
  other.insert(other.end(), {"--seed", "5"});
  REQUIRE(run_cli(other) == kExitOk);
  CHECK(slurp(dir / "a" / "partitions_chain1.csv") != slurp(dir / "d" / "partitions_chain1.csv"));
}

TEST_CASE("chain k uses seed + k regardless of threading") {
  testutil::TempDir dir("cli_chains");
  write_inputs(dir, Scenario::I, 30, 3);
  auto multi = short_run(dir, "multi");
  multi.insert(multi.end(), {"--chains", "3", "--threads", "3", "--seed", "10", "--pool-chains"});
  REQUIRE(run_cli(multi) == kExitOk);
  for (int k = 0; k < 3; ++k) {
    auto single = short_run(dir, "single" + std::to_string(k));
    single.insert(single.end(), {"--seed", std::to_string(10 + k)});
    REQUIRE(run_cli(single) == kExitOk);
    CHECK(slurp(dir / "multi" / ("partitions_chain" + std::to_string(k + 1) + ".csv")) ==
          slurp(dir / ("single" + std::to_string(k)) / "partitions_chain1.csv"));
  }
  CHECK(fs::exists(dir / "multi" / "similarity_pooled.bin"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "multi" / "manifest.json"));
  CHECK(manifest["selection"]["source"] == "pooled");
  CHECK(run_cli({"summarize", "--dir", (dir / "multi").string(), "--pooled", "--output",
                 (dir / "pooled.csv").string()}) == kExitOk);
  CHECK(run_cli({"summarize", "--dir", (dir / "multi").string(), "--chain", "4"}) == kExitUsage);
}

TEST_CASE("min-HM selection never has a larger HM than Dahl") {
  testutil::TempDir dir("cli_hm");
  for (Scenario sc : {Scenario::I, Scenario::III}) {
    write_inputs(dir, sc, 40, 6);
    const auto input = load_input((dir / "data.csv").string(), (dir / "schema.txt").string());
    RunConfig config;
    config.output_dir = (dir / "out").string();
    config.iterations = 150;
    config.burn_in = 50;
    config.thinning = 1;
    set_warnings_silenced(true);
    const auto dahl = execute_run(config, input, nullptr);
    config.selection = SelectionMode::min_hm;
    const auto minhm = execute_run(config, input, nullptr);
    CHECK(minhm.selection.hm <= dahl.selection.hm + 1e-12);
    CHECK(dahl.chains[0].output.partitions == minhm.chains[0].output.partitions);
  }
}

TEST_CASE("bench writes the nine study 1 bundles") {
  testutil::TempDir dir("cli_bench");
  REQUIRE(run_cli({"-q", "bench", "--scenario", "study1", "--preset", "A,B,C", "--n", "30", "--iterations", "60",
                   "--burn-in", "20", "--thinning", "2", "--output", dir.path.string()}) == kExitOk);
  std::istringstream table(slurp(dir / "bench_summary.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(table, line);
  CHECK(line == "scenario,preset,modal_r,modal_probability,selected_r,mean_a,mean_b,seconds");
  while (std::getline(table, line)) ++rows;
  CHECK(rows == 9);
  for (const char* sc : {"I", "II", "III"})
    for (const char* preset : {"A", "B", "C"}) {
      const fs::path bundle = dir.path / (std::string(sc) + "_" + preset);
      INFO(bundle);
      CHECK(fs::exists(bundle / "manifest.json"));
      CHECK(fs::exists(bundle / "partition.csv"));
      CHECK(fs::exists(bundle / "truth.csv"));
      const auto manifest = nlohmann::json::parse(slurp(bundle / "manifest.json"));
      CHECK(manifest["config"]["preset"] == preset);
      CHECK(manifest["chains"][0]["kept"] == 20);
    }
}

TEST_CASE("bench on study 2 applies the weight modes") {
  testutil::TempDir dir("cli_bench2");
  REQUIRE(run_cli({"-q", "bench", "--scenario", "IV,V,VI", "--n", "40", "--iterations", "40", "--burn-in", "10",
                   "--thinning", "1", "--output", dir.path.string()}) == kExitOk);
  const auto iv = nlohmann::json::parse(slurp(dir / "IV_C/manifest.json"));
  const auto v = nlohmann::json::parse(slurp(dir / "V_C/manifest.json"));
  const auto vi = nlohmann::json::parse(slurp(dir / "VI_C/manifest.json"));
  CHECK(iv["config"]["weight_mode"] == "ignore");
  CHECK(v["config"]["weight_mode"] == "design");
  CHECK(v["data"]["kappa"].get<double>() == doctest::Approx(v["data"]["mean_weight"].get<double>() / 15));
  CHECK(vi["data"]["kappa"].get<double>() == doctest::Approx(vi["data"]["mean_weight"].get<double>() / 25));
}
