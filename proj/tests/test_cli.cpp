#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "aot/cli.hpp"
#include "aot/io.hpp"

namespace fs = std::filesystem;
namespace io = aot::io;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = aot::cli::run_subcommand(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "aot_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Small instance; keeps generate and denoise fast.
std::vector<std::string> small_generate(const fs::path& out) {
  return {"generate", "--d", "24", "--K", "3", "--p", "4", "--tokens-per-cluster", "10",
          "--delta", "0.2", "--seed", "7", "--out", out.string()};
}

}  // namespace

TEST_CASE("usage and exit codes") {
  CHECK(run({}).code == aot::cli::kExitUsage);
  CHECK(run({"help"}).code == aot::cli::kExitOk);
  CHECK(run({"frobnicate"}).code == aot::cli::kExitUsage);
  CHECK(run({"generate", "--help"}).code == aot::cli::kExitOk);

  const auto missing = run({"verify"});
  CHECK(missing.code == aot::cli::kExitUsage);
  CHECK(missing.err.find("--seed") != std::string::npos);

  const auto bad = run({"generate", "--d", "4", "--K", "2", "--p", "3", "--seed", "1", "--out",
                        fresh("bad").string()});
  CHECK(bad.code == aot::cli::kExitUsage);
  CHECK(bad.err.find("parameter error") != std::string::npos);

  CHECK(run({"lemma-check", "--lemma", "a9", "--seed", "1"}).code == aot::cli::kExitUsage);
}

TEST_CASE("generate then denoise") {
  const fs::path dir = fresh("pipeline");
  REQUIRE(run(small_generate(dir)).code == 0);
  for (const char* f : {"tokens.csv", "partition.csv", "basis_0.csv", "signal_2.csv",
                        "noise_1_0.csv", "generate.conf", "generate.manifest.json"})
    CHECK(fs::exists(dir / f));
  const auto manifest = io::read_json(dir / "generate.manifest.json");
  CHECK(manifest.at("model").at("N") == 30);
  CHECK(manifest.at("model").at("seed") == 7);

  const auto d = run({"denoise", "--manifest", (dir / "generate.manifest.json").string(), "--layers",
                      "3", "--phi", "softmax", "--trace", "run.json", "--svg", "--out",
                      (dir / "dn").string()});
  REQUIRE(d.code == 0);
  const auto trace = io::trace_from_json(io::read_json(dir / "dn" / "run.json"));
  CHECK(trace.layers() == 3);
  CHECK(trace.params.seed == 7);
  CHECK(io::read_matrix_csv(dir / "dn" / "state.csv").cols() == 30);
  CHECK(fs::exists(dir / "dn" / "snr.svg"));
  CHECK(io::read_text(dir / "dn" / "snr.csv").rfind("layer,cluster,snr\n", 0) == 0);

  const auto thr = run({"denoise", "--manifest", (dir / "generate.manifest.json").string(),
                        "--phi", "threshold:0.8", "--causal", "--out", (dir / "c").string()});
  CHECK(thr.code == aot::cli::kExitUsage);
  const auto garbage = run({"denoise", "--manifest", (dir / "generate.manifest.json").string(),
                            "--phi", "relu", "--out", (dir / "g").string()});
  CHECK(garbage.code == aot::cli::kExitUsage);
}

TEST_CASE("plot of a zero-layer trace") {
  const fs::path dir = fresh("plot");
  REQUIRE(run(small_generate(dir)).code == 0);
  REQUIRE(run({"denoise", "--manifest", (dir / "generate.manifest.json").string(), "--layers", "0",
               "--out", dir.string()})
              .code == 0);
  const auto p = run({"plot", "--trace", (dir / "trace.json").string(), "--log-y", "--out",
                      (dir / "chart").string()});
  CHECK(p.code == 0);
  CHECK(io::read_text(dir / "chart" / "snr.svg").find("<circle") != std::string::npos);
}

TEST_CASE("a run replays from its saved configuration") {
  const fs::path a = fresh("replay_a"), b = fresh("replay_b");
  REQUIRE(run(small_generate(a)).code == 0);
  REQUIRE(run({"generate", "--config", (a / "generate.conf").string(), "--out", b.string()}).code == 0);
  const auto za = io::read_matrix_csv(a / "tokens.csv");
  const auto zb = io::read_matrix_csv(b / "tokens.csv");
  REQUIRE(za.rows() == zb.rows());
  REQUIRE(za.cols() == zb.cols());
  CHECK(aot::max_abs_diff(za, zb) <= 1e-12 * aot::max_abs(za));
}

TEST_CASE("flags override the configuration file") {
  const fs::path a = fresh("override_a"), b = fresh("override_b");
  REQUIRE(run(small_generate(a)).code == 0);
  REQUIRE(run({"generate", "--config", (a / "generate.conf").string(), "--seed", "8", "--out",
               b.string()})
              .code == 0);
  CHECK(io::read_json(b / "generate.manifest.json").at("model").at("seed") == 8);
  CHECK(io::read_json(b / "generate.manifest.json").at("model").at("d") == 24);
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = fresh("env");
  ::setenv(aot::cli::kOutputDirEnv, dir.string().c_str(), 1);
  std::vector<std::string> args = small_generate(dir);
  args.resize(args.size() - 2);
  const auto r = run(args);
  ::unsetenv(aot::cli::kOutputDirEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "tokens.csv"));
}

TEST_CASE("verify on the acceptance parameters") {
  const fs::path dir = fresh("verify");
  const auto r = run({"verify", "--seed", "0", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  const auto report = io::read_json(dir / "verify.json");
  CHECK(report.at("schema") == "aot.verify");
  CHECK(report.at("runs").size() == 1);
  CHECK(fs::exists(dir / "trace.json"));
  CHECK(run({"plot", "--trace", (dir / "verify.json").string(), "--out", dir.string()}).code == 0);
}

TEST_CASE("lemma-check and train write their reports") {
  const fs::path dir = fresh("lemma");
  const auto a1 = run({"lemma-check", "--lemma", "a1", "--d", "16", "--delta", "1", "--trials", "50",
                       "--seed", "3", "--out", dir.string()});
  CHECK(a1.code == 0);
  CHECK(io::read_json(dir / "lemma_a1.json").at("schema") == "aot.lemma_report");

  const auto t = run({"train", "--d", "12", "--K", "2", "--p", "2", "--tokens-per-cluster", "8",
                      "--layers", "2", "--steps", "5", "--eta", "0.5", "--seed", "1", "--out",
                      dir.string()});
  CHECK(t.code == 0);
  const auto log = io::read_json(dir / "train_log.json");
  CHECK(log.at("steps").size() == 5);
  CHECK(log.at("held_out_mean_snr").size() == 3);
  CHECK(fs::exists(dir / "basis_l1_k1.csv"));
}
