#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "ollga/exact_dp.hpp"
#include "ollga/io.hpp"
#include "ollga/policy.hpp"

using namespace ollga;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code;
  std::string dir;
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OLLGA_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("ollga_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("usage errors exit with the usage code") {
  CHECK(run_cli("definitely-not-a-subcommand") == 64);
  CHECK(run_cli("exact") == 64);          // missing required --n
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("config errors exit with the config code") {
  const auto dir = fresh_dir("cfg");
  CHECK(run_cli("--out-dir " + dir + " exact --n 50 --policy nonexistent.json") == 65);
  CHECK(run_cli("--out-dir " + dir + " exact --n 50 --policy theory --rounding bogus") == 65);
}

TEST_CASE("exact subcommand matches the library and writes a manifest") {
  const auto dir = fresh_dir("exact");
  REQUIRE(run_cli("--out-dir " + dir + " exact --n 80 --policy theory --csv") == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir + "/exact.json"));
  DpEvaluator dp(80);
  const auto rt = dp.policy_runtime(theory_policy(80), RoundingMode::nearest());
  CHECK(std::abs(j["total"].get<double>() - rt.total) <= 1e-6 * rt.total);

  const auto manifest = nlohmann::json::parse(read_text_file(dir + "/exact.manifest.json"));
  CHECK(manifest["command"] == "exact");
  for (const auto& out : manifest["outputs"]) {
    const std::string path = out["path"].get<std::string>();
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(file_digest(path)));
    CHECK(out["fnv1a64"].get<std::string>() == digest);
  }
}

TEST_CASE("exact reproduces the published default total through the CLI") {
  const auto dir = fresh_dir("exact500");
  REQUIRE(run_cli("--out-dir " + dir + " exact --n 500 --policy theory") == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir + "/exact.json"));
  CHECK(std::abs(j["total"].get<double>() - 3224.89) <= 0.01);
}

TEST_CASE("simulate on one bit stays within the two-evaluation envelope") {
  const auto dir = fresh_dir("sim");
  REQUIRE(run_cli("--out-dir " + dir + " simulate --n 1 --lambda 1 --seeds 100") == 0);
  std::ifstream csv(dir + "/runs.csv");
  std::string line;
  std::getline(csv, line);  // header
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    std::getline(ss, field, ',');
    const long evals = std::stol(field);
    CHECK((evals == 1 || evals == 2));
    ++rows;
  }
  CHECK(rows == 100);
}

TEST_CASE("outputs are byte-identical across repeated invocations") {
  const auto dir_a = fresh_dir("det_a");
  const auto dir_b = fresh_dir("det_b");
  const std::string args = " simulate --n 30 --policy theory --seeds 50 --rounding stochastic";
  REQUIRE(run_cli("--out-dir " + dir_a + " --seed 9" + args) == 0);
  REQUIRE(run_cli("--out-dir " + dir_b + " --seed 9 --threads 3" + args) == 0);
  CHECK(read_text_file(dir_a + "/runs.csv") == read_text_file(dir_b + "/runs.csv"));
  CHECK(read_text_file(dir_a + "/summary.json") == read_text_file(dir_b + "/summary.json"));
}

TEST_CASE("compare reports totals and a well-formed overlay") {
  const auto dir = fresh_dir("cmp");
  REQUIRE(run_cli("--out-dir " + dir + " compare --n 60 --policies theory,theory,static:2.5") == 0);
  const auto rows = nlohmann::json::parse(read_text_file(dir + "/compare.json"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0]["total"].get<double>() == rows[1]["total"].get<double>());  // theory vs itself

  std::ifstream overlay(dir + "/compare_overlay.csv");
  std::string header;
  std::getline(overlay, header);
  int commas = 0;
  for (char c : header) commas += c == ',';
  CHECK(commas == 2 + 3 - 1);  // fitness, log_distance, one column per policy
  int rows_count = 0;
  std::string line;
  while (std::getline(overlay, line)) ++rows_count;
  CHECK(rows_count == 30);  // f in [n/2, n)
}

TEST_CASE("sweep writes parseable rows") {
  const auto dir = fresh_dir("sweep");
  REQUIRE(run_cli("--out-dir " + dir +
                  " sweep --n 100 --base binned-theory --lo 2 --hi 4 --step 0.5") == 0);
  std::ifstream csv(dir + "/sweep.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "lambda,total");
  int rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows >= 5);
}

TEST_CASE("policy files round-trip through the CLI") {
  const auto dir = fresh_dir("roundtrip");
  PolicySpec spec = PolicySpec::from_binned(
      BinnedPolicy(BinScheme::geometric(50, 4), {1.0, 2.25, 3.5, 5.0}));
  save_policy_file(spec, dir + "/policy.json");
  REQUIRE(run_cli("--out-dir " + dir + " exact --n 50 --policy " + dir + "/policy.json") == 0);
  const auto j = nlohmann::json::parse(read_text_file(dir + "/exact.json"));
  DpEvaluator dp(50);
  const auto rt = dp.policy_runtime(spec.to_policy(), RoundingMode::nearest());
  CHECK(std::abs(j["total"].get<double>() - rt.total) <= 1e-6 * rt.total);
}
