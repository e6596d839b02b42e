#include "ollga/cli.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ollga/binned_optimizer.hpp"
#include "ollga/exact_dp.hpp"
#include "ollga/io.hpp"
#include "ollga/landscape.hpp"
#include "ollga/markov_oracle.hpp"
#include "ollga/optimal_policy.hpp"
#include "ollga/parallel.hpp"
#include "ollga/racing.hpp"
#include "ollga/simulator.hpp"

namespace ollga {

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 64 usage, 65 config, 70 runtime failure, 75 capped/degenerate.
constexpr int kExitUsage = 64;
constexpr int kExitConfig = 65;
constexpr int kExitRuntime = 70;
constexpr int kExitCapped = 75;

struct OutputSink {
  std::string out_dir = ".";
  nlohmann::ordered_json manifest_outputs = nlohmann::ordered_json::array();

  std::string path(const std::string& name) const { return out_dir + "/" + name; }

  void write(const std::string& name, const std::string& contents) {
    const std::string full = path(name);
    write_text_file(full, contents);
    char digest[32];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(contents.data(), contents.size())));
    manifest_outputs.push_back({{"path", full}, {"fnv1a64", digest}});
  }

  void finish(const std::string& command, const nlohmann::ordered_json& config,
              std::uint64_t master_seed, int threads) {
    nlohmann::ordered_json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["master_seed"] = master_seed;
    m["threads"] = threads;
    m["config"] = config;
    m["outputs"] = manifest_outputs;
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp_utc"] = stamp;  // manifest only; data outputs stay reproducible
    write_text_file(path(command + ".manifest.json"), m.dump(2) + "\n");
  }
};

RoundingMode parse_rounding(const std::string& name, const PolicySpec& spec) {
  if (name == "nearest") return RoundingMode::nearest();
  if (name == "stochastic") return RoundingMode::stochastic();
  if (name == "decoupled") {
    if (!spec.has_capacities())
      throw std::invalid_argument("decoupled rounding needs a policy file with capacities");
    return RoundingMode::decoupled(spec.capacity_table());
  }
  throw std::invalid_argument("unknown rounding mode: " + name);
}

// Policy tokens: theory | binned-theory[:anchor[:k]] | static:<x> | best |
// best-binned[:k] | <file.json|file.csv>.
PolicySpec resolve_policy_token(const std::string& token, int n, int restarts,
                                std::uint64_t seed) {
  if (token == "theory") return PolicySpec::from_policy(theory_policy(n));
  if (token.rfind("binned-theory", 0) == 0) {
    Anchor anchor = Anchor::Middle;
    int k = BinScheme::max_bins(n);
    std::istringstream ss(token);
    std::string part;
    std::getline(ss, part, ':');
    if (std::getline(ss, part, ':')) {
      const auto a = anchor_from_name(part);
      if (!a) throw std::invalid_argument("bad anchor in: " + token);
      anchor = *a;
    }
    if (std::getline(ss, part, ':')) k = std::stoi(part);
    return PolicySpec::from_binned(binned_theory_policy(n, k, anchor));
  }
  if (token.rfind("static:", 0) == 0)
    return PolicySpec::from_policy(Policy::constant(n, std::stod(token.substr(7))));
  if (token == "best") {
    DpEvaluator dp(n);
    return PolicySpec::from_policy(optimal_policy(dp).policy);
  }
  if (token.rfind("best-binned", 0) == 0) {
    int k = BinScheme::max_bins(n);
    if (const auto colon = token.find(':'); colon != std::string::npos)
      k = std::stoi(token.substr(colon + 1));
    DpEvaluator dp(n);
    BinnedOptConfig cfg;
    cfg.restarts = restarts;
    cfg.master_seed = seed;
    const auto res = optimize_binned(dp, BinScheme::geometric(n, k), BinnedObjective::Nearest, cfg);
    return PolicySpec::from_binned(res.policy);
  }
  PolicySpec spec;
  try {
    spec = load_policy_file(token);
  } catch (const std::exception& e) {
    throw std::invalid_argument("cannot load policy '" + token + "': " + e.what());
  }
  if (spec.n != n) throw std::invalid_argument("policy dimension mismatch in " + token);
  return spec;
}

std::string runtime_table_json(const RuntimeTable& rt) {
  // 10 significant digits on every reported number.
  std::ostringstream out;
  out << "{\n  \"n\": " << rt.n << ",\n  \"total\": " << fmt_sig(rt.total, 10) << ",\n  \"T\": [";
  for (int f = 0; f <= rt.n; ++f) {
    if (f) out << ", ";
    out << fmt_sig(rt.T[static_cast<std::size_t>(f)], 10);
  }
  out << "]\n}\n";
  return out.str();
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

nlohmann::ordered_json scenario_config_json(const TuningScenario& sc) {
  nlohmann::ordered_json j;
  j["n"] = sc.n;
  j["space"] = sc.space == ParamSpace::Static   ? "static"
               : sc.space == ParamSpace::Binned ? "binned"
                                                : "naive";
  j["bins"] = sc.bins;
  j["run_budget"] = sc.run_budget;
  j["first_test"] = sc.first_test;
  j["confidence"] = sc.confidence;
  j["capping"] = sc.capping;
  j["cap_multiplier"] = sc.cap_multiplier;
  j["elite_count"] = sc.elite_count;
  j["sampling_decay"] = sc.sampling_decay;
  j["budget_growth"] = sc.budget_growth;
  j["per_run_eval_cap"] = sc.per_run_eval_cap;
  j["validation_runs"] = sc.validation_runs;
  j["max_seeds_per_race"] = sc.max_seeds_per_race;
  j["master_seed"] = sc.master_seed;
  return j;
}

void apply_scenario_file(TuningScenario& sc, const std::string& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.contains("n")) sc.n = j["n"].get<int>();
  if (j.contains("space")) {
    const auto s = j["space"].get<std::string>();
    sc.space = s == "static" ? ParamSpace::Static : s == "naive" ? ParamSpace::Naive : ParamSpace::Binned;
  }
  if (j.contains("bins")) sc.bins = j["bins"].get<int>();
  if (j.contains("run_budget")) sc.run_budget = j["run_budget"].get<std::uint64_t>();
  if (j.contains("first_test")) sc.first_test = j["first_test"].get<int>();
  if (j.contains("confidence")) sc.confidence = j["confidence"].get<double>();
  if (j.contains("capping")) sc.capping = j["capping"].get<bool>();
  if (j.contains("cap_multiplier")) sc.cap_multiplier = j["cap_multiplier"].get<double>();
  if (j.contains("elite_count")) sc.elite_count = j["elite_count"].get<int>();
  if (j.contains("sampling_decay")) sc.sampling_decay = j["sampling_decay"].get<double>();
  if (j.contains("budget_growth")) sc.budget_growth = j["budget_growth"].get<double>();
  if (j.contains("per_run_eval_cap")) sc.per_run_eval_cap = j["per_run_eval_cap"].get<std::uint64_t>();
  if (j.contains("validation_runs")) sc.validation_runs = j["validation_runs"].get<int>();
  if (j.contains("max_seeds_per_race")) sc.max_seeds_per_race = j["max_seeds_per_race"].get<int>();
  if (j.contains("master_seed")) sc.master_seed = j["master_seed"].get<std::uint64_t>();
}

std::string audit_csv(const std::vector<AuditRow>& audit) {
  std::ostringstream out;
  out << "iteration,candidate,seed_index,evaluations,capped\n";
  for (const auto& row : audit)
    out << row.iteration << ',' << row.candidate << ',' << row.seed_index << ','
        << row.evaluations << ',' << (row.capped ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Parameter-control toolkit for the (1+(lambda,lambda)) GA on OneMax"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  int threads = 0;
  std::uint64_t master_seed = 1;
  app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--seed", master_seed, "Master seed")->capture_default_str();

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Run the GA and record evaluation counts");
  int sim_n = 100;
  std::string sim_policy = "theory";
  std::string sim_rounding = "nearest";
  std::string sim_accounting = "full";
  std::uint64_t sim_seeds = 100;
  std::string sim_seed_list;
  std::uint64_t sim_cap = 0;
  double sim_lambda = 0.0;
  sim->add_option("--n", sim_n, "Problem size")->required();
  sim->add_option("--policy", sim_policy, "Policy: theory|binned-theory[:a[:k]]|static:x|file");
  sim->add_option("--lambda", sim_lambda, "Shorthand for --policy static:<x>");
  sim->add_option("--rounding", sim_rounding, "nearest|stochastic|decoupled");
  sim->add_option("--accounting", sim_accounting, "full|stop (evaluation counting)");
  sim->add_option("--seeds", sim_seeds, "Number of runs (seeds 0..count-1 of the stream)");
  sim->add_option("--seed-list", sim_seed_list, "Explicit comma-separated run indices");
  sim->add_option("--cap", sim_cap, "Per-run evaluation cap (0: 100*n^2)");

  // ---- exact ----
  auto* exact = app.add_subcommand("exact", "Exact expected runtime of a policy");
  int ex_n = 100;
  std::string ex_policy = "theory";
  std::string ex_rounding = "nearest";
  bool ex_csv = false;
  exact->add_option("--n", ex_n, "Problem size")->required();
  exact->add_option("--policy", ex_policy, "Policy token or file");
  exact->add_option("--rounding", ex_rounding, "nearest|stochastic|decoupled");
  exact->add_flag("--csv", ex_csv, "Also write per-fitness remaining times as CSV");

  // ---- solve-optimal ----
  auto* solve = app.add_subcommand("solve-optimal", "Numerically optimal unrestricted policy");
  int so_n = 100;
  IntervalSearchConfig so_cfg;
  solve->add_option("--n", so_n, "Problem size")->required();
  solve->add_option("--epsilon", so_cfg.epsilon, "Boundary probe offset")->capture_default_str();
  solve->add_option("--tolerance", so_cfg.tolerance, "Refinement tolerance")->capture_default_str();
  solve->add_option("--scan-points", so_cfg.scan_points, "Interior pre-scan points")
      ->capture_default_str();
  solve->add_option("--batch", so_cfg.batch, "Probes per refinement step")->capture_default_str();
  solve->add_flag("--exhaustive", so_cfg.exhaustive, "Evaluate every capacity interval");

  // ---- solve-binned ----
  auto* sb = app.add_subcommand("solve-binned", "Best binned policy by evolution strategy");
  int sb_n = 100;
  int sb_bins = 0;
  std::string sb_rounding = "nearest";
  bool sb_decoupled = false;
  BinnedOptConfig sb_cfg;
  sb->add_option("--n", sb_n, "Problem size")->required();
  sb->add_option("--bins", sb_bins, "Bin count (0: ceil(log2 n))");
  sb->add_option("--rounding", sb_rounding, "nearest|stochastic");
  sb->add_flag("--decoupled", sb_decoupled, "Tune population size separately per bin");
  sb->add_option("--restarts", sb_cfg.restarts, "Independent restarts")->capture_default_str();
  sb->add_option("--es-population", sb_cfg.es.population, "ES population")->capture_default_str();
  sb->add_option("--es-iterations", sb_cfg.es.iterations, "ES iterations")->capture_default_str();
  bool sb_naive = false;
  sb->add_flag("--naive", sb_naive, "Optimize raw bin values (no reparametrization)");

  // ---- tune ----
  auto* tu = app.add_subcommand("tune", "Racing tuner over policy parameters");
  TuningScenario tu_sc;
  std::string tu_scenario_file;
  std::string tu_space = "binned";
  bool tu_no_capping = false;
  tu->add_option("--scenario", tu_scenario_file, "Scenario JSON (flags override)");
  tu->add_option("--n", tu_sc.n, "Problem size");
  tu->add_option("--space", tu_space, "static|binned|naive");
  tu->add_option("--bins", tu_sc.bins, "Bins for the binned space");
  tu->add_option("--budget", tu_sc.run_budget, "Total tuning runs");
  tu->add_option("--first-test", tu_sc.first_test, "Seeds before the first test");
  tu->add_option("--confidence", tu_sc.confidence, "Elimination test level");
  tu->add_flag("--no-capping", tu_no_capping, "Disable adaptive capping");
  tu->add_option("--cap-multiplier", tu_sc.cap_multiplier, "Capping bound multiplier");
  tu->add_option("--elites", tu_sc.elite_count, "Elite count");
  tu->add_option("--validation", tu_sc.validation_runs, "Validation runs");
  tu->add_option("--run-cap", tu_sc.per_run_eval_cap, "Per-run evaluation cap (0: 25n)");

  // ---- cascade ----
  auto* ca = app.add_subcommand("cascade", "Cascaded racing: k = 1..k_max bins");
  TuningScenario ca_sc;
  std::string ca_scenario_file;
  int ca_kmax = 0;
  std::uint64_t ca_stage_budget = 5000;
  bool ca_exact = false;
  ca->add_option("--scenario", ca_scenario_file, "Scenario JSON defaults");
  ca->add_option("--n", ca_sc.n, "Problem size")->required();
  ca->add_option("--k-max", ca_kmax, "Largest bin count (0: ceil(log2 n))");
  ca->add_option("--stage-budget", ca_stage_budget, "Runs per stage")->capture_default_str();
  ca->add_option("--first-test", ca_sc.first_test, "Seeds before the first test");
  ca->add_option("--validation", ca_sc.validation_runs, "Validation runs per stage");
  ca->add_option("--run-cap", ca_sc.per_run_eval_cap, "Per-run evaluation cap (0: 25n)");
  ca->add_flag("--exact", ca_exact, "Also report exact totals of stage winners");

  // ---- sweep ----
  auto* sw = app.add_subcommand("sweep", "Landscape sweeps over bin values");
  int sw_n = 500;
  std::string sw_base = "binned-theory";
  int sw_bin = -1;
  double sw_lo = 1.0, sw_hi = 40.0, sw_step = 0.1;
  bool sw_no_half = false;
  int sw_fixed_cap = 0;
  int sw_cap_lo = 0, sw_cap_hi = 0;
  int sw_second_bin = -1;
  std::string sw_rounding = "nearest";
  sw->add_option("--n", sw_n, "Problem size")->required();
  sw->add_option("--base", sw_base, "Binned base policy (file or binned-theory[:a[:k]])");
  sw->add_option("--bin", sw_bin, "Swept bin index (-1: last)");
  sw->add_option("--lo", sw_lo, "Range start")->capture_default_str();
  sw->add_option("--hi", sw_hi, "Range end")->capture_default_str();
  sw->add_option("--step", sw_step, "Grid step")->capture_default_str();
  sw->add_flag("--no-half-predecessors", sw_no_half, "Skip pred(x+0.5) probes");
  sw->add_option("--fixed-capacity", sw_fixed_cap, "Pin the swept bin's population size");
  sw->add_option("--cap-lo", sw_cap_lo, "Capacity grid start (lambda x capacity sweep)");
  sw->add_option("--cap-hi", sw_cap_hi, "Capacity grid end");
  sw->add_option("--two-bins", sw_second_bin, "Second swept bin index");
  sw->add_option("--rounding", sw_rounding, "nearest|stochastic");

  // ---- compare ----
  auto* cp = app.add_subcommand("compare", "Exact totals and policy overlay for several policies");
  int cp_n = 100;
  std::string cp_policies = "theory";
  int cp_restarts = 10;
  cp->add_option("--n", cp_n, "Problem size")->required();
  cp->add_option("--policies", cp_policies, "Comma list of policy tokens");
  cp->add_option("--restarts", cp_restarts, "Restarts for best-binned tokens");

  // ---- oracle (debugging; hidden) ----
  auto* orc = app.add_subcommand("oracle", "Brute-force expected runtime (n <= 8)");
  orc->group("");  // hidden from help
  int or_n = 4;
  std::string or_policy = "theory";
  std::string or_rounding = "nearest";
  orc->add_option("--n", or_n, "Problem size (<= 8)")->required();
  orc->add_option("--policy", or_policy, "Policy token or file");
  orc->add_option("--rounding", or_rounding, "nearest|stochastic|decoupled");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    ThreadPool::configure_global(threads);
    OutputSink sink;
    sink.out_dir = out_dir;

    if (*sim) {
      if (sim_lambda > 0.0) sim_policy = "static:" + fmt_full(sim_lambda);
      const PolicySpec spec = resolve_policy_token(sim_policy, sim_n, 10, master_seed);
      const Policy policy = spec.to_policy();
      const RoundingMode rounding = parse_rounding(sim_rounding, spec);
      RunConfig rc;
      rc.accounting = sim_accounting == "stop" ? Accounting::StopAtOptimum : Accounting::FullIteration;
      rc.eval_cap = sim_cap;
      std::vector<std::uint64_t> indices;
      if (!sim_seed_list.empty())
        for (const auto& tok : split_list(sim_seed_list)) indices.push_back(std::stoull(tok));
      else
        for (std::uint64_t i = 0; i < sim_seeds; ++i) indices.push_back(i);

      std::vector<RunRecord> runs(indices.size());
      ThreadPool::global().parallel_for(0, indices.size(), [&](std::size_t i) {
        runs[i] = run_ga(sim_n, policy, rounding, derive_seed(master_seed, 0x51, indices[i]), rc);
      });

      std::ostringstream csv;
      csv << "run_index,seed,evaluations,iterations,status\n";
      double sum = 0.0, sumsq = 0.0;
      std::uint64_t capped = 0;
      for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        csv << indices[i] << ',' << r.seed << ',' << r.evaluations << ',' << r.iterations << ','
            << (r.status == RunStatus::Capped ? "capped" : "optimum") << '\n';
        sum += static_cast<double>(r.evaluations);
        sumsq += static_cast<double>(r.evaluations) * static_cast<double>(r.evaluations);
        capped += r.status == RunStatus::Capped;
      }
      const double mean = sum / static_cast<double>(runs.size());
      const double var = runs.size() > 1
                             ? (sumsq - sum * mean) / static_cast<double>(runs.size() - 1)
                             : 0.0;
      sink.write("runs.csv", csv.str());
      nlohmann::ordered_json summary;
      summary["count"] = runs.size();
      summary["mean"] = mean;
      summary["sd"] = std::sqrt(std::max(0.0, var));
      summary["capped_runs"] = capped;
      summary["accounting"] = sim_accounting == "stop" ? "stop_at_optimum" : "full_iteration";
      // The two accounting modes differ by at most the final iteration's cost.
      summary["note"] = "full_iteration counts every evaluation of the final iteration; "
                        "stop_at_optimum stops at the first optimum evaluation";
      sink.write("summary.json", summary.dump(2) + "\n");
      nlohmann::ordered_json cfg{{"n", sim_n}, {"policy", sim_policy}, {"rounding", sim_rounding},
                                 {"accounting", sim_accounting}, {"runs", runs.size()},
                                 {"cap", sim_cap}};
      sink.finish("simulate", cfg, master_seed, threads);
      std::cout << "simulate: n=" << sim_n << " runs=" << runs.size() << " mean=" << fmt_sig(mean, 10)
                << " capped=" << capped << "\n";
      return capped > 0 ? kExitCapped : 0;
    }

    if (*exact) {
      const PolicySpec spec = resolve_policy_token(ex_policy, ex_n, 10, master_seed);
      const RoundingMode rounding = parse_rounding(ex_rounding, spec);
      DpEvaluator dp(ex_n);
      const RuntimeTable rt = dp.policy_runtime(spec.to_policy(), rounding);
      sink.write("exact.json", runtime_table_json(rt));
      if (ex_csv) {
        std::ostringstream csv;
        csv << "fitness,remaining,lambda\n";
        const Policy policy = spec.to_policy();
        for (int f = 0; f <= ex_n; ++f)
          csv << f << ',' << fmt_sig(rt.T[static_cast<std::size_t>(f)], 10) << ','
              << (f < ex_n ? fmt_full(policy.lambda_at(f)) : "") << '\n';
        sink.write("exact.csv", csv.str());
      }
      nlohmann::ordered_json cfg{{"n", ex_n}, {"policy", ex_policy}, {"rounding", ex_rounding}};
      sink.finish("exact", cfg, master_seed, threads);
      std::cout << "exact: n=" << ex_n << " policy=" << ex_policy
                << " total=" << fmt_sig(rt.total, 10) << "\n";
      return 0;
    }

    if (*solve) {
      DpEvaluator dp(so_n);
      const SolveResult res = optimal_policy(dp, so_cfg);
      sink.write("optimal_policy.csv", PolicySpec::from_policy(res.policy).to_csv_string());
      sink.write("optimal.json", runtime_table_json(res.table));
      std::ostringstream log;
      log << "fitness,lambda,remaining,intervals_probed,intervals_refined,column_evals,interior\n";
      for (const auto& d : res.decisions)
        log << d.fitness << ',' << fmt_full(d.lambda) << ',' << fmt_sig(d.value, 10) << ','
            << d.intervals_probed << ',' << d.intervals_refined << ',' << d.column_evals << ','
            << (d.interior ? 1 : 0) << '\n';
      sink.write("decisions.csv", log.str());
      nlohmann::ordered_json cfg{{"n", so_n},
                                 {"epsilon", so_cfg.epsilon},
                                 {"tolerance", so_cfg.tolerance},
                                 {"scan_points", so_cfg.scan_points},
                                 {"batch", so_cfg.batch},
                                 {"exhaustive", so_cfg.exhaustive}};
      sink.finish("solve-optimal", cfg, master_seed, threads);
      std::cout << "solve-optimal: n=" << so_n << " total=" << fmt_sig(res.table.total, 10) << "\n";
      return 0;
    }

    if (*sb) {
      DpEvaluator dp(sb_n);
      const int k = sb_bins > 0 ? sb_bins : BinScheme::max_bins(sb_n);
      const BinScheme scheme = BinScheme::geometric(sb_n, k);
      sb_cfg.master_seed = master_seed;
      const BinnedObjective obj =
          sb_rounding == "stochastic" ? BinnedObjective::Stochastic : BinnedObjective::Nearest;
      BinnedOptResult res;
      if (sb_decoupled)
        res = optimize_binned_decoupled(dp, scheme, sb_cfg);
      else if (sb_naive)
        res = naive_direct_optimize(dp, scheme, obj, sb_cfg);
      else
        res = optimize_binned(dp, scheme, obj, sb_cfg);

      PolicySpec spec = PolicySpec::from_binned(res.policy);
      if (!res.capacities.empty()) spec.capacities = res.capacities;
      sink.write("best_binned.json", spec.to_json_string());
      std::ostringstream conv;
      conv << "restart,generation,best_total\n";
      for (std::size_t r = 0; r < res.convergence.size(); ++r)
        for (std::size_t g = 0; g < res.convergence[r].size(); ++g)
          conv << r << ',' << g << ',' << fmt_sig(res.convergence[r][g], 10) << '\n';
      sink.write("convergence.csv", conv.str());
      nlohmann::ordered_json summary{{"total", res.total}, {"restarts", res.restarts_run}};
      sink.write("solve_binned_summary.json", summary.dump(2) + "\n");
      nlohmann::ordered_json cfg{{"n", sb_n},       {"bins", k},
                                 {"rounding", sb_rounding}, {"decoupled", sb_decoupled},
                                 {"naive", sb_naive},       {"restarts", sb_cfg.restarts},
                                 {"es_population", sb_cfg.es.population},
                                 {"es_iterations", sb_cfg.es.iterations}};
      sink.finish("solve-binned", cfg, master_seed, threads);
      std::cout << "solve-binned: n=" << sb_n << " k=" << k << " total=" << fmt_sig(res.total, 10)
                << "\n";
      return 0;
    }

    if (*tu) {
      if (!tu_scenario_file.empty()) apply_scenario_file(tu_sc, tu_scenario_file);
      for (const auto* opt : tu->get_options())
        (void)opt;  // flags already bound directly
      tu_sc.space = tu_space == "static" ? ParamSpace::Static
                    : tu_space == "naive" ? ParamSpace::Naive
                                          : ParamSpace::Binned;
      if (tu_no_capping) tu_sc.capping = false;
      tu_sc.master_seed = master_seed;
      const TuneResult res = tune(tu_sc);
      sink.write("tuned_policy.json", PolicySpec::from_policy(res.best_policy).to_json_string());
      sink.write("audit.csv", audit_csv(res.audit));
      nlohmann::ordered_json summary;
      summary["validation_mean"] = res.validation_mean;
      summary["runs_used"] = res.runs_used;
      auto elites = nlohmann::ordered_json::array();
      for (const auto& e : res.elites)
        elites.push_back({{"race_mean", e.race_mean}, {"validation_mean", e.validation_mean}});
      summary["elites"] = elites;
      sink.write("tune_summary.json", summary.dump(2) + "\n");
      sink.finish("tune", scenario_config_json(tu_sc), master_seed, threads);
      std::cout << "tune: n=" << tu_sc.n << " validation_mean=" << fmt_sig(res.validation_mean, 10)
                << " runs=" << res.runs_used << "\n";
      return 0;
    }

    if (*ca) {
      if (!ca_scenario_file.empty()) apply_scenario_file(ca_sc, ca_scenario_file);
      ca_sc.master_seed = master_seed;
      const int kmax = ca_kmax > 0 ? ca_kmax : BinScheme::max_bins(ca_sc.n);
      const auto stages = cascade(ca_sc.n, kmax, ca_stage_budget, ca_sc);
      std::optional<DpEvaluator> dp;
      if (ca_exact) dp.emplace(ca_sc.n);
      nlohmann::ordered_json summary = nlohmann::ordered_json::array();
      std::ostringstream audit_all;
      audit_all << "k,iteration,candidate,seed_index,evaluations,capped\n";
      for (const auto& stage : stages) {
        char name[64];
        std::snprintf(name, sizeof name, "tuned_k%d.json", stage.k);
        PolicySpec spec;
        spec.n = ca_sc.n;
        spec.binned = true;
        spec.boundaries = BinScheme::geometric(ca_sc.n, stage.k).boundaries;
        spec.lambdas = stage.result.best_params;
        sink.write(name, spec.to_json_string());
        nlohmann::ordered_json row{{"k", stage.k},
                                   {"validation_mean", stage.result.validation_mean},
                                   {"runs_used", stage.result.runs_used}};
        if (dp) row["exact_total"] = dp->policy_runtime(stage.result.best_policy,
                                                        RoundingMode::nearest()).total;
        summary.push_back(row);
        for (const auto& r : stage.result.audit)
          audit_all << stage.k << ',' << r.iteration << ',' << r.candidate << ',' << r.seed_index
                    << ',' << r.evaluations << ',' << (r.capped ? 1 : 0) << '\n';
      }
      sink.write("cascade_audit.csv", audit_all.str());
      sink.write("cascade_summary.json", summary.dump(2) + "\n");
      nlohmann::ordered_json cfg = scenario_config_json(ca_sc);
      cfg["k_max"] = kmax;
      cfg["stage_budget"] = ca_stage_budget;
      sink.finish("cascade", cfg, master_seed, threads);
      std::cout << "cascade: n=" << ca_sc.n << " stages=" << stages.size()
                << " final_validation_mean="
                << fmt_sig(stages.back().result.validation_mean, 10) << "\n";
      return 0;
    }

    if (*sw) {
      PolicySpec base_spec = resolve_policy_token(sw_base, sw_n, 10, master_seed);
      if (!base_spec.binned) throw std::invalid_argument("sweep base must be a binned policy");
      BinnedPolicy base(BinScheme::from_boundaries(sw_n, base_spec.boundaries), base_spec.lambdas);
      SweepSpec spec;
      spec.base = base;
      spec.bin_index = sw_bin >= 0 ? sw_bin : base.scheme.k - 1;
      spec.lo = sw_lo;
      spec.hi = sw_hi;
      spec.step = sw_step;
      spec.half_predecessors = !sw_no_half;
      const RoundingMode rounding =
          sw_rounding == "stochastic" ? RoundingMode::stochastic() : RoundingMode::nearest();
      DpEvaluator dp(sw_n);
      std::ostringstream csv;
      if (sw_second_bin >= 0) {
        csv << "lambda_a,lambda_b,total\n";
        for (const auto& r : sweep_two_bins(dp, spec, sw_second_bin, rounding))
          csv << fmt_full(r.a) << ',' << fmt_full(r.b) << ',' << fmt_sig(r.total, 10) << '\n';
      } else if (sw_cap_hi > 0) {
        csv << "lambda,capacity,total\n";
        for (const auto& r : sweep_lambda_capacity(dp, spec, sw_cap_lo, sw_cap_hi))
          csv << fmt_full(r.a) << ',' << static_cast<int>(r.b) << ',' << fmt_sig(r.total, 10)
              << '\n';
      } else if (sw_fixed_cap > 0) {
        csv << "lambda,total\n";
        for (const auto& r : sweep_1d_fixed_capacity(dp, spec, sw_fixed_cap))
          csv << fmt_full(r.lambda) << ',' << fmt_sig(r.total, 10) << '\n';
      } else {
        csv << "lambda,total\n";
        for (const auto& r : sweep_1d(dp, spec, rounding))
          csv << fmt_full(r.lambda) << ',' << fmt_sig(r.total, 10) << '\n';
      }
      sink.write("sweep.csv", csv.str());
      nlohmann::ordered_json cfg{{"n", sw_n},   {"base", sw_base},   {"bin", spec.bin_index},
                                 {"lo", sw_lo}, {"hi", sw_hi},       {"step", sw_step},
                                 {"rounding", sw_rounding},          {"fixed_capacity", sw_fixed_cap},
                                 {"cap_lo", sw_cap_lo}, {"cap_hi", sw_cap_hi},
                                 {"two_bins", sw_second_bin}};
      sink.finish("sweep", cfg, master_seed, threads);
      std::cout << "sweep: n=" << sw_n << " rows written\n";
      return 0;
    }

    if (*cp) {
      DpEvaluator dp(cp_n);
      const auto tokens = split_list(cp_policies);
      if (tokens.empty()) throw std::invalid_argument("compare: need at least one policy");
      std::vector<Policy> policies;
      std::vector<double> totals;
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const auto& tok : tokens) {
        const PolicySpec spec = resolve_policy_token(tok, cp_n, cp_restarts, master_seed);
        const Policy policy = spec.to_policy();
        const RuntimeTable rt =
            spec.has_capacities()
                ? dp.policy_runtime_explicit(policy, spec.capacity_table())
                : dp.policy_runtime(policy, RoundingMode::nearest());
        policies.push_back(policy);
        totals.push_back(rt.total);
        rows.push_back({{"policy", tok}, {"total", rt.total}});
        std::cout << "compare: " << tok << " total=" << fmt_sig(rt.total, 10) << "\n";
      }
      sink.write("compare.json", rows.dump(2) + "\n");
      // Overlay for the interesting upper half, distance log-scaled.
      std::ostringstream overlay;
      overlay << "fitness,log_distance";
      for (const auto& tok : tokens) overlay << ',' << tok;
      overlay << '\n';
      for (int f = cp_n / 2; f < cp_n; ++f) {
        overlay << f << ',' << fmt_full(std::log(static_cast<double>(cp_n - f)));
        for (const auto& p : policies) overlay << ',' << fmt_full(p.lambda_at(f));
        overlay << '\n';
      }
      sink.write("compare_overlay.csv", overlay.str());
      nlohmann::ordered_json cfg{{"n", cp_n}, {"policies", cp_policies}};
      sink.finish("compare", cfg, master_seed, threads);
      return 0;
    }

    if (*orc) {
      const PolicySpec spec = resolve_policy_token(or_policy, or_n, 10, master_seed);
      const RoundingMode rounding = parse_rounding(or_rounding, spec);
      const auto table = oracle_runtime_table(or_n, spec.to_policy(), rounding);
      const double total = oracle_runtime_total(or_n, spec.to_policy(), rounding);
      std::cout << "oracle: n=" << or_n << " total=" << fmt_sig(total, 10) << " T=[";
      for (std::size_t i = 0; i < table.size(); ++i)
        std::cout << (i ? ", " : "") << fmt_sig(table[i], 10);
      std::cout << "]\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ollga
