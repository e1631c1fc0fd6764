// Command line front end: one subcommand per experiment kind plus `suite`,
// which runs the release acceptance criteria.
//
// Exit codes: 0 all checks pass, 1 violations, 2 invalid input or config,
// 3 numerical abort.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bosecone/harness.hpp"
#include "criteria.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  CLI::Option* cfg = cmd->add_option("--config", args.config_path,
                                     "Path to the JSON experiment config");
  if (config_required) cfg->required();
  cmd->add_option("--seed", args.seed, "Override the seed recorded in the config");
  cmd->add_option("--out", args.out_dir, "Directory for report.json and CSV artifacts");
  cmd->add_option("--threads", args.threads, "Worker threads for seed sweeps")
      ->check(CLI::Range(1, 64));
}

int run_experiment(bosecone::ExperimentConfig config, const CommonArgs& args) {
  if (args.seed) {
    config.seed = *args.seed;
    config.raw["seed"] = *args.seed;
  }
  auto t0 = std::chrono::steady_clock::now();
  bosecone::RunReport report = bosecone::run(config, args.out_dir, args.threads);
  double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  for (const bosecone::BoundReport& check : report.checks) {
    const char* tag = check.out_of_scope ? "skip" : (check.satisfied ? " ok " : "VIOL");
    std::printf("[%s] %-28s measured=%.6g bound=%.6g%s%s\n", tag, check.name.c_str(),
                check.measured, check.bound, check.note.empty() ? "" : "  ",
                check.note.c_str());
  }
  std::printf("%s: %zu checks, %d violations -> %s (%s/report.json)\n",
              report.kind.c_str(), report.checks.size(), report.violations,
              report.all_pass ? "PASS" : "FAIL", args.out_dir.c_str());
  std::fprintf(stderr, "wall clock: %.1f ms\n", ms);
  return report.all_pass ? 0 : 1;
}

int run_suite(int criterion, int threads) {
  using namespace bosecone::acceptance;
  std::vector<CriterionResult> results;
  if (criterion != 0) {
    results.push_back(run_criterion(criterion, threads));
  } else {
    results = run_all(threads);
  }
  int failed = 0;
  double total = 0.0;
  for (const CriterionResult& r : results) {
    std::printf("%s\n", format_line(r).c_str());
    if (!r.pass) ++failed;
    total += r.seconds;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  std::fprintf(stderr, "wall clock: %.1f ms\n", total * 1e3);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact small-lattice boson dynamics, discrete transport distances, and "
      "speed-limit certification"};
  app.require_subcommand(1);

  CommonArgs simulate_args, ot_args, bound_args, protocol_args, oracle_args;
  add_common(app.add_subcommand("simulate", "Evolve a staged schedule and record the trajectory"),
             simulate_args, true);
  add_common(app.add_subcommand("ot", "Solve transport instances by both routes"), ot_args,
             true);
  add_common(app.add_subcommand("bound-check", "Randomized sweeps against the certified bounds"),
             bound_args, true);
  CLI::App* protocol_cmd =
      app.add_subcommand("protocol", "Build and execute a named transfer protocol");
  add_common(protocol_cmd, protocol_args, false);
  std::string variant;
  int length = 0, bosons = 0, samples = 8;
  double j_amp = 1.0, u_strength = 1e5;
  protocol_cmd->add_option("--variant", variant,
                           "sequential | assisted | stepwise (alternative to --config)");
  protocol_cmd->add_option("--length", length, "Chain length");
  protocol_cmd->add_option("--bosons", bosons, "Boson number (sequential variant)");
  protocol_cmd->add_option("--hop", j_amp, "Hopping energy scale J");
  protocol_cmd->add_option("--interaction", u_strength, "Blockade strength U");
  protocol_cmd->add_option("--samples", samples, "Trajectory samples per stage");
  add_common(app.add_subcommand("oracle", "Cross-validate the independent numerical routes"),
             oracle_args, true);

  CLI::App* suite_cmd = app.add_subcommand("suite", "Run the acceptance criteria");
  int suite_criterion = 0;
  int suite_threads = 1;
  suite_cmd->add_option("--criterion", suite_criterion, "Run a single criterion (1-10)")
      ->check(CLI::Range(1, 10));
  suite_cmd->add_option("--threads", suite_threads, "Worker threads")
      ->check(CLI::Range(1, 64));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are invalid input
  }

  try {
    if (suite_cmd->parsed()) return run_suite(suite_criterion, suite_threads);
    for (auto& [name, args] : {std::pair<const char*, CommonArgs*>{"simulate", &simulate_args},
                               {"ot", &ot_args},
                               {"bound-check", &bound_args},
                               {"oracle", &oracle_args}}) {
      if (app.get_subcommand(name)->parsed())
        return run_experiment(bosecone::load_config_file(args->config_path), *args);
    }
    if (protocol_cmd->parsed()) {
      bosecone::ExperimentConfig config;
      if (!protocol_args.config_path.empty()) {
        config = bosecone::load_config_file(protocol_args.config_path);
      } else {
        if (variant.empty() || length == 0)
          throw bosecone::ValidationError(
              "protocol: pass --config, or --variant and --length");
        nlohmann::json doc{{"kind", "protocol"}, {"seed", 1},      {"variant", variant},
                           {"length", length},   {"j", j_amp},     {"u", u_strength},
                           {"samples_per_stage", samples}};
        if (bosons > 0) doc["n_bosons"] = bosons;
        config = bosecone::parse_config(doc);
      }
      return run_experiment(std::move(config), protocol_args);
    }
  } catch (const bosecone::ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const bosecone::NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  }
  return 2;
}
