#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrmd/harness.hpp"
#include "vrmd/verify.hpp"

namespace {

int cmd_run(const std::string& config_path, const vrmd::RunFlags& flags) {
  const vrmd::ExperimentConfig cfg = vrmd::parse_config(config_path);
  const vrmd::ExperimentOutcome outcome = vrmd::run_experiment(cfg, flags);
  for (const auto& [seed, err] : outcome.failures) {
    std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(seed),
                 err.c_str());
  }
  std::printf("%zu run(s) completed, %zu failed\n", outcome.runs.size(),
              outcome.failures.size());
  for (const auto& f : outcome.trace_files) std::printf("trace: %s\n", f.c_str());
  if (!outcome.summary_file.empty()) std::printf("summary: %s\n", outcome.summary_file.c_str());
  const auto& s = outcome.summary;
  std::printf("final gx_sq: %s +/- %s | final F: %s\n",
              vrmd::format_g17(s.mean_final_gx_sq).c_str(),
              vrmd::format_g17(s.stderr_final_gx_sq).c_str(),
              vrmd::format_g17(s.mean_final_F).c_str());
  if (s.eps > 0.0) {
    if (s.median_sfo_to_eps) {
      std::printf("median sfo to eps=%s: %lld\n", vrmd::format_g17(s.eps).c_str(),
                  static_cast<long long>(*s.median_sfo_to_eps));
    } else {
      std::printf("median sfo to eps=%s: not reached\n", vrmd::format_g17(s.eps).c_str());
    }
  }
  return outcome.failures.empty() ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& config_paths, double eps,
                const vrmd::RunFlags& flags) {
  std::vector<vrmd::ExperimentConfig> configs;
  configs.reserve(config_paths.size());
  for (const auto& path : config_paths) configs.push_back(vrmd::parse_config(path));
  const auto rows = vrmd::compare(configs, eps, flags);
  std::fputs(vrmd::render_compare_table(rows, eps).c_str(), stdout);
  return 0;
}

int cmd_verify() {
  const auto results = vrmd::run_verification();
  bool all = true;
  for (const auto& r : results) {
    std::printf("%-4s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vrmd: variance-reduced adaptive mirror descent experiments"};
  app.require_subcommand(1);

  vrmd::RunFlags flags;
  flags.quiet = false;
  std::string out_dir;
  std::int64_t cadence = 0;
  double eps_flag = 0.0;

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "execute one experiment config");
  run_cmd->add_option("config", run_config, "config file")->required();
  run_cmd->add_option("--out-dir", out_dir, "output directory override");
  run_cmd->add_option("--parallelism", flags.parallelism, "max concurrent seeds")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--checkpoint-every", cadence, "checkpoint cadence override")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--eps", eps_flag, "stationarity threshold for the summary");
  run_cmd->add_flag("--trace-timing", flags.trace_timing,
                    "write measured wall_ms into traces (breaks byte reproducibility)");

  std::vector<std::string> cmp_configs;
  double cmp_eps = 0.0;
  auto* cmp_cmd = app.add_subcommand("compare", "tabulate SFO-to-eps across configs");
  cmp_cmd->add_option("configs", cmp_configs, "config files (sharing one problem)")
      ->required()
      ->expected(-2);
  cmp_cmd->add_option("--eps", cmp_eps, "stationarity threshold")->required();
  cmp_cmd->add_option("--out-dir", out_dir, "output directory override");
  cmp_cmd->add_option("--parallelism", flags.parallelism, "max concurrent seeds")
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--checkpoint-every", cadence, "checkpoint cadence override")
      ->check(CLI::PositiveNumber);

  auto* verify_cmd =
      app.add_subcommand("verify", "run the property suites and oracle cross-checks");

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) flags.out_dir = out_dir;
  if (cadence > 0) flags.checkpoint_cadence = cadence;
  if (eps_flag > 0.0) flags.eps = eps_flag;

  try {
    if (run_cmd->parsed()) return cmd_run(run_config, flags);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_configs, cmp_eps, flags);
    if (verify_cmd->parsed()) return cmd_verify();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
