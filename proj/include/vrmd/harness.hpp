#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vrmd/algorithms.hpp"

namespace vrmd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AlgoKind { kSmd, kSvramd, kVrAdagrad, kVrRmsprop };
enum class FamilyConfigKind { kEuclidean, kScaledEuclidean, kAdagrad, kRmsprop };
enum class HpMode { kTheorem, kExplicit };
enum class TheoremRegime { kNonconvex, kPl };

struct ProblemSpec {
  std::string kind;  // sigmoid-regression | pl-quadratic | linear-least-squares
  std::int64_t n = 0;
  int d = 0;
  double noise = 0.1;
  double mu = 0.0;
  double L = 0.0;
  double lambda = 0.0;  // l1 weight; 0 selects the zero regularizer
  std::uint64_t seed = 1;

  bool operator==(const ProblemSpec&) const = default;
};

struct FamilySpec {
  FamilyConfigKind kind = FamilyConfigKind::kEuclidean;
  double m = 0.0;  // 0 => kind default (euclidean/scaled: 1, diagonal: 1e-3)
  double beta = 0.999;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kConstant;
  double base = 0.0;  // 0 => 1/L
  std::int64_t warmup_epochs = 0;
  std::vector<std::int64_t> decay_epochs;
  double decay_factor = 0.1;
  std::int64_t period_epochs = 0;
};

struct HpSpec {
  HpMode mode = HpMode::kTheorem;
  TheoremRegime regime = TheoremRegime::kNonconvex;
  double eps = 0.0;
  std::optional<std::int64_t> b;
  std::optional<std::int64_t> r;  // batch ratio, B = min(n, r*b)
  std::optional<double> delta_f;
  std::optional<double> sigma2;
  std::optional<std::int64_t> T_override;
  // explicit mode
  double alpha = 0.0;
  std::optional<std::int64_t> B;
  std::optional<std::int64_t> K;
  std::optional<std::int64_t> T;
  OutputRule output_rule = OutputRule::kUniformSample;
};

struct ExperimentConfig {
  std::string label = "experiment";
  ProblemSpec problem;
  FamilySpec family;
  ScheduleSpec schedule;
  AlgoKind algo = AlgoKind::kSmd;
  HpSpec hp;
  std::vector<std::uint64_t> seeds;
  std::int64_t checkpoint_cadence = 1;
  std::string out_dir = "runs";
  std::optional<std::int64_t> epoch_iters;  // iterations per epoch; default ceil(n/b)
  std::optional<DenseVector> x1;
};

// Strict INI-style parser; unknown sections/keys and malformed or missing
// values are reported with their field path.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Fully resolved run inputs: problem built, constants estimated, parameters
// derived, schedule mapped from epochs to iterations.
struct PreparedExperiment {
  FiniteSumProblem problem;
  HyperParams hp;
  Schedule schedule;
  ProximalFamily family;  // fresh copy handed to every run
  double sigma2 = 0.0;
  double delta_f = 0.0;
  double family_floor = 1.0;
  std::int64_t iters_per_epoch = 1;
  std::vector<std::string> warnings;
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

struct SummaryRow {
  std::string label;
  std::size_t num_seeds = 0;
  double eps = 0.0;
  std::optional<std::int64_t> median_sfo_to_eps;  // empty => not reached
  double mean_final_gx_sq = 0.0;
  double stderr_final_gx_sq = 0.0;
  double mean_final_F = 0.0;
  std::vector<std::int64_t> t_stars;
};

struct RunFlags {
  std::optional<std::string> out_dir;
  int parallelism = 1;
  std::optional<std::int64_t> checkpoint_cadence;
  std::optional<double> eps;
  bool trace_timing = false;  // volatile wall_ms column breaks byte reproducibility
  bool write_files = true;
  bool quiet = true;
};

struct ExperimentOutcome {
  std::vector<std::pair<std::uint64_t, RunResult>> runs;
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  SummaryRow summary;
  std::vector<std::string> trace_files;
  std::string summary_file;
};

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunFlags& flags = {});

struct CompareRow {
  std::string label;
  std::optional<std::int64_t> median_sfo_to_eps;
  double mean_final_gx_sq = 0.0;
  double mean_final_F = 0.0;
};

// Runs every config (all must share the problem spec) and tabulates the
// median gradient-evaluation cost of reaching eps.
std::vector<CompareRow> compare(const std::vector<ExperimentConfig>& configs, double eps,
                                const RunFlags& flags = {});

std::string render_compare_table(const std::vector<CompareRow>& rows, double eps);

// First checkpoint whose squared generalized-gradient norm is <= eps;
// nullopt when never reached.
std::optional<std::int64_t> sfo_to_eps(const std::vector<TraceRecord>& trace, double eps);

// 17 significant digits so values round-trip exactly.
std::string format_g17(double v);

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace,
                     bool with_timing);

}  // namespace vrmd
