#include "vrmd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "vrmd/metrics.hpp"
#include "vrmd/verify.hpp"

namespace vrmd {

namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

struct RawConfig {
  std::string origin;
  std::map<std::string, std::map<std::string, RawEntry>> sections;

  RawEntry* find(const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }
};

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ConfigError(origin + ": " + what);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

RawConfig tokenize(const std::string& text, const std::string& origin) {
  static const std::set<std::string> kSections = {"problem",   "family", "schedule",
                                                  "algorithm", "hyperparams", "run"};
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, "line " + std::to_string(line_no) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (kSections.count(section) == 0) {
        fail(origin, "unknown-key: section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, "line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) fail(origin, "line " + std::to_string(line_no) + ": key outside a section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(origin, "line " + std::to_string(line_no) + ": empty key or value");
    }
    auto& sec = raw.sections[section];
    if (sec.count(key) != 0) {
      fail(origin, "malformed-value: duplicate key " + section + "." + key);
    }
    sec[key] = RawEntry{value, line_no, false};
  }
  return raw;
}

double parse_double(RawConfig& raw, const std::string& path, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(raw.origin, "malformed-value: " + path + " = '" + value + "' (expected a real number)");
  }
}

std::int64_t parse_int(RawConfig& raw, const std::string& path, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    fail(raw.origin, "malformed-value: " + path + " = '" + value + "' (expected an integer)");
  }
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : value) {
    if (c == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

struct Getter {
  RawConfig& raw;
  std::string section;

  std::optional<std::string> str(const std::string& key) {
    RawEntry* e = raw.find(section, key);
    if (e == nullptr) return std::nullopt;
    return e->value;
  }
  std::optional<double> real(const std::string& key) {
    auto v = str(key);
    if (!v) return std::nullopt;
    return parse_double(raw, section + "." + key, *v);
  }
  std::optional<std::int64_t> integer(const std::string& key) {
    auto v = str(key);
    if (!v) return std::nullopt;
    return parse_int(raw, section + "." + key, *v);
  }
  std::string require(const std::string& key) {
    auto v = str(key);
    if (!v) fail(raw.origin, "missing-constant: " + section + "." + key);
    return *v;
  }
};

void check_all_used(const RawConfig& raw) {
  for (const auto& [section, entries] : raw.sections) {
    for (const auto& [key, entry] : entries) {
      if (!entry.used) {
        throw ConfigError(raw.origin + ": unknown-key: " + section + "." + key + " (line " +
                          std::to_string(entry.line) + ")");
      }
    }
  }
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
  return out;
}

double resolve_family_floor(const ExperimentConfig& cfg) {
  switch (cfg.family.kind) {
    case FamilyConfigKind::kEuclidean:
      return 1.0;
    case FamilyConfigKind::kScaledEuclidean:
      return cfg.family.m > 0.0 ? cfg.family.m : 1.0;
    case FamilyConfigKind::kAdagrad:
    case FamilyConfigKind::kRmsprop:
      return cfg.family.m > 0.0 ? cfg.family.m : 1e-3;
  }
  return 1.0;
}

FiniteSumProblem build_problem(const ProblemSpec& spec) {
  RngStream rng(spec.seed, make_stream_id(StreamRole::kProblemData));
  const Regularizer reg =
      spec.lambda > 0.0 ? Regularizer::l1(spec.lambda) : Regularizer::zero();
  if (spec.kind == "sigmoid-regression") {
    return make_sigmoid_regression(rng, spec.n, spec.d, spec.noise, reg);
  }
  if (spec.kind == "pl-quadratic") {
    return make_pl_quadratic(rng, spec.n, spec.d, spec.mu, spec.L, reg);
  }
  if (spec.kind == "linear-least-squares") {
    return make_linear_least_squares(rng, spec.n, spec.d, spec.noise, reg);
  }
  throw ConfigError("malformed-value: problem.kind = '" + spec.kind + "'");
}

// Deterministic warm trajectory shared by sigma^2 probes and the Delta_F
// fallback: a short single-loop run seeded from the problem seed.
struct WarmReference {
  std::vector<DenseVector> probes;
  double min_F = std::numeric_limits<double>::infinity();
};

WarmReference warm_reference(const FiniteSumProblem& p, const ProblemSpec& spec) {
  WarmReference ref;
  DenseVector x(static_cast<std::size_t>(p.d), 0.0);
  ref.probes.push_back(x);
  ref.min_F = eval_F(p, x);
  if (p.n < 2) return ref;
  HyperParams hp;
  hp.alpha = 0.5 / p.consts.L;
  hp.b = std::min<std::int64_t>(p.n, 16);
  hp.B = hp.b;
  hp.T = 64;
  RunHooks hooks;
  std::int64_t step = 0;
  hooks.on_outer = [&](std::int64_t, const DenseVector&, const DenseVector& x_next) {
    if (++step % 4 == 0) {
      ref.probes.push_back(x_next);
      ref.min_F = std::min(ref.min_F, eval_F(p, x_next));
    }
  };
  RunOptions opt;
  opt.hooks = &hooks;
  opt.collect_trace = false;
  run_adaptive_smd(p, ProximalFamily::euclidean(), hp, Schedule::constant(),
                   spec.seed ^ 0x9E3779B9ULL, opt);
  return ref;
}

Schedule build_schedule(const ScheduleSpec& spec, double L, std::int64_t iters_per_epoch) {
  const double base = spec.base > 0.0 ? spec.base : 1.0 / L;
  switch (spec.kind) {
    case ScheduleKind::kConstant:
      return Schedule::constant();
    case ScheduleKind::kWarmupStepDecay: {
      std::vector<std::int64_t> decay;
      decay.reserve(spec.decay_epochs.size());
      for (std::int64_t e : spec.decay_epochs) decay.push_back(e * iters_per_epoch);
      return Schedule::warmup_step_decay(base, spec.warmup_epochs * iters_per_epoch,
                                         std::move(decay), spec.decay_factor);
    }
    case ScheduleKind::kCosineWarmRestart:
      return Schedule::cosine_warm_restart(base, std::max<std::int64_t>(1, spec.period_epochs *
                                                                               iters_per_epoch));
  }
  return Schedule::constant();
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  ExperimentConfig cfg;

  {
    Getter g{raw, "problem"};
    cfg.problem.kind = g.require("kind");
    cfg.problem.n = parse_int(raw, "problem.n", g.require("n"));
    cfg.problem.d = static_cast<int>(parse_int(raw, "problem.d", g.require("d")));
    if (cfg.problem.n < 1 || cfg.problem.d < 1) {
      fail(origin, "malformed-value: problem.n and problem.d must be >= 1");
    }
    if (auto v = g.real("noise")) cfg.problem.noise = *v;
    if (auto v = g.real("lambda")) cfg.problem.lambda = *v;
    if (auto v = g.integer("seed")) cfg.problem.seed = static_cast<std::uint64_t>(*v);
    if (cfg.problem.kind == "pl-quadratic") {
      cfg.problem.mu = parse_double(raw, "problem.mu", g.require("mu"));
      cfg.problem.L = parse_double(raw, "problem.L", g.require("L"));
    } else {
      if (g.real("mu") || g.real("L")) {
        fail(origin, "unknown-key: problem.mu/problem.L apply to pl-quadratic only");
      }
    }
  }

  {
    Getter g{raw, "algorithm"};
    const std::string kind = g.require("kind");
    if (kind == "smd") {
      cfg.algo = AlgoKind::kSmd;
    } else if (kind == "svramd") {
      cfg.algo = AlgoKind::kSvramd;
    } else if (kind == "vr-adagrad") {
      cfg.algo = AlgoKind::kVrAdagrad;
    } else if (kind == "vr-rmsprop") {
      cfg.algo = AlgoKind::kVrRmsprop;
    } else {
      fail(origin, "malformed-value: algorithm.kind = '" + kind + "'");
    }
  }

  {
    Getter g{raw, "family"};
    std::optional<std::string> kind = g.str("kind");
    if (cfg.algo == AlgoKind::kVrAdagrad) {
      if (kind && *kind != "adagrad") fail(origin, "malformed-value: family.kind must be adagrad for vr-adagrad");
      cfg.family.kind = FamilyConfigKind::kAdagrad;
    } else if (cfg.algo == AlgoKind::kVrRmsprop) {
      if (kind && *kind != "rmsprop") fail(origin, "malformed-value: family.kind must be rmsprop for vr-rmsprop");
      cfg.family.kind = FamilyConfigKind::kRmsprop;
    } else if (kind) {
      if (*kind == "euclidean") {
        cfg.family.kind = FamilyConfigKind::kEuclidean;
      } else if (*kind == "scaled-euclidean") {
        cfg.family.kind = FamilyConfigKind::kScaledEuclidean;
      } else if (*kind == "adagrad") {
        cfg.family.kind = FamilyConfigKind::kAdagrad;
      } else if (*kind == "rmsprop") {
        cfg.family.kind = FamilyConfigKind::kRmsprop;
      } else {
        fail(origin, "malformed-value: family.kind = '" + *kind + "'");
      }
    }
    if (auto v = g.real("m")) {
      if (cfg.family.kind == FamilyConfigKind::kEuclidean && *v != 1.0) {
        fail(origin, "malformed-value: family.m is fixed at 1 for the euclidean family");
      }
      if (!(*v > 0.0)) fail(origin, "malformed-value: family.m must be positive");
      cfg.family.m = *v;
    }
    if (auto v = g.real("beta")) {
      if (cfg.family.kind != FamilyConfigKind::kRmsprop) {
        fail(origin, "unknown-key: family.beta applies to the rmsprop family only");
      }
      if (!(*v > 0.0 && *v <= 1.0)) fail(origin, "malformed-value: family.beta must be in (0,1]");
      cfg.family.beta = *v;
    }
  }

  {
    Getter g{raw, "schedule"};
    if (auto kind = g.str("kind")) {
      if (*kind == "constant") {
        cfg.schedule.kind = ScheduleKind::kConstant;
      } else if (*kind == "warmup-step-decay") {
        cfg.schedule.kind = ScheduleKind::kWarmupStepDecay;
      } else if (*kind == "cosine-warm-restart") {
        cfg.schedule.kind = ScheduleKind::kCosineWarmRestart;
      } else {
        fail(origin, "malformed-value: schedule.kind = '" + *kind + "'");
      }
    }
    if (auto v = g.real("base")) cfg.schedule.base = *v;
    if (auto v = g.integer("warmup-epochs")) cfg.schedule.warmup_epochs = *v;
    if (auto v = g.str("decay-epochs")) {
      for (const auto& part : split_list(*v)) {
        cfg.schedule.decay_epochs.push_back(parse_int(raw, "schedule.decay-epochs", part));
      }
    }
    if (auto v = g.real("decay-factor")) cfg.schedule.decay_factor = *v;
    if (auto v = g.integer("period-epochs")) cfg.schedule.period_epochs = *v;
    if (cfg.schedule.kind == ScheduleKind::kWarmupStepDecay && cfg.schedule.warmup_epochs < 0) {
      fail(origin, "malformed-value: schedule.warmup-epochs must be >= 0");
    }
    if (cfg.schedule.kind == ScheduleKind::kCosineWarmRestart && cfg.schedule.period_epochs < 1) {
      fail(origin, "missing-constant: schedule.period-epochs (required for cosine-warm-restart)");
    }
  }

  {
    Getter g{raw, "hyperparams"};
    const std::string mode = g.require("mode");
    const bool vr_algo = cfg.algo != AlgoKind::kSmd;
    if (mode == "theorem") {
      cfg.hp.mode = HpMode::kTheorem;
      cfg.hp.eps = parse_double(raw, "hyperparams.eps", g.require("eps"));
      if (!(cfg.hp.eps > 0.0)) fail(origin, "malformed-value: hyperparams.eps must be positive");
      const std::string regime = g.require("regime");
      if (regime == "nonconvex") {
        cfg.hp.regime = TheoremRegime::kNonconvex;
      } else if (regime == "pl") {
        cfg.hp.regime = TheoremRegime::kPl;
      } else {
        fail(origin, "malformed-value: hyperparams.regime = '" + regime + "'");
      }
      if (cfg.hp.regime == TheoremRegime::kPl && cfg.problem.kind != "pl-quadratic") {
        fail(origin, "missing-constant: problem.mu (pl regime requires a pl-quadratic problem)");
      }
      if (vr_algo) {
        cfg.hp.b = parse_int(raw, "hyperparams.b", g.require("b"));
      } else if (auto v = g.integer("b")) {
        cfg.hp.b = *v;
      }
      if (auto v = g.integer("r")) cfg.hp.r = *v;
      if (auto v = g.real("delta-f")) cfg.hp.delta_f = *v;
      if (auto v = g.real("sigma2")) cfg.hp.sigma2 = *v;
      if (auto v = g.integer("T")) cfg.hp.T_override = *v;
    } else if (mode == "explicit") {
      cfg.hp.mode = HpMode::kExplicit;
      cfg.hp.alpha = parse_double(raw, "hyperparams.alpha", g.require("alpha"));
      cfg.hp.b = parse_int(raw, "hyperparams.b", g.require("b"));
      cfg.hp.T = parse_int(raw, "hyperparams.T", g.require("T"));
      if (auto v = g.integer("B")) cfg.hp.B = *v;
      if (auto v = g.integer("K")) cfg.hp.K = *v;
      if (auto v = g.integer("r")) cfg.hp.r = *v;
      if (vr_algo && !cfg.hp.B && !cfg.hp.r) {
        fail(origin, "missing-constant: hyperparams.B (or hyperparams.r) for a variance-reduced run");
      }
      if (auto v = g.real("eps")) cfg.hp.eps = *v;
      if (auto rule = g.str("output-rule")) {
        if (*rule == "uniform-sample") {
          cfg.hp.output_rule = OutputRule::kUniformSample;
        } else if (*rule == "last-iterate") {
          cfg.hp.output_rule = OutputRule::kLastIterate;
        } else {
          fail(origin, "malformed-value: hyperparams.output-rule = '" + *rule + "'");
        }
      }
    } else {
      fail(origin, "malformed-value: hyperparams.mode = '" + mode + "'");
    }
  }

  {
    Getter g{raw, "run"};
    const std::string seeds = g.require("seeds");
    std::set<std::uint64_t> seen;
    for (const auto& part : split_list(seeds)) {
      const auto s = static_cast<std::uint64_t>(parse_int(raw, "run.seeds", part));
      if (!seen.insert(s).second) fail(origin, "malformed-value: run.seeds contains duplicates");
      cfg.seeds.push_back(s);
    }
    if (cfg.seeds.empty()) fail(origin, "malformed-value: run.seeds must be nonempty");
    if (auto v = g.integer("checkpoint-cadence")) {
      if (*v < 1) fail(origin, "malformed-value: run.checkpoint-cadence must be >= 1");
      cfg.checkpoint_cadence = *v;
    }
    if (auto v = g.str("out-dir")) cfg.out_dir = *v;
    if (auto v = g.str("label")) cfg.label = *v;
    if (auto v = g.integer("epoch-iters")) {
      if (*v < 1) fail(origin, "malformed-value: run.epoch-iters must be >= 1");
      cfg.epoch_iters = *v;
    }
    if (auto v = g.str("x1")) {
      DenseVector x1;
      for (const auto& part : split_list(*v)) {
        x1.push_back(parse_double(raw, "run.x1", part));
      }
      if (static_cast<std::int64_t>(x1.size()) != cfg.problem.d) {
        fail(origin, "malformed-value: run.x1 must list exactly problem.d values");
      }
      cfg.x1 = std::move(x1);
    }
  }

  check_all_used(raw);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(ss.str(), path);
  if (cfg.label == "experiment") {
    cfg.label = std::filesystem::path(path).stem().string();
  }
  return cfg;
}

PreparedExperiment prepare_experiment(const ExperimentConfig& cfg) {
  PreparedExperiment prep;
  prep.problem = build_problem(cfg.problem);
  const FiniteSumProblem& p = prep.problem;
  prep.family_floor = resolve_family_floor(cfg);
  const double m = prep.family_floor;
  const double L = p.consts.L;

  std::optional<WarmReference> warm;
  auto need_warm = [&]() -> WarmReference& {
    if (!warm) warm = warm_reference(p, cfg.problem);
    return *warm;
  };

  if (cfg.hp.mode == HpMode::kTheorem) {
    double sigma2;
    if (cfg.hp.sigma2) {
      sigma2 = *cfg.hp.sigma2;
    } else if (p.n >= 2) {
      sigma2 = estimate_sigma2(p, need_warm().probes);
    } else {
      sigma2 = 0.0;
    }
    prep.sigma2 = sigma2;

    double delta_f;
    if (cfg.hp.delta_f) {
      delta_f = *cfg.hp.delta_f;
    } else if (p.consts.F_star) {
      const DenseVector x1 =
          cfg.x1 ? *cfg.x1 : DenseVector(static_cast<std::size_t>(p.d), 0.0);
      delta_f = eval_F(p, x1) - *p.consts.F_star;
    } else {
      const DenseVector x1 =
          cfg.x1 ? *cfg.x1 : DenseVector(static_cast<std::size_t>(p.d), 0.0);
      delta_f = eval_F(p, x1) - need_warm().min_F;
      prep.warnings.push_back("delta-f estimated from a short reference run; supply "
                              "hyperparams.delta-f to pin it");
    }
    prep.delta_f = delta_f;

    const double eps = cfg.hp.eps;
    if (cfg.algo == AlgoKind::kSmd) {
      if (cfg.hp.regime == TheoremRegime::kNonconvex) {
        prep.hp = derive_hp_smd_nonconvex(p.n, m, L, sigma2, eps, delta_f);
      } else {
        prep.hp = derive_hp_smd_pl(p.n, m, L, sigma2, eps, *p.consts.mu, delta_f,
                                   &prep.warnings);
      }
      if (cfg.hp.b) {
        prep.hp.b = std::min(*cfg.hp.b, p.n);
        prep.hp.B = prep.hp.b;
      }
    } else {
      const std::int64_t b = *cfg.hp.b;
      if (cfg.hp.regime == TheoremRegime::kNonconvex) {
        prep.hp = derive_hp_svramd_nonconvex(p.n, m, L, sigma2, eps, delta_f, b);
      } else {
        prep.hp = derive_hp_svramd_pl(p.n, m, L, sigma2, eps, *p.consts.mu, delta_f, b,
                                      &prep.warnings);
      }
    }
    if (cfg.hp.r) {
      prep.hp.B = std::min(p.n, std::max(prep.hp.b, *cfg.hp.r * prep.hp.b));
    }
    if (cfg.hp.T_override) prep.hp.T = *cfg.hp.T_override;
  } else {
    prep.hp.alpha = cfg.hp.alpha;
    prep.hp.b = cfg.hp.b.value_or(1);
    prep.hp.B = cfg.hp.B.value_or(cfg.hp.r ? std::min(p.n, *cfg.hp.r * prep.hp.b) : prep.hp.b);
    prep.hp.K = cfg.hp.K.value_or(1);
    prep.hp.T = cfg.hp.T.value_or(1);
    prep.hp.output_rule = cfg.hp.output_rule;
    prep.sigma2 = cfg.hp.sigma2.value_or(0.0);
    prep.delta_f = cfg.hp.delta_f.value_or(0.0);
  }

  if (prep.hp.b < 1 || prep.hp.b > p.n || prep.hp.B < prep.hp.b || prep.hp.B > p.n) {
    throw ConfigError("hyperparams: need 1 <= b <= B <= n after resolution (b=" +
                      std::to_string(prep.hp.b) + ", B=" + std::to_string(prep.hp.B) +
                      ", n=" + std::to_string(p.n) + ")");
  }

  prep.iters_per_epoch =
      cfg.epoch_iters.value_or((p.n + prep.hp.b - 1) / prep.hp.b);
  prep.schedule = build_schedule(cfg.schedule, L, prep.iters_per_epoch);

  const std::int64_t inner_len = cfg.algo == AlgoKind::kSmd ? 1 : prep.hp.K;
  const std::int64_t total_steps = inner_len * prep.hp.T;
  switch (cfg.family.kind) {
    case FamilyConfigKind::kEuclidean:
      prep.family = ProximalFamily::euclidean();
      break;
    case FamilyConfigKind::kScaledEuclidean:
      prep.family = make_scaled_family(prep.schedule, prep.hp.alpha, m, total_steps, inner_len);
      break;
    case FamilyConfigKind::kAdagrad:
      prep.family = ProximalFamily::adagrad(p.d, m);
      break;
    case FamilyConfigKind::kRmsprop:
      prep.family = ProximalFamily::rmsprop(p.d, m, cfg.family.beta);
      break;
  }
  return prep;
}

std::optional<std::int64_t> sfo_to_eps(const std::vector<TraceRecord>& trace, double eps) {
  for (const auto& rec : trace) {
    if (rec.gx_sq <= eps) return rec.sfo_paper;
  }
  return std::nullopt;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace,
                     bool with_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "t,sfo_paper,sfo_honest,F,gx_sq,gap_opt,wall_ms\n";
  for (const auto& rec : trace) {
    out << rec.t << ',' << rec.sfo_paper << ',' << rec.sfo_honest << ',' << format_g17(rec.F)
        << ',' << format_g17(rec.gx_sq) << ',';
    if (rec.gap_opt) out << format_g17(*rec.gap_opt);
    out << ',' << (with_timing ? format_g17(rec.wall_ms) : std::string("0")) << '\n';
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

RunResult dispatch_run(const ExperimentConfig& cfg, const PreparedExperiment& prep,
                       std::uint64_t seed, const RunFlags& flags) {
  RunOptions opt;
  opt.checkpoint_cadence = flags.checkpoint_cadence.value_or(cfg.checkpoint_cadence);
  opt.x1 = cfg.x1;
  switch (cfg.algo) {
    case AlgoKind::kSmd:
      return run_adaptive_smd(prep.problem, prep.family, prep.hp, prep.schedule, seed, opt);
    case AlgoKind::kSvramd:
    case AlgoKind::kVrAdagrad:
    case AlgoKind::kVrRmsprop:
      return run_svramd(prep.problem, prep.family, prep.hp, prep.schedule, seed, opt);
  }
  throw std::logic_error("unreachable algorithm kind");
}

SummaryRow summarize(const ExperimentConfig& cfg,
                     const std::vector<std::pair<std::uint64_t, RunResult>>& runs, double eps) {
  SummaryRow row;
  row.label = cfg.label;
  row.num_seeds = runs.size();
  row.eps = eps;
  std::vector<double> finals_gx, finals_F;
  std::vector<double> sfo_values;
  for (const auto& [seed, res] : runs) {
    (void)seed;
    row.t_stars.push_back(res.t_star);
    if (!res.trace.empty()) {
      finals_gx.push_back(res.trace.back().gx_sq);
      finals_F.push_back(res.trace.back().F);
    }
    if (eps > 0.0) {
      const auto hit = sfo_to_eps(res.trace, eps);
      sfo_values.push_back(hit ? static_cast<double>(*hit)
                               : std::numeric_limits<double>::infinity());
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  row.mean_final_gx_sq = mean(finals_gx);
  row.mean_final_F = mean(finals_F);
  if (finals_gx.size() > 1) {
    double ss = 0.0;
    for (double x : finals_gx) ss += (x - row.mean_final_gx_sq) * (x - row.mean_final_gx_sq);
    row.stderr_final_gx_sq = std::sqrt(ss / static_cast<double>(finals_gx.size() - 1)) /
                             std::sqrt(static_cast<double>(finals_gx.size()));
  }
  if (!sfo_values.empty()) {
    std::sort(sfo_values.begin(), sfo_values.end());
    const double med = sfo_values[(sfo_values.size() - 1) / 2];  // lower median
    if (std::isfinite(med)) row.median_sfo_to_eps = static_cast<std::int64_t>(med);
  }
  return row;
}

void write_summary_csv(const std::string& path, const SummaryRow& row) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "label,seeds,eps,median_sfo_to_eps,mean_final_gx_sq,stderr_final_gx_sq,mean_final_F,"
         "t_star_per_seed\n";
  out << row.label << ',' << row.num_seeds << ',' << format_g17(row.eps) << ',';
  if (row.median_sfo_to_eps) {
    out << *row.median_sfo_to_eps;
  } else {
    out << "not_reached";
  }
  out << ',' << format_g17(row.mean_final_gx_sq) << ',' << format_g17(row.stderr_final_gx_sq)
      << ',' << format_g17(row.mean_final_F) << ',';
  for (std::size_t i = 0; i < row.t_stars.size(); ++i) {
    if (i) out << ';';
    out << row.t_stars[i];
  }
  out << '\n';
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const RunFlags& flags) {
  const PreparedExperiment prep = prepare_experiment(cfg);
  ExperimentOutcome outcome;

  const std::string out_dir = flags.out_dir.value_or(cfg.out_dir);
  if (flags.write_files) std::filesystem::create_directories(out_dir);

  if (!flags.quiet) {
    for (const auto& w : prep.warnings) std::fprintf(stderr, "[%s] note: %s\n", cfg.label.c_str(), w.c_str());
    std::fprintf(stderr,
                 "[%s] n=%lld d=%d alpha=%g B=%lld b=%lld K=%lld T=%lld sigma2=%g delta_f=%g\n",
                 cfg.label.c_str(), static_cast<long long>(prep.problem.n), prep.problem.d,
                 prep.hp.alpha, static_cast<long long>(prep.hp.B),
                 static_cast<long long>(prep.hp.b), static_cast<long long>(prep.hp.K),
                 static_cast<long long>(prep.hp.T), prep.sigma2, prep.delta_f);
  }

  const std::size_t num_seeds = cfg.seeds.size();
  std::vector<std::optional<RunResult>> results(num_seeds);
  std::vector<std::string> errors(num_seeds);
  const int workers =
      std::max(1, std::min<int>(flags.parallelism, static_cast<int>(num_seeds)));

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= num_seeds) break;
      try {
        results[i] = dispatch_run(cfg, prep, cfg.seeds[i], flags);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < num_seeds; ++i) {
    if (results[i]) {
      outcome.runs.emplace_back(cfg.seeds[i], std::move(*results[i]));
    } else {
      outcome.failures.emplace_back(cfg.seeds[i], errors[i]);
    }
  }

  const double eps = flags.eps.value_or(cfg.hp.eps);
  outcome.summary = summarize(cfg, outcome.runs, eps);

  if (flags.write_files) {
    const std::string stem = sanitize(cfg.label);
    for (const auto& [seed, res] : outcome.runs) {
      const std::string path =
          (std::filesystem::path(out_dir) / (stem + "_seed" + std::to_string(seed) + ".csv"))
              .string();
      write_trace_csv(path, res.trace, flags.trace_timing);
      outcome.trace_files.push_back(path);
    }
    outcome.summary_file =
        (std::filesystem::path(out_dir) / (stem + "_summary.csv")).string();
    write_summary_csv(outcome.summary_file, outcome.summary);
  }
  return outcome;
}

std::vector<CompareRow> compare(const std::vector<ExperimentConfig>& configs, double eps,
                                const RunFlags& flags) {
  if (configs.size() < 2) {
    throw std::invalid_argument("compare: need at least two configurations");
  }
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].problem == configs[0].problem)) {
      throw std::invalid_argument("compare: configurations must share the problem spec");
    }
  }
  std::vector<CompareRow> rows;
  for (const auto& cfg : configs) {
    RunFlags f = flags;
    f.eps = eps;
    const ExperimentOutcome outcome = run_experiment(cfg, f);
    CompareRow row;
    row.label = cfg.label;
    row.median_sfo_to_eps = outcome.summary.median_sfo_to_eps;
    row.mean_final_gx_sq = outcome.summary.mean_final_gx_sq;
    row.mean_final_F = outcome.summary.mean_final_F;
    rows.push_back(row);
  }
  return rows;
}

std::string render_compare_table(const std::vector<CompareRow>& rows, double eps) {
  std::ostringstream out;
  out << "config, median_sfo_to_eps(eps=" << format_g17(eps) << "), mean_final_gx_sq, mean_final_F\n";
  for (const auto& row : rows) {
    out << row.label << ", ";
    if (row.median_sfo_to_eps) {
      out << *row.median_sfo_to_eps;
    } else {
      out << "not_reached";
    }
    out << ", " << format_g17(row.mean_final_gx_sq) << ", " << format_g17(row.mean_final_F)
        << '\n';
  }
  return out.str();
}

}  // namespace vrmd
