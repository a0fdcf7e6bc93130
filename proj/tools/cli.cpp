#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "morozov/dual.hpp"
#include "morozov/errors.hpp"
#include "morozov/io.hpp"
#include "morozov/lagrange.hpp"
#include "morozov/problems.hpp"

namespace morozov::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  fs::path problem_path;
  std::optional<double> tau;
  double safety_factor = 1.02;
  std::string method = "bisection";
  std::string solver = "direct";
  double rtol = 1e-8;
  int max_iter = 500;
  double lambda_init = 1.0;
  std::string step_rule = "harmonic";
  double step_c = 2.0;
  bool override_regime = false;
  std::string output_path = "-";
  std::string f_output_path;
  std::string format = "json";
  // sweep
  double lambda_min = 1e-6;
  double lambda_max = 1e9;
  std::size_t points = 200;
  // generate
  std::string kind = "interior";
  int n = 32;
  double kernel_width = 2.0;
  double noise_level = 0.05;
  double tau_accuracy = 1.0;
  std::uint64_t seed = 1;
  std::string regularizer = "identity";
  // verify
  fs::path result_path;
};

class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("morozov", sink);
  logger->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("MOROZOV_LOG")) {
    const std::string value = env;
    if (value == "error") {
      level = spdlog::level::err;
    } else if (value == "debug") {
      level = spdlog::level::debug;
    } else if (value != "info") {
      logger->warn("MOROZOV_LOG='{}' not recognized; using info", value);
    }
  }
  logger->set_level(level);
  return logger;
}

// Writes `text` to stdout when path is "-", else to the file.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-" || path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file || !(file << text)) throw IoError("cannot write '" + path + "'");
}

struct LoadedProblem {
  InverseProblem problem;
  double tau = 0.0;      // estimate
  double tau_eff = 0.0;  // safety_factor * tau
};

LoadedProblem load(const RunConfig& cfg, spdlog::logger& log) {
  if (cfg.safety_factor < 1.0) {
    throw Failure(kIoError, "--safety-factor must be >= 1");
  }
  if (cfg.safety_factor == 1.0) {
    log.warn("safety factor c = 1: the discrepancy target equals the raw noise estimate");
  }
  LoadedProblem lp{io::load_problem(cfg.problem_path)};
  lp.tau = cfg.tau ? *cfg.tau : lp.problem.tau;
  if (!(lp.tau > 0.0)) {
    throw Failure(kIoError, "tau must be positive (got " + std::to_string(lp.tau) +
                                "); pass --tau or set tau in meta.json");
  }
  lp.tau_eff = cfg.safety_factor * lp.tau;
  log.debug("loaded {}: {}x{}, tau = {}, c*tau = {}", cfg.problem_path.string(),
            lp.problem.a.rows(), lp.problem.a.cols(), lp.tau, lp.tau_eff);
  return lp;
}

Lagrangian make_lagrangian(const LoadedProblem& lp) {
  return Lagrangian(lp.problem.a, lp.problem.g, lp.problem.j, lp.tau_eff * lp.tau_eff);
}

MaximizeOptions maximize_options(const RunConfig& cfg) {
  MaximizeOptions opts;
  opts.rtol = cfg.rtol;
  opts.max_iter = cfg.max_iter;
  opts.lambda_init = cfg.lambda_init;
  opts.override_regime = cfg.override_regime;
  opts.step_rule.kind =
      cfg.step_rule == "constant" ? StepRule::Kind::constant : StepRule::Kind::harmonic;
  opts.step_rule.c = cfg.step_c;
  opts.solve.solver = cfg.solver == "iterative" ? SolverKind::iterative : SolverKind::direct;
  return opts;
}

int cmd_generate(const RunConfig& cfg, spdlog::logger& log) {
  if (cfg.output_path == "-") throw Failure(kIoError, "generate needs --out DIR");
  InverseProblem p = [&] {
    if (cfg.kind == "interior") return regime_fixture(Regime::interior, cfg.seed);
    if (cfg.kind == "noise-dominates") return regime_fixture(Regime::noise_dominates, cfg.seed);
    if (cfg.kind == "too-optimistic") return regime_fixture(Regime::too_optimistic, cfg.seed);
    const LinearOperator a = cfg.kind == "hilbert" ? make_hilbert(cfg.n)
                                                   : make_deconvolution(cfg.n, cfg.kernel_width);
    const Regularizer j = cfg.regularizer == "first-difference"
                              ? Regularizer::first_difference(cfg.n)
                              : Regularizer::identity(cfg.n);
    InverseProblem q =
        synthesize(a, smooth_signal(cfg.n), cfg.noise_level, cfg.tau_accuracy, cfg.seed, j);
    const RegimeDiagnosis d = diagnose_regime(q.a, q.g, q.tau > 0.0 ? q.tau : 1e-300);
    q.regime = d.regime;
    return q;
  }();
  io::save_problem(cfg.output_path, p);
  log.info("wrote {} problem ({}x{}, tau = {}) to {}", cfg.kind, p.a.rows(), p.a.cols(), p.tau,
           cfg.output_path);
  return kSuccess;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const LoadedProblem lp = load(cfg, log);
  const RegimeDiagnosis d = diagnose_regime(lp.problem.a, lp.problem.g, lp.tau_eff);
  nlohmann::json doc = io::to_json(d);
  doc["tau"] = lp.tau;
  doc["tau_eff"] = lp.tau_eff;
  doc["safety_factor"] = cfg.safety_factor;
  if (d.regime != Regime::interior) doc["message"] = describe_regime_failure(d);
  emit(cfg.output_path, doc.dump(2) + "\n", out);
  log.info("regime: {}", to_string(d.regime));
  return kSuccess;
}

nlohmann::json result_document(const SelectionResult& r, const LoadedProblem& lp,
                               const RunConfig& cfg) {
  nlohmann::json doc = io::to_json(r);
  doc["tau_estimate"] = lp.tau;
  doc["safety_factor"] = cfg.safety_factor;
  return doc;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const LoadedProblem lp = load(cfg, log);
  const Lagrangian lag = make_lagrangian(lp);
  if (validate_tolerance_setup(lag, lp.problem.g) == ToleranceSetup::degenerate) {
    log.warn("||g||^2 < (c*tau)^2: the equality and inequality constrained problems differ");
  }
  const RegimeDiagnosis d = diagnose_regime(lp.problem.a, lp.problem.g, lp.tau_eff);
  if (d.regime != Regime::interior) {
    if (!cfg.override_regime) {
      throw Failure(kRegimeFailure, "regime " + std::string(to_string(d.regime)) + ": " +
                                        describe_regime_failure(d));
    }
    log.warn("regime {} overridden: {}", to_string(d.regime), describe_regime_failure(d));
  }
  const std::string f_path = !cfg.f_output_path.empty() ? cfg.f_output_path
                             : cfg.output_path == "-"
                                 ? std::string("f_star.csv")
                                 : (fs::path(cfg.output_path).parent_path() / "f_star.csv").string();
  try {
    const SelectionResult r = maximize_dual(lag, method_from_string(cfg.method), maximize_options(cfg));
    io::write_vector_csv(f_path, r.f_star);
    emit(cfg.output_path, result_document(r, lp, cfg).dump(2) + "\n", out);
    log.info("lambda* = {:.12g}, alpha = {:.12g}, ||Af-g|| = {:.12g} (target {:.12g}), {} evaluations",
             r.lambda_star, r.alpha, r.discrepancy, lp.tau_eff, r.iterations.size());
    return kSuccess;
  } catch (const BracketFailure& e) {
    throw Failure(kRegimeFailure, e.what());
  } catch (const NonConvergence& e) {
    emit(cfg.output_path, result_document(e.partial(), lp, cfg).dump(2) + "\n", out);
    throw Failure(kNonConvergence, e.what());
  } catch (const ConvergenceFailure& e) {
    throw Failure(kNonConvergence, e.what());
  }
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  if (!(cfg.lambda_min > 0.0) || !(cfg.lambda_max > cfg.lambda_min)) {
    throw Failure(kIoError, "sweep needs 0 < --lambda-min < --lambda-max");
  }
  if (cfg.points < 2) throw Failure(kIoError, "sweep needs --points >= 2");
  const LoadedProblem lp = load(cfg, log);
  const Lagrangian lag = make_lagrangian(lp);
  SolveOptions solve;
  solve.solver = cfg.solver == "iterative" ? SolverKind::iterative : SolverKind::direct;
  const auto sweep = sweep_dual(lag, log_grid(cfg.lambda_min, cfg.lambda_max, cfg.points), solve);
  std::size_t failed = 0;
  for (const auto& p : sweep) {
    if (!p.evaluation) {
      ++failed;
      log.debug("lambda = {:.6g}: {}", p.lambda, p.error);
    }
  }
  if (failed > 0) log.warn("{} of {} sweep points failed", failed, sweep.size());
  if (cfg.format == "csv") {
    std::ostringstream os;
    io::write_sweep_csv(os, sweep);
    emit(cfg.output_path, os.str(), out);
  } else {
    emit(cfg.output_path, io::sweep_to_json(sweep).dump(2) + "\n", out);
  }
  return kSuccess;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, spdlog::logger& log) {
  const InverseProblem p = io::load_problem(cfg.problem_path);
  const SelectionResult r = io::selection_result_from_json(io::read_json(cfg.result_path));
  if (!r.converged) throw Failure(kNonConvergence, "result is not converged; nothing to verify");
  if (!(r.tau > 0.0)) throw Failure(kIoError, "result has non-positive tau");
  const Lagrangian lag(p.a, p.g, p.j, r.tau * r.tau);
  VerifyOptions opts;
  opts.rtol = cfg.rtol;
  const VerificationReport report = verify_morozov_solution(r, lag, opts);
  nlohmann::json doc = {{"passed", report.passed()},
                        {"discrepancy_ok", report.discrepancy_ok},
                        {"optimality_ok", report.optimality_ok},
                        {"minimality_ok", report.minimality_ok},
                        {"discrepancy_gap", report.discrepancy_gap},
                        {"optimality_residual", report.optimality_residual},
                        {"optimality_bound", report.optimality_bound},
                        {"violations", report.violations}};
  emit(cfg.output_path, doc.dump(2) + "\n", out);
  for (const auto& v : report.violations) log.error("{}", v);
  return report.passed() ? kSuccess : kVerificationFailure;
}

void add_problem_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--problem", cfg.problem_path, "Problem directory")->required();
  sub->add_option("--tau", cfg.tau, "Noise estimate (overrides meta.json)");
  sub->add_option("--safety-factor", cfg.safety_factor, "Morozov constant c >= 1")
      ->capture_default_str();
}

void add_solver_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--solver", cfg.solver, "Inner Lagrange solver")
      ->check(CLI::IsMember({"direct", "iterative"}))
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  RunConfig cfg;

  CLI::App app{"Regularization parameter selection by maximizing the dual of the discrepancy "
               "constraint"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write a synthetic problem directory");
  generate->add_option("--kind", cfg.kind)
      ->check(CLI::IsMember(
          {"interior", "noise-dominates", "too-optimistic", "deconvolution", "hilbert"}))
      ->capture_default_str();
  generate->add_option("--n", cfg.n, "Problem size")->capture_default_str();
  generate->add_option("--kernel-width", cfg.kernel_width)->capture_default_str();
  generate->add_option("--noise-level", cfg.noise_level, "||dg|| / ||A f0||")->capture_default_str();
  generate->add_option("--tau-accuracy", cfg.tau_accuracy, "tau / ||dg||")->capture_default_str();
  generate->add_option("--seed", cfg.seed)->capture_default_str();
  generate->add_option("--regularizer", cfg.regularizer)
      ->check(CLI::IsMember({"identity", "first-difference"}))
      ->capture_default_str();
  generate->add_option("--out", cfg.output_path, "Output directory")->required();

  auto* solve = app.add_subcommand("solve", "Select lambda* = 1/alpha by maximizing the dual");
  add_problem_options(solve, cfg);
  add_solver_options(solve, cfg);
  solve->add_option("--method", cfg.method)
      ->check(CLI::IsMember({"bisection", "secant", "gradient-ascent", "gradient_ascent"}))
      ->capture_default_str();
  solve->add_option("--rtol", cfg.rtol, "Relative tolerance on the discrepancy equation")
      ->capture_default_str();
  solve->add_option("--max-iter", cfg.max_iter)->capture_default_str();
  solve->add_option("--lambda-init", cfg.lambda_init)->capture_default_str();
  solve->add_option("--step-rule", cfg.step_rule, "Gradient ascent step: c or c/n")
      ->check(CLI::IsMember({"constant", "harmonic"}))
      ->capture_default_str();
  solve->add_option("--step-c", cfg.step_c)->capture_default_str();
  solve->add_flag("--override-regime", cfg.override_regime, "Run even outside the interior regime");
  solve->add_option("--out", cfg.output_path, "SelectionResult JSON (default stdout)");
  solve->add_option("--f-out", cfg.f_output_path, "f_star CSV (default next to --out)");
  solve->add_option("--format", cfg.format)->check(CLI::IsMember({"json"}));

  auto* sweep = app.add_subcommand("sweep", "Tabulate D and D' on a log grid");
  add_problem_options(sweep, cfg);
  add_solver_options(sweep, cfg);
  sweep->add_option("--lambda-min", cfg.lambda_min)->capture_default_str();
  sweep->add_option("--lambda-max", cfg.lambda_max)->capture_default_str();
  sweep->add_option("--points", cfg.points)->capture_default_str();
  sweep->add_option("--out", cfg.output_path, "Output file (default stdout)");
  sweep->add_option("--format", cfg.format)
      ->check(CLI::IsMember({"json", "csv"}))
      ->default_str("csv");

  auto* diagnose = app.add_subcommand("diagnose", "Classify the dual function's regime");
  add_problem_options(diagnose, cfg);
  diagnose->add_option("--out", cfg.output_path, "Report JSON (default stdout)");
  diagnose->add_option("--format", cfg.format)->check(CLI::IsMember({"json"}));

  auto* verify = app.add_subcommand("verify", "Re-check a SelectionResult against its problem");
  verify->add_option("--problem", cfg.problem_path, "Problem directory")->required();
  verify->add_option("--result", cfg.result_path, "SelectionResult JSON")->required();
  verify->add_option("--rtol", cfg.rtol)->capture_default_str();
  verify->add_option("--out", cfg.output_path, "Report JSON (default stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kIoError;
  }
  if (sweep->parsed() && sweep->count("--format") == 0) cfg.format = "csv";

  try {
    if (generate->parsed()) return cmd_generate(cfg, *log);
    if (solve->parsed()) return cmd_solve(cfg, out, *log);
    if (sweep->parsed()) return cmd_sweep(cfg, out, *log);
    if (diagnose->parsed()) return cmd_diagnose(cfg, out, *log);
    if (verify->parsed()) return cmd_verify(cfg, out, *log);
  } catch (const Failure& e) {
    log->error("{}", e.what());
    return e.code();
  } catch (const RegimeError& e) {
    log->error("{}", e.what());
    return kRegimeFailure;
  } catch (const ConvergenceFailure& e) {
    log->error("{}", e.what());
    return kNonConvergence;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kIoError;
  }
  return kIoError;
}

}  // namespace morozov::cli
