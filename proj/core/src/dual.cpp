#include "morozov/dual.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>
#include <utility>
#include <variant>

#include "morozov/random.hpp"

namespace morozov {

DualEvaluation eval_dual(const Lagrangian& lag, double lambda, const SolveOptions& options) {
  if (!(lambda >= 0.0)) throw InvalidInput("eval_dual: lambda must be nonnegative");
  DualEvaluation ev;
  ev.lambda = lambda;
  if (lambda == 0.0) {
    ev.d_value = 0.0;
    ev.d_prime = lag.data_norm_sq() - lag.epsilon();
    return ev;
  }
  LagrangeSolution sol = lag.solve(lambda, options);
  ev.d_prime = sol.discrepancy_sq - lag.epsilon();
  ev.d_value = sol.j_value + lambda * ev.d_prime;
  ev.solution = std::move(sol);
  return ev;
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::interior:
      return "interior";
    case Regime::noise_dominates:
      return "noise_dominates";
    case Regime::too_optimistic:
      return "too_optimistic";
  }
  return "interior";
}

Regime regime_from_string(std::string_view name) {
  if (name == "interior") return Regime::interior;
  if (name == "noise_dominates" || name == "noise-dominates") return Regime::noise_dominates;
  if (name == "too_optimistic" || name == "too-optimistic") return Regime::too_optimistic;
  throw InvalidInput("unknown regime '" + std::string(name) + "'");
}

Regime classify_regime(double dist_to_range, double data_norm, double tau) {
  if (tau >= data_norm) return Regime::noise_dominates;
  if (tau <= dist_to_range) return Regime::too_optimistic;
  return Regime::interior;
}

RegimeDiagnosis diagnose_regime(const LinearOperator& a, const Vector& g, double tau, double tol) {
  if (!(tau > 0.0)) throw InvalidInput("diagnose_regime: tau must be positive");
  RegimeDiagnosis d;
  d.dist_to_range = distance_to_range(a, g, tol);
  d.data_norm = g.norm();
  d.tau = tau;
  d.regime = classify_regime(d.dist_to_range, d.data_norm, tau);
  return d;
}

std::string describe_regime_failure(const RegimeDiagnosis& d) {
  std::ostringstream os;
  os.precision(10);
  switch (d.regime) {
    case Regime::interior:
      return {};
    case Regime::noise_dominates:
      os << "tau >= ||g|| (tau = " << d.tau << ", ||g|| = " << d.data_norm
         << "): the noise estimate dominates the data";
      break;
    case Regime::too_optimistic:
      os << "tau <= dist(g, range A) (tau = " << d.tau << ", dist = " << d.dist_to_range
         << "): the noise estimate is too optimistic";
      break;
  }
  return os.str();
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::bisection:
      return "bisection";
    case Method::secant:
      return "secant";
    case Method::gradient_ascent:
      return "gradient_ascent";
  }
  return "bisection";
}

Method method_from_string(std::string_view name) {
  if (name == "bisection") return Method::bisection;
  if (name == "secant") return Method::secant;
  if (name == "gradient_ascent" || name == "gradient-ascent") return Method::gradient_ascent;
  throw InvalidInput("unknown method '" + std::string(name) + "'");
}

RegimeError::RegimeError(RegimeDiagnosis diagnosis)
    : Error("regime is " + std::string(to_string(diagnosis.regime)) + ": " +
            describe_regime_failure(diagnosis)),
      diagnosis_(diagnosis) {}

namespace {

class DualSearch {
 public:
  DualSearch(const Lagrangian& lag, Method method, const MaximizeOptions& opts, Regime regime)
      : lag_(lag), opts_(opts), tolerance_(opts.rtol * lag.epsilon()) {
    result_.method = method;
    result_.regime = regime;
    result_.tau = std::sqrt(lag.epsilon());
  }

  DualEvaluation eval(double lambda) {
    if (static_cast<int>(result_.iterations.size()) >= opts_.max_iter) {
      throw NonConvergence("maximize_dual: max_iter = " + std::to_string(opts_.max_iter) +
                               " exhausted",
                           partial());
    }
    DualEvaluation ev = eval_dual(lag_, lambda, opts_.solve);
    result_.iterations.push_back({ev.lambda, ev.d_value, ev.d_prime});
    if (ev.solution) last_ = ev;
    return ev;
  }

  bool accepted(const DualEvaluation& ev) const {
    return ev.lambda > 0.0 && std::abs(ev.d_prime) <= tolerance_;
  }

  SelectionResult finish(const DualEvaluation& ev) {
    const LagrangeSolution& sol = *ev.solution;
    result_.lambda_star = ev.lambda;
    result_.alpha = 1.0 / ev.lambda;
    result_.f_star = sol.f_lambda;
    result_.discrepancy = std::sqrt(sol.discrepancy_sq);
    result_.converged = true;
    return result_;
  }

  SelectionResult partial() const {
    SelectionResult out = result_;
    if (last_) {
      out.lambda_star = last_->lambda;
      out.alpha = 1.0 / last_->lambda;
      out.f_star = last_->solution->f_lambda;
      out.discrepancy = std::sqrt(last_->solution->discrepancy_sq);
    }
    out.converged = false;
    return out;
  }

  [[noreturn]] void fail_bracket(const std::string& why) const {
    throw BracketFailure("maximize_dual: " + why, result_.iterations);
  }

  [[noreturn]] void fail_stalled() const {
    throw NonConvergence("maximize_dual: bracket collapsed to machine precision before "
                         "|D'| reached rtol*epsilon",
                         partial());
  }

  const MaximizeOptions& opts() const { return opts_; }
  double epsilon() const { return lag_.epsilon(); }

 private:
  const Lagrangian& lag_;
  const MaximizeOptions& opts_;
  double tolerance_;
  SelectionResult result_;
  std::optional<DualEvaluation> last_;
};

struct Bracket {
  double lo = 0.0;
  double d_lo = 0.0;  // > 0
  double hi = 0.0;
  double d_hi = 0.0;  // < 0
};

// Either returns an accepted evaluation or a bracket lo < λ̄ < hi.
std::variant<DualEvaluation, Bracket> find_bracket(DualSearch& search) {
  const MaximizeOptions& opts = search.opts();
  const DualEvaluation at_zero = search.eval(0.0);
  if (at_zero.d_prime <= 0.0) {
    search.fail_bracket("D'(0) = ||g||^2 - epsilon <= 0, so D has no maximizer with lambda > 0");
  }
  Bracket b;
  double lambda = opts.lambda_init;
  DualEvaluation ev = search.eval(lambda);
  if (search.accepted(ev)) return ev;
  if (ev.d_prime > 0.0) {
    b.lo = lambda;
    b.d_lo = ev.d_prime;
    for (;;) {
      lambda *= 2.0;
      if (lambda > opts.lambda_max) {
        search.fail_bracket("D' stays positive up to lambda_max; tau is below dist(g, range A) "
                            "or too close to it");
      }
      ev = search.eval(lambda);
      if (search.accepted(ev)) return ev;
      if (ev.d_prime < 0.0) break;
      b.lo = lambda;
      b.d_lo = ev.d_prime;
    }
    b.hi = lambda;
    b.d_hi = ev.d_prime;
  } else {
    b.hi = lambda;
    b.d_hi = ev.d_prime;
    // Below this the lower end is taken as λ = 0, where D'(0) > 0 is known.
    const double floor = 1e-16 * opts.lambda_init;
    for (;;) {
      lambda *= 0.5;
      if (lambda < floor) {
        b.lo = 0.0;
        b.d_lo = at_zero.d_prime;
        break;
      }
      ev = search.eval(lambda);
      if (search.accepted(ev)) return ev;
      if (ev.d_prime > 0.0) {
        b.lo = lambda;
        b.d_lo = ev.d_prime;
        break;
      }
      b.hi = lambda;
      b.d_hi = ev.d_prime;
    }
  }
  return b;
}

double midpoint(const Bracket& b) {
  return b.lo > 0.0 ? std::sqrt(b.lo * b.hi) : 0.5 * b.hi;
}

void narrow(Bracket& b, const DualEvaluation& ev) {
  if (ev.d_prime > 0.0) {
    b.lo = ev.lambda;
    b.d_lo = ev.d_prime;
  } else {
    b.hi = ev.lambda;
    b.d_hi = ev.d_prime;
  }
}

SelectionResult run_bisection(DualSearch& search) {
  auto start = find_bracket(search);
  if (auto* ev = std::get_if<DualEvaluation>(&start)) return search.finish(*ev);
  Bracket b = std::get<Bracket>(start);
  for (;;) {
    const double mid = midpoint(b);
    if (!(mid > b.lo && mid < b.hi)) search.fail_stalled();
    const DualEvaluation ev = search.eval(mid);
    if (search.accepted(ev)) return search.finish(ev);
    narrow(b, ev);
  }
}

SelectionResult run_secant(DualSearch& search) {
  auto start = find_bracket(search);
  if (auto* ev = std::get_if<DualEvaluation>(&start)) return search.finish(*ev);
  Bracket b = std::get<Bracket>(start);
  double x0 = b.lo, d0 = b.d_lo;
  double x1 = b.hi, d1 = b.d_hi;
  for (;;) {
    double next = d1 != d0 ? x1 - d1 * (x1 - x0) / (d1 - d0) : b.lo - 1.0;
    if (!(next > b.lo && next < b.hi) || !std::isfinite(next)) next = midpoint(b);
    if (!(next > b.lo && next < b.hi)) search.fail_stalled();
    const DualEvaluation ev = search.eval(next);
    if (search.accepted(ev)) return search.finish(ev);
    narrow(b, ev);
    x0 = x1;
    d0 = d1;
    x1 = ev.lambda;
    d1 = ev.d_prime;
  }
}

SelectionResult run_gradient_ascent(DualSearch& search) {
  const MaximizeOptions& opts = search.opts();
  if (!(opts.step_rule.c > 0.0)) throw InvalidInput("maximize_dual: step constant must be positive");
  double lambda = 0.0;
  for (std::int64_t n = 1;; ++n) {
    const DualEvaluation ev = search.eval(lambda);
    if (search.accepted(ev)) return search.finish(ev);
    lambda = std::min(std::max(0.0, lambda + opts.step_rule.step(n) * ev.d_prime), opts.lambda_max);
  }
}

}  // namespace

SelectionResult maximize_dual(const Lagrangian& lag, Method method, const MaximizeOptions& opts) {
  if (!(opts.rtol > 0.0)) throw InvalidInput("maximize_dual: rtol must be positive");
  if (opts.max_iter < 1) throw InvalidInput("maximize_dual: max_iter must be positive");
  if (!(opts.lambda_init > 0.0) || opts.lambda_init > opts.lambda_max) {
    throw InvalidInput("maximize_dual: lambda_init must lie in (0, lambda_max]");
  }
  const RegimeDiagnosis diagnosis =
      diagnose_regime(lag.forward(), lag.data(), std::sqrt(lag.epsilon()));
  if (diagnosis.regime != Regime::interior && !opts.override_regime) {
    throw RegimeError(diagnosis);
  }
  DualSearch search(lag, method, opts, diagnosis.regime);
  switch (method) {
    case Method::bisection:
      return run_bisection(search);
    case Method::secant:
      return run_secant(search);
    case Method::gradient_ascent:
      return run_gradient_ascent(search);
  }
  throw InvalidInput("maximize_dual: unknown method");
}

std::vector<SweepPoint> sweep_dual(const Lagrangian& lag, const std::vector<double>& lambdas,
                                   const SolveOptions& options, unsigned threads) {
  if (lambdas.empty()) throw InvalidInput("sweep_dual: grid is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw InvalidInput("sweep_dual: grid values must be positive");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw InvalidInput("sweep_dual: grid must be strictly ascending");
    }
  }
  std::vector<SweepPoint> out(lambdas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < lambdas.size(); i = next++) {
      out[i].lambda = lambdas[i];
      try {
        out[i].evaluation = eval_dual(lag, lambdas[i], options);
      } catch (const Error& e) {
        out[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, lambdas.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw InvalidInput("log_grid: need 0 < lo < hi and at least two points");
  }
  std::vector<double> out(n);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> second_differences(const std::vector<SweepPoint>& sweep) {
  std::vector<const DualEvaluation*> ok;
  for (const auto& p : sweep) {
    if (p.evaluation) ok.push_back(&*p.evaluation);
  }
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < ok.size(); ++i) {
    const double x0 = ok[i - 1]->lambda, x1 = ok[i]->lambda, x2 = ok[i + 1]->lambda;
    const double chord =
        ((x2 - x1) * ok[i - 1]->d_value + (x1 - x0) * ok[i + 1]->d_value) / (x2 - x0);
    out.push_back(chord - ok[i]->d_value);
  }
  return out;
}

VerificationReport verify_morozov_solution(const SelectionResult& result, const Lagrangian& lag,
                                           const VerifyOptions& options) {
  if (!result.converged) throw InvalidInput("verify_morozov_solution: result is not converged");
  if (!(result.lambda_star > 0.0)) {
    throw InvalidInput("verify_morozov_solution: lambda_star must be positive");
  }
  require_size(result.f_star.size(), lag.forward().cols(), "verify_morozov_solution");
  VerificationReport report;
  const double eps = lag.epsilon();
  const double lambda = result.lambda_star;
  const Vector& f = result.f_star;

  report.discrepancy_gap = std::abs(residual_norm_sq(lag.forward(), f, lag.data()) - eps);
  report.discrepancy_ok = report.discrepancy_gap <= options.rtol * eps;
  if (!report.discrepancy_ok) {
    std::ostringstream os;
    os << "discrepancy: | ||Af-g||^2 - tau^2 | = " << report.discrepancy_gap << " > "
       << options.rtol * eps;
    report.violations.push_back(os.str());
  }

  report.optimality_residual = lag.optimality_residual(f, lambda);
  report.optimality_bound = lag.optimality_bound(lambda);
  report.optimality_ok = report.optimality_residual <= report.optimality_bound;
  if (!report.optimality_ok) {
    std::ostringstream os;
    os << "optimality: stationarity residual " << report.optimality_residual << " > "
       << report.optimality_bound;
    report.violations.push_back(os.str());
  }

  const double base = lag.value(f, lambda);
  const double scale = 1e-3 * (1.0 + f.norm()) / std::sqrt(static_cast<double>(f.size()));
  const double slack = 1e-10 * (1.0 + std::abs(base));
  NormalStream rng(options.seed);
  int worse = 0;
  for (int k = 0; k < options.probes; ++k) {
    const Vector delta = scale * rng.vector(f.size());
    if (lag.value(f + delta, lambda) < base - slack) ++worse;
  }
  report.minimality_ok = worse == 0;
  if (!report.minimality_ok) {
    report.violations.push_back("minimality: " + std::to_string(worse) + " of " +
                                std::to_string(options.probes) +
                                " perturbations lowered L(., lambda_star)");
  }
  return report;
}

}  // namespace morozov
