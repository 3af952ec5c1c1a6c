#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filterforge/builtin.hpp"
#include "filterforge/feast.hpp"
#include "filterforge/filter_io.hpp"
#include "filterforge/gauss_legendre.hpp"
#include "filterforge/optim.hpp"
#include "filterforge/pipeline.hpp"
#include "filterforge/rates.hpp"
#include "filterforge/slise.hpp"
#include "filterforge/weight.hpp"
#include "filterforge/weight_design.hpp"

namespace ff = filterforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

/// Failure caused by user input (bad flag value, missing file, ...).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ff::StepWeightFunction load_weight(const std::string& source) {
  try {
    return ff::builtin_weight(source);
  } catch (const ff::LookupError&) {
  }
  if (!std::filesystem::exists(source)) throw UsageError("weight '" + source + "' is neither a builtin name nor a file");
  return ff::read_weight(source);
}

/// Builtin filter name, "gauss-legendre" (degree from --poles), or a JSON file.
ff::RationalFilter load_filter(const std::string& source, int poles) {
  if (source == "gauss-legendre") {
    if (poles < 4 || poles % 4 != 0) throw UsageError("--poles must be a positive multiple of 4");
    return ff::gauss_legendre_filter(poles / 4);
  }
  try {
    return ff::builtin_filter(source);
  } catch (const ff::LookupError&) {
  }
  if (!std::filesystem::exists(source)) throw UsageError("filter '" + source + "' is neither a builtin name nor a file");
  return ff::read_filter(source);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

struct OptimizeArgs {
  std::string weight = "gamma-slise";
  std::string start = "gauss-legendre16";
  std::optional<double> lb;
  int poles = 16;
  double tol = 1e-8;
  int budget = 10000;
  std::string out;
  std::string trace;
};

int run_optimize(const OptimizeArgs& a) {
  const auto weight = load_weight(a.weight);
  const auto start = load_filter(a.start, a.poles);
  const int m = static_cast<int>(start.m());
  const ff::SliseObjective obj(weight, m);
  ff::OptimizerConfig config;
  config.gradient_tolerance = a.tol;
  config.max_evaluations = a.budget;

  std::ostringstream trace;
  trace << "iteration,loss,grad_norm,evaluations\n";
  auto observer = [&](const ff::IterationEvent& e) {
    trace << e.iteration << ',' << ff::detail::format_shortest(e.loss) << ','
          << ff::detail::format_shortest(e.gradient_norm) << ',' << e.evaluations << '\n';
  };
  auto f = ff::real_objective(obj);
  ff::OptimizerReport rep;
  if (a.lb) {
    ff::BoxStart bs;
    try {
      bs = ff::prepare_box_start(start, *a.lb);
    } catch (const ff::DomainError& e) {
      throw UsageError(e.what());
    }
    for (int i : bs.clamped)
      std::cerr << "note: start pole " << i << " moved onto the bound Im(w) = " << *a.lb << "\n";
    const auto bounds = ff::slise_box_bounds(m, *a.lb);
    ff::RealVector g(bs.x.size());
    trace << 0 << ',' << ff::detail::format_shortest(f(bs.x, g)) << ','
          << ff::detail::format_shortest(ff::detail::inf_norm(ff::projected_gradient(bs.x, g, bounds))) << ",1\n";
    rep = ff::box_bfgs_minimize(f, bs.x, bounds, config, observer);
  } else {
    const ff::RealVector x0 = ff::to_real(start);
    ff::RealVector g(x0.size());
    trace << 0 << ',' << ff::detail::format_shortest(f(x0, g)) << ','
          << ff::detail::format_shortest(ff::detail::inf_norm(g)) << ",1\n";
    rep = ff::bfgs_minimize(f, x0, config, observer);
  }
  const auto result = ff::filter_from_real(rep.solution);
  write_text(a.out, ff::dump_filter(result));
  if (!a.trace.empty()) write_text(a.trace, trace.str());
  std::cerr << "loss " << ff::detail::format_shortest(rep.final_loss) << ", iterations " << rep.iterations
            << ", evaluations " << rep.loss_evaluations << ", termination " << ff::to_string(rep.termination) << "\n";
  const bool ok = std::isfinite(rep.final_loss) && (rep.termination == ff::Termination::GradientTol ||
                                                    rep.termination == ff::Termination::LossTol ||
                                                    rep.termination == ff::Termination::Stalled);
  return ok ? kExitOk : kExitNumeric;
}

struct EvalArgs {
  std::string filter = "gauss-legendre16";
  int poles = 16;
  double from = -3.0, to = 3.0;
  int samples = 601;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const auto filter = load_filter(a.filter, a.poles);
  if (a.samples < 2) throw UsageError("--samples must be at least 2");
  if (!(a.from < a.to)) throw UsageError("--from must be below --to");
  write_text(a.out, ff::filter_curve_csv(filter, a.from, a.to, a.samples));
  return kExitOk;
}

struct RatesArgs {
  std::vector<double> gaps{0.85, 0.9, 0.95};
  std::vector<int> poles{8, 12, 16, 20};
  std::string out;
};

int run_rates(const RatesArgs& a) {
  for (double g : a.gaps)
    if (!(g > 0.0 && g < 1.0)) throw UsageError("--gap values must lie in (0, 1)");
  for (int p : a.poles)
    if (p < 4 || p % 4 != 0) throw UsageError("--poles values must be positive multiples of 4");
  const auto rows = ff::rate_table(a.gaps, a.poles);
  write_text(a.out, ff::rate_report_csv(rows));
  return kExitOk;
}

struct DesignArgs {
  std::string start = "gamma-slise";
  double gap = ff::kDefaultGap;
  int poles = 16;
  int budget = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string trace;
};

int run_design(const DesignArgs& a) {
  ff::ParametricWeight start;
  if (a.start == "gamma-slise")
    start = ff::ParametricWeight::gamma_slise();
  else if (a.start == "enhanced-gamma-slise")
    start = ff::ParametricWeight::enhanced_gamma_slise();
  else
    throw UsageError("--start must be gamma-slise or enhanced-gamma-slise");
  if (!(a.gap > 0.0 && a.gap < 1.0)) throw UsageError("--gap must lie in (0, 1)");
  if (a.poles < 4 || a.poles % 4 != 0) throw UsageError("--poles must be a positive multiple of 4");
  if (a.budget < 0) throw UsageError("--budget must be non-negative");
  std::ostringstream log;
  log << ff::kDesignLogHeader << '\n';
  auto observer = [&](int evaluation, double objective, const ff::ParametricWeight& pw) {
    log << ff::design_log_row(evaluation, objective, pw) << '\n';
  };
  const auto res = ff::design_weight(start, ff::GapParameter(a.gap), a.poles / 4, a.budget, {}, observer);
  write_text(a.out, ff::dump_weight(ff::realize(res.weight)));
  if (!a.trace.empty()) write_text(a.trace, log.str());
  std::cerr << "start objective " << ff::detail::format_shortest(res.start_objective) << ", final objective "
            << ff::detail::format_shortest(res.report.final_loss) << ", evaluations " << res.report.loss_evaluations
            << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string problem = "standard";
  std::vector<std::string> filters{"gauss-legendre16"};
  int poles = 16;
  double multiplier = 1.1;
  int problems = 1;
  std::uint64_t seed = 0;
  double tol = 1e-13;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  if (!(a.multiplier >= 1.0)) throw UsageError("--multiplier must be at least 1");
  if (a.problem != "standard" && a.problem != "smoke") throw UsageError("--problem must be standard or smoke");
  if (a.problems < 1) throw UsageError("--problems must be positive");
  std::vector<ff::RationalFilter> filters;
  for (const auto& f : a.filters) filters.push_back(load_filter(f, a.poles));
  std::ostringstream csv;
  csv << ff::kBenchmarkHeader << '\n';
  bool all_converged = true;
  const int count = a.problem == "smoke" ? 1 : a.problems;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t id = a.seed + static_cast<std::uint64_t>(k);
    const auto problem = a.problem == "smoke" ? ff::smoke_problem() : ff::standard_problem(id);
    const auto interior = static_cast<double>(problem.interior_indices().size());
    const auto N = std::min<Eigen::Index>(problem.n() - 1, static_cast<Eigen::Index>(std::ceil(a.multiplier * interior - 1e-9)));
    const std::string pid = a.problem == "smoke" ? "smoke" : "standard-" + std::to_string(id);
    for (std::size_t f = 0; f < filters.size(); ++f) {
      ff::SubspaceOptions opt;
      opt.tolerance = a.tol;
      const auto r = ff::measured_vs_predicted_rate(problem, std::max<Eigen::Index>(N, 1), filters[f], opt);
      all_converged = all_converged && r.converged;
      csv << ff::benchmark_row(pid, a.filters[f], a.multiplier, r) << '\n';
    }
  }
  write_text(a.out, csv.str());
  return all_converged ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rational filter construction, optimization and evaluation"};
  app.require_subcommand(1);

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Minimize the weighted least-squares loss of a filter");
  opt->add_option("--weight", oa.weight, "Builtin weight name or weight JSON file")->capture_default_str();
  opt->add_option("--start", oa.start, "Builtin filter name, gauss-legendre, or filter JSON file")
      ->capture_default_str();
  opt->add_option("--lb", oa.lb, "Lower bound on |Im w| (box-constrained run)");
  opt->add_option("--poles", oa.poles, "Pole count for --start gauss-legendre")->capture_default_str();
  opt->add_option("--tol", oa.tol, "Gradient tolerance")->capture_default_str();
  opt->add_option("--budget", oa.budget, "Maximum loss evaluations")->capture_default_str();
  opt->add_option("--out", oa.out, "Output filter JSON (default stdout)");
  opt->add_option("--trace", oa.trace, "Optimizer trace CSV");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Sample a filter on an interval");
  ev->add_option("--filter,--start", ea.filter, "Builtin filter name, gauss-legendre, or filter JSON file")
      ->capture_default_str();
  ev->add_option("--poles", ea.poles, "Pole count for gauss-legendre")->capture_default_str();
  ev->add_option("--from", ea.from, "Left end")->capture_default_str();
  ev->add_option("--to", ea.to, "Right end")->capture_default_str();
  ev->add_option("--samples", ea.samples, "Number of samples")->capture_default_str();
  ev->add_option("--out", ea.out, "Output CSV (default stdout)");

  RatesArgs ra;
  auto* rt = app.add_subcommand("rates", "Worst-case convergence rates of the filter families");
  rt->add_option("--gap", ra.gaps, "Gap parameters")->capture_default_str();
  rt->add_option("--poles", ra.poles, "Pole counts")->capture_default_str();
  rt->add_option("--out", ra.out, "Output CSV (default stdout)");

  DesignArgs da;
  auto* dw = app.add_subcommand("design-weight", "Design a step weight minimizing the worst-case rate");
  dw->add_option("--start", da.start, "Start parameters: gamma-slise or enhanced-gamma-slise")->capture_default_str();
  dw->add_option("--gap", da.gap, "Gap parameter")->capture_default_str();
  dw->add_option("--poles", da.poles, "Filter pole count")->capture_default_str();
  dw->add_option("--budget", da.budget, "Objective evaluations")->capture_default_str();
  dw->add_option("--seed", da.seed, "Seed (the simplex search is deterministic)")->capture_default_str();
  dw->add_option("--out", da.out, "Output weight JSON (default stdout)");
  dw->add_option("--trace", da.trace, "Design log CSV");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Run subspace iteration on synthetic problems");
  sim->add_option("--problem", sa.problem, "standard or smoke")->capture_default_str();
  sim->add_option("--start,--filter", sa.filters, "Filters (builtin names, gauss-legendre, or JSON files)")
      ->capture_default_str();
  sim->add_option("--poles", sa.poles, "Pole count for gauss-legendre")->capture_default_str();
  sim->add_option("--multiplier", sa.multiplier, "Subspace size as a multiple of the interior count")
      ->capture_default_str();
  sim->add_option("--problems", sa.problems, "Number of standard problems")->capture_default_str();
  sim->add_option("--seed", sa.seed, "First standard problem id")->capture_default_str();
  sim->add_option("--tol", sa.tol, "Eigentrace tolerance")->capture_default_str();
  sim->add_option("--out", sa.out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*opt) return run_optimize(oa);
    if (*ev) return run_eval(ea);
    if (*rt) return run_rates(ra);
    if (*dw) return run_design(da);
    if (*sim) return run_simulate(sa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ff::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ff::LookupError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ff::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
