#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/filter_io.hpp"
#include "filterforge/optim/nelder_mead.hpp"
#include "filterforge/pipeline.hpp"
#include "filterforge/rates.hpp"
#include "filterforge/weight.hpp"

namespace filterforge {

/// End of the tail step of a realized parametric weight.
inline constexpr double kSupportCap = 10.0;

/// Step-weight family with heights v1..v5 on
/// [0, w1), [w1, 1/w1), [1/w1, w2), [w2, w3), [w3, 10).
struct ParametricWeight {
  std::array<double, 5> v{};
  double w1 = 0.95, w2 = 1.4, w3 = 5.0;

  void validate() const {
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("parametric weight: heights must be finite and >= 0");
    if (!(w1 > 0.0 && w1 < 1.0)) throw DomainError("parametric weight: w1 must lie in (0, 1)");
    if (!(1.0 / w1 < w2 && w2 < w3) || !std::isfinite(w3))
      throw DomainError("parametric weight: need 1/w1 < w2 < w3");
  }

  static ParametricWeight gamma_slise() { return {{1.0, 0.01, 10.0, 20.0, 0.0}, 0.95, 1.4, 5.0}; }
  static ParametricWeight enhanced_gamma_slise() { return {{0.7, 0.00092, 887.0, 20.0, 0.0}, 0.96, 1.4, 10.0}; }

  ParametricWeight scaled(double factor) const {
    ParametricWeight p = *this;
    for (auto& x : p.v) x *= factor;
    return p;
  }

  friend bool operator==(const ParametricWeight&, const ParametricWeight&) = default;
};

/// Step weight with breakpoints (w1, 1/w1, w2, w3) and heights v1..v4, plus
/// the tail height v5 on [w3, 10) when w3 < 10.
inline StepWeightFunction realize(const ParametricWeight& pw) {
  pw.validate();
  std::vector<double> b{pw.w1, 1.0 / pw.w1, pw.w2, pw.w3};
  std::vector<double> v{pw.v[0], pw.v[1], pw.v[2], pw.v[3]};
  if (pw.w3 < kSupportCap) {
    b.push_back(kSupportCap);
    v.push_back(pw.v[4]);
  }
  return StepWeightFunction(std::move(b), std::move(v));
}

struct DesignConfig {
  /// Inner SLiSe optimization budget per candidate.
  OptimizerConfig inner = [] {
    OptimizerConfig c;
    c.max_iterations = 300;
    c.max_evaluations = 2000;
    return c;
  }();
  NelderMeadConfig simplex = [] {
    NelderMeadConfig c;
    c.x_tolerance = 1e-6;
    c.f_tolerance = 1e-10;
    c.parallel = true;
    // log-scale offsets: each start parameter is perturbed by about 10%
    c.absolute_step = 0.1;
    return c;
  }();
  /// Height substituted for v_i = 0 in the log-parametrized search space.
  double zero_height = 1e-6;
};

/// Worst-case rate at gap G of the SLiSe filter optimized for realize(pw)
/// from the Gauss-Legendre start. A failed inner optimization yields +inf and
/// the reason is stored in `diagnostic` when given.
inline double weight_objective(const ParametricWeight& pw, GapParameter gap, int m, const DesignConfig& config = {},
                               std::string* diagnostic = nullptr) {
  try {
    OptimizerReport rep;
    const auto filter = slise_filter(realize(pw), m, config.inner, &rep);
    if (!std::isfinite(rep.final_loss)) throw NumericError("inner optimization produced a non-finite loss");
    return worst_case_rate(filter, gap);
  } catch (const std::exception& e) {
    if (diagnostic) *diagnostic = e.what();
    return std::numeric_limits<double>::infinity();
  }
}

namespace detail {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// 8-vector (log v1..log v5, logit w1, log(w2 - 1/w1), log(w3 - w2)); every
// finite vector maps to a valid ParametricWeight.
inline Eigen::VectorXd to_design_space(const ParametricWeight& pw, double zero_height) {
  Eigen::VectorXd u(8);
  for (int i = 0; i < 5; ++i) u[i] = std::log(pw.v[static_cast<std::size_t>(i)] > 0.0 ? pw.v[static_cast<std::size_t>(i)] : zero_height);
  u[5] = logit(pw.w1);
  u[6] = std::log(pw.w2 - 1.0 / pw.w1);
  u[7] = std::log(pw.w3 - pw.w2);
  return u;
}

inline ParametricWeight from_design_space(const Eigen::VectorXd& u) {
  ParametricWeight pw;
  for (int i = 0; i < 5; ++i) pw.v[static_cast<std::size_t>(i)] = std::exp(u[i]);
  pw.w1 = logistic(u[5]);
  pw.w2 = 1.0 / pw.w1 + std::exp(u[6]);
  pw.w3 = pw.w2 + std::exp(u[7]);
  return pw;
}

}  // namespace detail

/// Called once per objective evaluation with (evaluation, objective, weight).
using DesignObserver = std::function<void(int, double, const ParametricWeight&)>;

struct DesignResult {
  ParametricWeight weight;
  OptimizerReport report;
  double start_objective = 0.0;
};

/// Nelder-Mead over the 8 reparametrized weight parameters. `budget` caps the
/// number of objective evaluations (the start counts as one). The returned
/// weight is the best candidate seen, so its objective never exceeds the
/// start's. Zero heights in the start are searched from `zero_height`.
inline DesignResult design_weight(const ParametricWeight& start, GapParameter gap, int m, int budget,
                                  const DesignConfig& config = {}, const DesignObserver& observer = {}) {
  start.validate();
  if (budget < 0) throw DomainError("design_weight: negative budget");
  DesignResult out;
  out.weight = start;
  out.start_objective = weight_objective(start, gap, m, config);
  if (!std::isfinite(out.start_objective)) throw DomainError("design_weight: objective is infinite at the start");
  int evaluation = 1;
  if (observer) observer(evaluation, out.start_objective, start);

  out.report.solution = detail::to_design_space(start, config.zero_height);
  out.report.final_loss = out.start_objective;
  out.report.loss_evaluations = 1;
  out.report.termination = Termination::MaxEval;
  out.report.active_bounds.assign(8, false);
  if (budget <= 1) return out;

  auto nm = config.simplex;
  nm.max_evaluations = budget - 1;
  auto objective = [&](const Eigen::VectorXd& u) {
    return weight_objective(detail::from_design_space(u), gap, m, config);
  };
  auto on_eval = [&](int, const Eigen::VectorXd& u, double f) {
    ++evaluation;
    if (observer) observer(evaluation, f, detail::from_design_space(u));
  };
  auto rep = nelder_mead(objective, out.report.solution, nm, on_eval);
  rep.loss_evaluations += 1;
  rep.gradient_evaluations = 0;
  rep.active_bounds.assign(8, false);
  if (rep.final_loss < out.start_objective) {
    out.weight = detail::from_design_space(rep.solution);
  } else {
    rep.final_loss = out.start_objective;
    rep.solution = detail::to_design_space(start, config.zero_height);
  }
  out.report = std::move(rep);
  return out;
}

/// Design log header; rows come from design_log_row.
inline constexpr const char* kDesignLogHeader = "evaluation,objective,v1,v2,v3,v4,v5,w1,w2,w3";

inline std::string design_log_row(int evaluation, double objective, const ParametricWeight& pw) {
  std::ostringstream os;
  os << evaluation << ',' << detail::format_shortest(objective);
  for (double x : pw.v) os << ',' << detail::format_shortest(x);
  os << ',' << detail::format_shortest(pw.w1) << ',' << detail::format_shortest(pw.w2) << ','
     << detail::format_shortest(pw.w3);
  return os.str();
}

}  // namespace filterforge
