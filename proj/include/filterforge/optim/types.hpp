#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"

namespace filterforge {

struct OptimizerConfig {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_iterations = 1000;
  int max_evaluations = 10000;
  /// Threshold on the infinity norm of the (projected) gradient.
  double gradient_tolerance = 1e-8;
  /// Relative loss decrease per iteration below which the run stops; 0 disables.
  double loss_tolerance = 0.0;
  /// A failed line search counts as stalled rather than failed when the
  /// directional derivative is below this fraction of the loss.
  double stall_tolerance = 1e-10;
  int line_search_evaluations = 100;

  void validate() const {
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) throw DomainError("optimizer config: need 0 < c1 < c2 < 1");
    if (max_iterations < 0 || max_evaluations < 0) throw DomainError("optimizer config: negative budget");
    if (!(gradient_tolerance >= 0.0) || !(loss_tolerance >= 0.0))
      throw DomainError("optimizer config: tolerances must be non-negative");
    if (line_search_evaluations < 1) throw DomainError("optimizer config: line search needs evaluations");
  }
};

enum class Termination { GradientTol, LossTol, MaxIter, MaxEval, LineSearchFail, Stalled, SimplexTol };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::GradientTol: return "gradient-tolerance";
    case Termination::LossTol: return "loss-tolerance";
    case Termination::MaxIter: return "max-iterations";
    case Termination::MaxEval: return "max-evaluations";
    case Termination::LineSearchFail: return "line-search-failure";
    case Termination::Stalled: return "stalled";
    case Termination::SimplexTol: return "simplex-tolerance";
  }
  return "unknown";
}

struct OptimizerReport {
  Eigen::VectorXd solution;
  double final_loss = 0.0;
  int iterations = 0;
  int loss_evaluations = 0;
  int gradient_evaluations = 0;
  Termination termination = Termination::MaxIter;
  std::vector<bool> active_bounds;
  double gradient_norm = 0.0;
  int skipped_updates = 0;
};

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxBounds() = default;
  BoxBounds(Eigen::VectorXd l, Eigen::VectorXd u) : lower(std::move(l)), upper(std::move(u)) { validate(); }

  static BoxBounds unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    return BoxBounds(Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf));
  }

  Eigen::Index size() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size()) throw DomainError("box bounds: size mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] <= upper[i]) || std::isnan(lower[i]) || std::isnan(upper[i]))
        throw DomainError("box bounds: lower > upper at index " + std::to_string(i));
  }

  bool contains(const Eigen::VectorXd& x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (!(lower[i] <= x[i] && x[i] <= upper[i])) return false;
    return true;
  }
};

/// Per-iteration snapshot passed to an optional observer after every accepted step.
struct IterationEvent {
  int iteration = 0;
  const Eigen::VectorXd* x = nullptr;
  const Eigen::MatrixXd* inverse_hessian = nullptr;
  double loss = 0.0;
  double previous_loss = 0.0;
  double gradient_norm = 0.0;
  int evaluations = 0;
  double alpha = 0.0;
  double phi0 = 0.0, dphi0 = 0.0, phi = 0.0, dphi = 0.0;
  double c1 = 0.0, c2 = 0.0;
  bool bound_limited = false;
  bool update_applied = false;
};

using IterationObserver = std::function<void(const IterationEvent&)>;

}  // namespace filterforge
