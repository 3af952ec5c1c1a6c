#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"
#include "filterforge/optim/bfgs.hpp"
#include "filterforge/optim/box.hpp"
#include "filterforge/slise.hpp"

namespace filterforge {

struct ShapeConstraintOptions {
  double initial_penalty = 1.0;
  double penalty_growth = 10.0;
  int max_rounds = 8;
  /// Constraint slack allowed in the returned filter.
  double feasibility_tolerance = 1e-8;
  /// The penalty targets C_i (1 - margin) so that the residual penalty
  /// violation still lands inside C_i.
  double margin = 1e-3;
};

/// Maximum of |r(x_i)| - C_i over the constraint points (<= 0 when feasible).
inline double shape_violation(const RationalFilter& filter, std::span<const double> points,
                              std::span<const double> limits) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) worst = std::max(worst, std::abs(filter(points[i])) - limits[i]);
  return points.empty() ? 0.0 : worst;
}

/// SLiSe minimization subject to |r(x_i)| <= C_i with C_i = (1 + c)|r_0(x_i)|
/// for the start filter r_0. Quadratic-penalty outer loop (penalty x10 per
/// round, at most 8 rounds) around box_bfgs_minimize on an unbounded box; the
/// returned solution is the lowest-loss feasible iterate among the rounds and
/// the start. With no points this is exactly bfgs_minimize.
inline OptimizerReport shape_constrained_minimize(const SliseObjective& obj, const RationalFilter& start,
                                                  std::span<const double> points, double c,
                                                  const OptimizerConfig& config = {},
                                                  const ShapeConstraintOptions& options = {}) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("shape constraints: c must lie in (0, 1)");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] > 1.0)) throw DomainError("shape constraints: points must exceed 1");
    if (i > 0 && !(points[i] > points[i - 1])) throw DomainError("shape constraints: points must ascend");
  }
  const RealVector x0 = to_real(start);
  auto base = real_objective(obj);
  if (points.empty()) return bfgs_minimize(base, x0, config);

  std::vector<double> limits, targets;
  for (double x : points) {
    limits.push_back((1.0 + c) * std::abs(start(x)));
    targets.push_back(limits.back() * (1.0 - options.margin));
  }
  if (shape_violation(start, points, limits) > 0.0)
    throw DomainError("shape constraints: start filter violates its own limits");

  OptimizerReport best;
  best.solution = x0;
  RealVector g0(x0.size());
  best.final_loss = base(x0, g0);
  best.termination = Termination::MaxIter;
  best.gradient_norm = detail::inf_norm(g0);

  const auto bounds = BoxBounds::unbounded(x0.size());
  RealVector x = x0;
  double mu = options.initial_penalty;
  int iterations = 0, evaluations = 1;
  for (int round = 0; round < options.max_rounds; ++round, mu *= options.penalty_growth) {
    auto penalized = [&](const RealVector& v, RealVector& g) {
      double f = base(v, g);
      if (!std::isfinite(f)) return f;
      const auto p = from_real(v);
      for (std::size_t i = 0; i < points.size(); ++i) {
        double r = 0.0;
        for (std::size_t k = 0; k < p.poles.size(); ++k) {
          const complex w = p.poles[k], b = p.beta[k];
          r += 2.0 * (b / (points[i] - w) - b / (points[i] + w)).real();
        }
        const double up = r - targets[i], down = -r - targets[i];
        double slope = 0.0;
        if (up > 0.0) {
          f += mu * up * up;
          slope += 2.0 * mu * up;
        }
        if (down > 0.0) {
          f += mu * down * down;
          slope -= 2.0 * mu * down;
        }
        if (slope != 0.0) g += slope * filter_point_gradient(p.beta, p.poles, points[i]);
      }
      return f;
    };
    auto rep = box_bfgs_minimize(penalized, x, bounds, config);
    iterations += rep.iterations;
    evaluations += rep.loss_evaluations;
    x = rep.solution;
    RealVector g(x.size());
    const double fx = base(x, g);
    const auto candidate = filter_from_real(x);
    if (shape_violation(candidate, points, limits) <= options.feasibility_tolerance && fx < best.final_loss) {
      best.solution = x;
      best.final_loss = fx;
      best.termination = rep.termination;
      best.gradient_norm = detail::inf_norm(g);
    }
    if (shape_violation(candidate, points, targets) <= 0.0) break;
  }
  best.iterations = iterations;
  best.loss_evaluations = evaluations;
  best.gradient_evaluations = evaluations;
  best.active_bounds.assign(static_cast<std::size_t>(x0.size()), false);
  return best;
}

}  // namespace filterforge
