#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/optim/bfgs.hpp"
#include "filterforge/optim/line_search.hpp"
#include "filterforge/optim/types.hpp"

namespace filterforge {

/// Componentwise clamp into the box.
inline Eigen::VectorXd project(const Eigen::VectorXd& x, const BoxBounds& bounds) {
  if (x.size() != bounds.size()) throw DomainError("project: shape mismatch");
  return x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
}

/// x - P(x - g): zero exactly at first-order stationary points of the box problem.
inline Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                          const BoxBounds& bounds) {
  return x - project(x - g, bounds);
}

struct CauchyPoint {
  Eigen::VectorXd point;
  /// Variables that reached a bound along the projected-gradient path.
  std::vector<bool> fixed;
  double t = 0.0;
};

/// First local minimizer of q(d) = g^T d + 1/2 d^T B d along the projected
/// path P(x - t g), t >= 0, found segment by segment between the breakpoints
/// where coordinates hit their bounds.
inline CauchyPoint cauchy_point(const Eigen::MatrixXd& B, const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                const BoxBounds& bounds) {
  const Eigen::Index n = x.size();
  if (g.size() != n || B.rows() != n || B.cols() != n || bounds.size() != n)
    throw DomainError("cauchy_point: shape mismatch");
  const double inf = std::numeric_limits<double>::infinity();
  CauchyPoint cp;
  cp.point = x;
  cp.fixed.assign(static_cast<std::size_t>(n), false);

  Eigen::VectorXd tb(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g[i] < 0.0)
      tb[i] = (x[i] - bounds.upper[i]) / g[i];
    else if (g[i] > 0.0)
      tb[i] = (x[i] - bounds.lower[i]) / g[i];
    else
      tb[i] = inf;
    d[i] = tb[i] > 0.0 ? -g[i] : 0.0;
    if (tb[i] <= 0.0) cp.fixed[static_cast<std::size_t>(i)] = true;
  }
  if (d.squaredNorm() == 0.0) return cp;

  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i)
    if (tb[i] > 0.0 && std::isfinite(tb[i])) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tb[a] < tb[b]; });

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);  // displacement reached so far
  double t_prev = 0.0;
  std::size_t next = 0;
  for (;;) {
    const Eigen::VectorXd bd = B * d;
    const double f1 = g.dot(d) + z.dot(bd);
    const double f2 = d.dot(bd);
    const double t_next = next < order.size() ? tb[order[next]] : inf;
    if (f1 >= 0.0) break;
    const double dt_min = f2 > 0.0 ? -f1 / f2 : inf;
    if (dt_min < t_next - t_prev) {
      z += dt_min * d;
      t_prev += dt_min;
      break;
    }
    if (!std::isfinite(t_next)) {
      // unbounded descent along the path; the model is not convex here
      throw NumericError("cauchy_point: model unbounded below along the projected path");
    }
    z += (t_next - t_prev) * d;
    t_prev = t_next;
    // every coordinate sharing this breakpoint becomes fixed at its bound
    while (next < order.size() && tb[order[next]] <= t_next) {
      const Eigen::Index b = order[next++];
      z[b] = (g[b] > 0.0 ? bounds.lower[b] : bounds.upper[b]) - x[b];
      d[b] = 0.0;
      cp.fixed[static_cast<std::size_t>(b)] = true;
    }
    if (d.squaredNorm() == 0.0) break;
  }
  cp.point = project(x + z, bounds);
  cp.t = t_prev;
  return cp;
}

namespace detail {

// Largest a with lower <= x + a p <= upper.
inline double max_feasible_step(const Eigen::VectorXd& x, const Eigen::VectorXd& p, const BoxBounds& bounds) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (p[i] > 0.0)
      a = std::min(a, (bounds.upper[i] - x[i]) / p[i]);
    else if (p[i] < 0.0)
      a = std::min(a, (bounds.lower[i] - x[i]) / p[i]);
  }
  return std::max(a, 0.0);
}

inline std::vector<bool> active_mask(const Eigen::VectorXd& x, const BoxBounds& bounds) {
  std::vector<bool> mask(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i)
    mask[static_cast<std::size_t>(i)] = x[i] == bounds.lower[i] || x[i] == bounds.upper[i];
  return mask;
}

}  // namespace detail

/// Box-constrained BFGS. Each iteration builds the quadratic model from the
/// current Hessian approximation B = H^-1, finds its generalized Cauchy point,
/// minimizes the model over the variables still free there, projects the
/// result into the box and runs a Wolfe line search along p = x~ - x capped at
/// the feasible maximum. As in the unconstrained method, H0 = I is rescaled by
/// y^T s / y^T y before the first update. Iterates are clamped, so they satisfy the bounds
/// exactly. Throws DomainError if x0 lies outside the box.
template <typename F>
OptimizerReport box_bfgs_minimize(F&& f, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                                  const OptimizerConfig& config = {}, const IterationObserver& observer = {}) {
  config.validate();
  bounds.validate();
  const Eigen::Index n = x0.size();
  if (bounds.size() != n) throw DomainError("box_bfgs_minimize: bounds do not match x0");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(bounds.lower[i] <= x0[i] && x0[i] <= bounds.upper[i]))
      throw DomainError("box_bfgs_minimize: start violates bound at index " + std::to_string(i));

  detail::CountedObjective<F> obj{f};
  Eigen::VectorXd x = x0, g(n);
  double fx = obj(x, g);
  if (!std::isfinite(fx) || !g.allFinite()) throw DomainError("box_bfgs_minimize: objective not finite at x0");
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);

  OptimizerReport rep;
  Eigen::VectorXd xn(n), gn(n);
  for (;;) {
    rep.gradient_norm = detail::inf_norm(projected_gradient(x, g, bounds));
    if (rep.gradient_norm <= config.gradient_tolerance) {
      rep.termination = Termination::GradientTol;
      break;
    }
    if (rep.iterations >= config.max_iterations) {
      rep.termination = Termination::MaxIter;
      break;
    }
    if (obj.evaluations >= config.max_evaluations) {
      rep.termination = Termination::MaxEval;
      break;
    }

    const auto cp = cauchy_point(B, x, g, bounds);
    Eigen::VectorXd target = cp.point;
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!cp.fixed[static_cast<std::size_t>(i)]) free.push_back(i);
    if (!free.empty()) {
      // minimize the model over the free variables with the others held at
      // the Cauchy point: B_FF d = -(g + B (x_c - x))_F
      const Eigen::VectorXd r = g + B * (cp.point - x);
      const auto nf = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd bff(nf, nf);
      Eigen::VectorXd rf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rf[a] = r[free[a]];
        for (Eigen::Index b = 0; b < nf; ++b) bff(a, b) = B(free[a], free[b]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(bff);
      if (llt.info() == Eigen::Success) {
        const Eigen::VectorXd df = llt.solve(-rf);
        for (Eigen::Index a = 0; a < nf; ++a) target[free[a]] += df[a];
        target = project(target, bounds);
      }
    }
    Eigen::VectorXd p = target - x;
    double dphi0 = g.dot(p);
    if (!(dphi0 < 0.0)) {
      p = cp.point - x;
      dphi0 = g.dot(p);
    }
    if (!(dphi0 < 0.0)) {
      // model exhausted: restart from the identity and the plain projected path
      H.setIdentity();
      B.setIdentity();
      p = project(x - g, bounds) - x;
      dphi0 = g.dot(p);
      if (!(dphi0 < 0.0)) {
        rep.termination = Termination::Stalled;
        break;
      }
    }

    std::vector<detail::Trial> trials;
    auto phi = [&](double a) {
      xn = project(x + a * p, bounds);
      const double v = obj(xn, gn);
      trials.push_back({a, v, xn, gn});
      return std::pair<double, double>(v, gn.dot(p));
    };
    LineSearchOptions lso;
    lso.c1 = config.c1;
    lso.c2 = config.c2;
    lso.alpha_max = std::max(1.0, detail::max_feasible_step(x, p, bounds));
    lso.max_evaluations = std::min(config.line_search_evaluations, config.max_evaluations - obj.evaluations);
    const auto ls = wolfe_line_search(phi, fx, dphi0, lso);
    if (!ls.success) {
      if (obj.evaluations >= config.max_evaluations)
        rep.termination = Termination::MaxEval;
      else if (-dphi0 <= config.stall_tolerance * std::abs(fx))
        rep.termination = Termination::Stalled;
      else
        rep.termination = Termination::LineSearchFail;
      break;
    }
    const auto& acc = detail::accepted_trial(trials, ls.alpha);
    xn = acc.x;
    gn = acc.g;
    const double fn = acc.f;
    const Eigen::VectorXd s = xn - x, y = gn - g;
    bool applied = false;
    if (rep.iterations == 0 && y.dot(s) > 0.0) H *= y.dot(s) / y.squaredNorm();
    H = bfgs_update(H, s, y, &applied);
    if (applied) {
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() == Eigen::Success) {
        B = llt.solve(Eigen::MatrixXd::Identity(n, n));
        B = 0.5 * (B + B.transpose()).eval();
      } else {
        H.setIdentity();
        B.setIdentity();
      }
    } else {
      ++rep.skipped_updates;
    }
    const double fprev = fx;
    x = xn;
    g = gn;
    fx = fn;
    ++rep.iterations;
    if (observer) {
      IterationEvent ev;
      ev.iteration = rep.iterations;
      ev.x = &x;
      ev.inverse_hessian = &H;
      ev.loss = fx;
      ev.previous_loss = fprev;
      ev.gradient_norm = detail::inf_norm(projected_gradient(x, g, bounds));
      ev.evaluations = obj.evaluations;
      ev.alpha = ls.alpha;
      ev.phi0 = fprev;
      ev.dphi0 = dphi0;
      ev.phi = ls.phi;
      ev.dphi = ls.dphi;
      ev.c1 = config.c1;
      ev.c2 = config.c2;
      ev.bound_limited = ls.bound_limited;
      ev.update_applied = applied;
      observer(ev);
    }
    if (config.loss_tolerance > 0.0 && fprev - fx <= config.loss_tolerance * std::max(1.0, std::abs(fx))) {
      rep.gradient_norm = detail::inf_norm(projected_gradient(x, g, bounds));
      rep.termination = Termination::LossTol;
      break;
    }
  }
  rep.solution = x;
  rep.final_loss = fx;
  rep.loss_evaluations = obj.evaluations;
  rep.gradient_evaluations = obj.evaluations;
  rep.active_bounds = detail::active_mask(x, bounds);
  return rep;
}

}  // namespace filterforge
