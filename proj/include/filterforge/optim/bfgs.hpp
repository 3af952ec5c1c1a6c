#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/optim/line_search.hpp"
#include "filterforge/optim/types.hpp"

namespace filterforge {

/// Inverse BFGS update
///
///   H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T,   rho = 1 / (y^T s).
///
/// When the curvature condition y^T s > 0 fails, H is returned unchanged and
/// `applied` (if given) is set to false.
inline Eigen::MatrixXd bfgs_update(const Eigen::MatrixXd& H, const Eigen::VectorXd& s, const Eigen::VectorXd& y,
                                   bool* applied = nullptr) {
  if (H.rows() != H.cols() || H.rows() != s.size() || s.size() != y.size())
    throw DomainError("bfgs_update: shape mismatch");
  const double ys = y.dot(s);
  if (!(ys > 0.0) || !std::isfinite(ys)) {
    if (applied) *applied = false;
    return H;
  }
  const double rho = 1.0 / ys;
  const Eigen::VectorXd hy = H * y;
  const double yhy = y.dot(hy);
  Eigen::MatrixXd out = H - rho * (s * hy.transpose() + hy * s.transpose()) + (rho * rho * yhy + rho) * s * s.transpose();
  out = 0.5 * (out + out.transpose()).eval();
  if (applied) *applied = true;
  return out;
}

namespace detail {

// Objective adaptor counting evaluations of a combined value/gradient callable.
template <typename F>
struct CountedObjective {
  F& f;
  int evaluations = 0;

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++evaluations;
    return f(x, g);
  }
};

struct Trial {
  double alpha, f;
  Eigen::VectorXd x, g;
};

inline const Trial& accepted_trial(const std::vector<Trial>& trials, double alpha) {
  for (auto it = trials.rbegin(); it != trials.rend(); ++it)
    if (it->alpha == alpha) return *it;
  throw NumericError("line search returned a step that was never evaluated");
}

inline double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Unconstrained BFGS (inverse-Hessian form, H0 = I) with a Wolfe line search.
/// Before the first update H0 is rescaled by y^T s / y^T y.
/// `f(x, g)` returns the loss and writes the gradient into g; a non-finite
/// return marks x as outside the domain.
template <typename F>
OptimizerReport bfgs_minimize(F&& f, const Eigen::VectorXd& x0, const OptimizerConfig& config = {},
                              const IterationObserver& observer = {}) {
  config.validate();
  detail::CountedObjective<F> obj{f};
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = x0, g(n);
  double fx = obj(x, g);
  if (!std::isfinite(fx) || !g.allFinite()) throw DomainError("bfgs_minimize: objective not finite at x0");
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);

  OptimizerReport rep;
  rep.termination = Termination::MaxIter;
  Eigen::VectorXd xn(n), gn(n);
  for (;;) {
    rep.gradient_norm = detail::inf_norm(g);
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
    Eigen::VectorXd p = -H * g;
    double dphi0 = g.dot(p);
    if (!(dphi0 < 0.0)) {
      H.setIdentity();
      p = -g;
      dphi0 = g.dot(p);
    }
    std::vector<detail::Trial> trials;
    auto phi = [&](double a) {
      xn = x + a * p;
      const double v = obj(xn, gn);
      trials.push_back({a, v, xn, gn});
      return std::pair<double, double>(v, gn.dot(p));
    };
    LineSearchOptions lso;
    lso.c1 = config.c1;
    lso.c2 = config.c2;
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
    if (!applied) ++rep.skipped_updates;
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
      ev.gradient_norm = detail::inf_norm(g);
      ev.evaluations = obj.evaluations;
      ev.alpha = ls.alpha;
      ev.phi0 = fprev;
      ev.dphi0 = dphi0;
      ev.phi = ls.phi;
      ev.dphi = ls.dphi;
      ev.c1 = config.c1;
      ev.c2 = config.c2;
      ev.update_applied = applied;
      observer(ev);
    }
    if (config.loss_tolerance > 0.0 && fprev - fx <= config.loss_tolerance * std::max(1.0, std::abs(fx))) {
      rep.gradient_norm = detail::inf_norm(g);
      rep.termination = Termination::LossTol;
      break;
    }
  }
  rep.solution = x;
  rep.final_loss = fx;
  rep.loss_evaluations = obj.evaluations;
  rep.gradient_evaluations = obj.evaluations;
  rep.active_bounds.assign(static_cast<std::size_t>(n), false);
  return rep;
}

/// Overload with separate loss and gradient callables.
template <typename L, typename G>
OptimizerReport bfgs_minimize(L&& loss, G&& grad, const Eigen::VectorXd& x0, const OptimizerConfig& config = {},
                              const IterationObserver& observer = {}) {
  auto combined = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double v = loss(x);
    if (std::isfinite(v)) g = grad(x);
    return v;
  };
  return bfgs_minimize(combined, x0, config, observer);
}

}  // namespace filterforge
