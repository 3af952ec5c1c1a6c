#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/optim/types.hpp"
#include "filterforge/parallel.hpp"

namespace filterforge {

struct NelderMeadConfig {
  int max_evaluations = 2000;
  int max_iterations = std::numeric_limits<int>::max();
  /// Convergence needs every vertex within x_tolerance (infinity norm) of the
  /// best vertex and the spread of simplex values below f_tolerance.
  double x_tolerance = 1e-8;
  double f_tolerance = 1e-12;
  /// Relative perturbation for the initial simplex (absolute for zero entries).
  double initial_step = 0.1;
  double zero_step = 2.5e-4;
  /// When positive, every vertex is offset by this amount instead.
  double absolute_step = 0.0;
  /// Evaluate the initial simplex and shrink steps concurrently.
  bool parallel = false;
};

/// Observer called after every objective evaluation with (count, x, f(x)).
using EvaluationObserver = std::function<void(int, const Eigen::VectorXd&, double)>;

/// Nelder-Mead simplex search with reflection 1, expansion 2, contraction 0.5
/// and shrink 0.5. Non-finite objective values are treated as +inf. The
/// returned solution is the best point seen; its value never exceeds f(x0).
template <typename F>
OptimizerReport nelder_mead(F&& f, const Eigen::VectorXd& x0, const NelderMeadConfig& config = {},
                            const EvaluationObserver& on_eval = {}) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  const Eigen::Index n = x0.size();
  if (n == 0) throw DomainError("nelder_mead: empty start vector");
  if (config.max_evaluations < 0) throw DomainError("nelder_mead: negative budget");

  OptimizerReport rep;
  int evals = 0;
  auto clean = [](double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); };
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = clean(f(x));
    ++evals;
    if (on_eval) on_eval(evals, x, v);
    return v;
  };

  const double f0 = eval(x0);
  if (!std::isfinite(f0)) throw DomainError("nelder_mead: objective not finite at x0");
  rep.active_bounds.assign(static_cast<std::size_t>(n), false);
  if (config.max_evaluations <= 1 + n) {
    // not enough budget to build a simplex
    rep.solution = x0;
    rep.final_loss = f0;
    rep.loss_evaluations = evals;
    rep.termination = Termination::MaxEval;
    return rep;
  }

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(n + 1), f0);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& v = pts[static_cast<std::size_t>(i + 1)];
    if (config.absolute_step > 0.0)
      v[i] = x0[i] + config.absolute_step;
    else
      v[i] = x0[i] != 0.0 ? x0[i] * (1.0 + config.initial_step) : config.zero_step;
  }
  auto eval_batch = [&](std::size_t first, std::size_t last) {
    if (config.parallel) {
      std::vector<double> out(last - first);
      parallel_for(last - first, [&](std::size_t k) { out[k] = clean(f(pts[first + k])); });
      for (std::size_t k = first; k < last; ++k) {
        vals[k] = out[k - first];
        ++evals;
        if (on_eval) on_eval(evals, pts[k], vals[k]);
      }
    } else {
      for (std::size_t k = first; k < last; ++k) vals[k] = eval(pts[k]);
    }
  };
  eval_batch(1, pts.size());

  std::vector<std::size_t> idx(pts.size());
  auto sort_simplex = [&] {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (auto k : idx) {
      p2.push_back(pts[k]);
      v2.push_back(vals[k]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  rep.termination = Termination::MaxEval;
  for (;;) {
    sort_simplex();
    double diameter = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k)
      diameter = std::max(diameter, (pts[k] - pts[0]).cwiseAbs().maxCoeff());
    if (diameter <= config.x_tolerance && vals.back() - vals.front() <= config.f_tolerance) {
      rep.termination = Termination::SimplexTol;
      break;
    }
    if (evals >= config.max_evaluations) {
      rep.termination = Termination::MaxEval;
      break;
    }
    if (rep.iterations >= config.max_iterations) {
      rep.termination = Termination::MaxIter;
      break;
    }
    ++rep.iterations;
    const std::size_t worst = pts.size() - 1;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < worst; ++k) centroid += pts[k];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + kReflect * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      if (evals >= config.max_evaluations) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const Eigen::VectorXd xe = centroid + kExpand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[worst - 1]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    if (evals >= config.max_evaluations) continue;
    // contraction: outside if the reflection improved on the worst, else inside
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + kContract * (xr - centroid))
                                       : Eigen::VectorXd(centroid + kContract * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    if (evals + static_cast<int>(worst) > config.max_evaluations) {
      rep.termination = Termination::MaxEval;
      sort_simplex();
      break;
    }
    for (std::size_t k = 1; k < pts.size(); ++k) pts[k] = pts[0] + kShrink * (pts[k] - pts[0]);
    eval_batch(1, pts.size());
  }
  rep.solution = pts[0];
  rep.final_loss = vals[0];
  rep.loss_evaluations = evals;
  return rep;
}

}  // namespace filterforge
