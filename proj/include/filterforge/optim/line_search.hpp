#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <utility>

#include "filterforge/errors.hpp"

namespace filterforge {

struct LineSearchResult {
  double alpha = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  int evaluations = 0;
  bool success = false;
  /// Step accepted at the feasible maximum with sufficient decrease only.
  bool bound_limited = false;
};

struct LineSearchOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  double alpha_init = 1.0;
  double alpha_max = std::numeric_limits<double>::infinity();
  int max_evaluations = 100;
};

namespace detail {

// Minimizer of the cubic through (a, fa, da), (b, fb, db), or NaN.
inline double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

}  // namespace detail

/// Bracket-and-zoom search for a step satisfying the Wolfe conditions
///
///   phi(a) <= phi(0) + c1 a phi'(0)   and   phi'(a) >= c2 phi'(0),
///
/// with cubic interpolation inside the bracket. `phi` maps a step length to
/// the pair (phi(a), phi'(a)); a non-finite value marks the step as too long.
/// Steps are capped at alpha_max. When phi is still decreasing at alpha_max the
/// capped step is accepted on sufficient decrease alone and flagged
/// `bound_limited`.
template <typename Phi>
LineSearchResult wolfe_line_search(Phi&& phi, double phi0, double dphi0, const LineSearchOptions& opt = {}) {
  if (!(dphi0 < 0.0)) throw DomainError("wolfe_line_search: direction is not a descent direction");
  if (!(0.0 < opt.c1 && opt.c1 < opt.c2 && opt.c2 < 1.0))
    throw DomainError("wolfe_line_search: need 0 < c1 < c2 < 1");
  if (!(opt.alpha_max > 0.0)) throw DomainError("wolfe_line_search: alpha_max must be positive");

  LineSearchResult res;
  auto armijo = [&](double a, double f) { return f <= phi0 + opt.c1 * a * dphi0 && f < phi0; };
  auto curvature = [&](double d) { return d >= opt.c2 * dphi0; };
  auto finite = [](double f, double d) { return std::isfinite(f) && std::isfinite(d); };

  // Zoom on a bracket whose `lo` end satisfies sufficient decrease.
  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi, double dhi) {
    while (res.evaluations < opt.max_evaluations) {
      const double left = std::min(lo, hi), right = std::max(lo, hi);
      const double width = right - left;
      if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, right)) break;
      double a = std::isfinite(fhi) && std::isfinite(dhi) ? detail::cubic_minimizer(lo, flo, dlo, hi, fhi, dhi)
                                                          : std::numeric_limits<double>::quiet_NaN();
      const double guard = 0.1 * width;
      if (!std::isfinite(a) || a < left + guard || a > right - guard) a = 0.5 * (lo + hi);
      const auto [f, d] = phi(a);
      ++res.evaluations;
      if (!finite(f, d) || !armijo(a, f) || f >= flo) {
        hi = a;
        fhi = f;
        dhi = d;
        continue;
      }
      if (curvature(d)) {
        res.alpha = a;
        res.phi = f;
        res.dphi = d;
        res.success = true;
        return;
      }
      if (d * (hi - lo) >= 0.0) {
        hi = lo;
        fhi = flo;
        dhi = dlo;
      }
      lo = a;
      flo = f;
      dlo = d;
    }
  };

  double a_prev = 0.0, f_prev = phi0, d_prev = dphi0;
  double a = std::min(opt.alpha_init, opt.alpha_max);
  double a_bad = std::numeric_limits<double>::infinity();
  while (res.evaluations < opt.max_evaluations) {
    const auto [f, d] = phi(a);
    ++res.evaluations;
    if (!finite(f, d)) {
      // outside the domain: shrink towards the last good step
      a_bad = a;
      a = a_prev + 0.5 * (a - a_prev);
      if (a - a_prev <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, a)) break;
      continue;
    }
    if (!armijo(a, f) || (a_prev > 0.0 && f >= f_prev)) {
      zoom(a_prev, f_prev, d_prev, a, f, d);
      return res;
    }
    if (curvature(d)) {
      res.alpha = a;
      res.phi = f;
      res.dphi = d;
      res.success = true;
      return res;
    }
    if (a >= opt.alpha_max) {
      res.alpha = a;
      res.phi = f;
      res.dphi = d;
      res.success = true;
      res.bound_limited = true;
      return res;
    }
    a_prev = a;
    f_prev = f;
    d_prev = d;
    a = std::min(4.0 * a, opt.alpha_max);
    // never extrapolate onto or past a step that left the domain
    if (a >= a_bad) a = a_prev + 0.5 * (a_bad - a_prev);
  }
  return res;
}

/// Convenience overload with separate value and derivative callables.
template <typename Phi, typename DPhi>
  requires std::invocable<DPhi&, double>
LineSearchResult wolfe_line_search(Phi&& phi, DPhi&& dphi, double c1, double c2, double alpha_init = 1.0) {
  LineSearchOptions opt;
  opt.c1 = c1;
  opt.c2 = c2;
  opt.alpha_init = alpha_init;
  return wolfe_line_search([&](double a) { return std::pair<double, double>(phi(a), dphi(a)); }, phi(0.0), dphi(0.0),
                           opt);
}

}  // namespace filterforge
