#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"
#include "filterforge/optim/nelder_mead.hpp"
#include "filterforge/quadrature.hpp"
#include "filterforge/slise.hpp"

namespace filterforge {

/// Gap parameter G in (0, 1): eigenvalues in [-1/G, -G] and [G, 1/G] are ignored.
class GapParameter {
 public:
  explicit GapParameter(double g) : g_(g) {
    if (!(g > 0.0 && g < 1.0)) throw DomainError("gap parameter must lie in (0, 1)");
  }
  double value() const noexcept { return g_; }
  operator double() const noexcept { return g_; }

 private:
  double g_;
};

inline constexpr double kDefaultGap = 0.95;

namespace detail {

// Bisection on the sign change of r' in [a, b], with the sign of r' known at a.
inline double refine_critical_point(const RationalFilter& r, double a, double b) {
  double da = r.evaluate_derivative(a);
  for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(b));
       ++it) {
    const double mid = 0.5 * (a + b);
    const double dm = r.evaluate_derivative(mid);
    if ((dm > 0.0) == (da > 0.0)) {
      a = mid;
      da = dm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

// Extremum of |r| over the sample points xs (ascending), refining every
// interior local extremum of the samples to the nearby critical point of r.
inline double abs_extremum(const RationalFilter& r, std::span<const double> xs, bool want_max) {
  std::vector<double> v(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) v[k] = std::abs(r(xs[k]));
  auto better = [&](double a, double b) { return want_max ? a > b : a < b; };
  double best = v.front();
  for (double x : v)
    if (better(x, best)) best = x;
  for (std::size_t k = 1; k + 1 < xs.size(); ++k) {
    const bool extremum = want_max ? (v[k] >= v[k - 1] && v[k] >= v[k + 1]) : (v[k] <= v[k - 1] && v[k] <= v[k + 1]);
    if (!extremum) continue;
    const double da = r.evaluate_derivative(xs[k - 1]), db = r.evaluate_derivative(xs[k + 1]);
    if ((da > 0.0) == (db > 0.0)) continue;
    const double x = refine_critical_point(r, xs[k - 1], xs[k + 1]);
    const double val = std::abs(r(x));
    if (better(val, best)) best = val;
  }
  return best;
}

inline std::vector<double> uniform_grid(double a, double b, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = a + (b - a) * k / (n - 1);
  xs.back() = b;
  return xs;
}

inline std::vector<double> geometric_grid(double a, double b, int n) {
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = a * std::pow(b / a, static_cast<double>(k) / (n - 1));
  xs.front() = a;
  xs.back() = b;
  return xs;
}

}  // namespace detail

inline constexpr int kRateSamples = 4096;

/// Extremes entering the worst-case rate.
struct WorstCaseBreakdown {
  double inner_min = 0.0;  // min |r| over [0, G]
  double outer_max = 0.0;  // max |r| over [1/G, inf)
  double scan_limit = 0.0;  // end of the explicit outer scan
  double rate() const { return outer_max / inner_min; }
};

/// max_{x >= 1/G} |r(x)| / min_{0 <= x <= G} |r(x)|. Both extrema are located
/// on 4096-point grids and refined at critical points of r. The outer scan
/// runs to 64/G and is extended until the tail bound
/// |r(x)| <= K / (x^2 - max|w|^2) certifies the rest of the half-line.
/// Throws NumericError when the inner minimum is below 1e-300.
inline WorstCaseBreakdown worst_case_breakdown(const RationalFilter& filter, GapParameter gap) {
  const double G = gap;
  WorstCaseBreakdown out;
  const auto inner = detail::uniform_grid(0.0, G, kRateSamples);
  out.inner_min = detail::abs_extremum(filter, inner, false);
  if (!(out.inner_min >= 1e-300)) throw NumericError("worst_case_rate: degenerate filter (vanishes inside [0, G])");

  double lo = 1.0 / G, hi = 64.0 / G;
  out.outer_max = detail::abs_extremum(filter, detail::geometric_grid(lo, hi, kRateSamples), true);
  const double K = filter.tail_constant(), R = filter.max_pole_modulus();
  for (int round = 0; round < 60; ++round) {
    if (hi > R && K / (hi * hi - R * R) <= out.outer_max) break;
    lo = hi;
    hi *= 4.0;
    out.outer_max = std::max(out.outer_max, detail::abs_extremum(filter, detail::geometric_grid(lo, hi, kRateSamples), true));
  }
  out.scan_limit = hi;
  return out;
}

inline double worst_case_rate(const RationalFilter& filter, GapParameter gap) {
  return worst_case_breakdown(filter, gap).rate();
}

/// Probability density of the eigenvalues, treated as zero beyond |x| > support.
struct EigenvalueDensity {
  std::function<double(double)> h;
  double support = 1.0;
  /// Interior points where h is discontinuous (used as panel boundaries).
  std::vector<double> breakpoints;

  EigenvalueDensity(std::function<double(double)> density, double support_bound, std::vector<double> breaks = {})
      : h(std::move(density)), support(support_bound), breakpoints(std::move(breaks)) {
    if (!h) throw DomainError("eigenvalue density: empty callback");
    if (!(support > 0.0) || !std::isfinite(support)) throw DomainError("eigenvalue density: support must be positive");
    std::sort(breakpoints.begin(), breakpoints.end());
    const double mass = probability(-support, support);
    if (std::abs(mass - 1.0) > 1e-6)
      throw DomainError("eigenvalue density: integrates to " + std::to_string(mass) + ", not 1");
  }

  double operator()(double x) const { return std::abs(x) > support ? 0.0 : h(x); }

  /// Panel boundaries of [a, b] including the density breakpoints inside.
  std::vector<double> panels(double a, double b) const {
    std::vector<double> br{a};
    for (double p : breakpoints)
      if (p > a && p < b) br.push_back(p);
    br.push_back(b);
    return br;
  }

  double probability(double a, double b) const {
    a = std::max(a, -support);
    b = std::min(b, support);
    if (!(a < b)) return 0.0;
    const auto br = panels(a, b);
    return integrate([this](double x) { return (*this)(x); }, std::span<const double>(br), 1e-13, 1e-12).value;
  }

  static EigenvalueDensity uniform(double a, double b) {
    if (!(a < b)) throw DomainError("uniform density: need a < b");
    const double height = 1.0 / (b - a);
    return EigenvalueDensity([a, b, height](double x) { return (x >= a && x <= b) ? height : 0.0; },
                             std::max(std::abs(a), std::abs(b)), {a, b});
  }

  /// Normal density truncated (numerically) at 12 standard deviations.
  static EigenvalueDensity normal(double mean, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("normal density: sigma must be positive");
    const double c = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    return EigenvalueDensity(
        [mean, sigma, c](double x) {
          const double z = (x - mean) / sigma;
          return c * std::exp(-0.5 * z * z);
        },
        std::abs(mean) + 12.0 * sigma, {});
  }
};

struct ExpectedRate {
  double value = 0.0;
  double inner_integral = 0.0;  // integral over I of h / |r|
  double outer_integral = 0.0;  // integral over O of |r| h
  double p_inner = 0.0, p_outer = 0.0;
  bool divergent = false;
  std::string diagnostic;
};

namespace detail {

// Sign changes of r on [a, b] located on a grid and refined by bisection.
inline std::vector<double> sign_changes(const RationalFilter& r, double a, double b, int samples) {
  std::vector<double> roots;
  double xp = a, fp = r(a);
  for (int k = 1; k < samples; ++k) {
    const double x = a + (b - a) * k / (samples - 1);
    const double fx = r(x);
    if (fx == 0.0 || (fx > 0.0) != (fp > 0.0)) {
      double lo = xp, hi = x;
      double flo = fp;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = r(mid);
        if ((fm > 0.0) == (flo > 0.0) && fm != 0.0) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    xp = x;
    fp = fx;
  }
  return roots;
}

}  // namespace detail

/// Expected convergence rate under an eigenvalue density,
///
///   E = (1 / (P_I P_O)) * integral_I h / |r| * integral_O |r| h,
///
/// with I = [-G, G] and O = |x| >= 1/G (cut at the density support). The
/// integrals use adaptive Gauss-Kronrod panels split at the density
/// breakpoints and at sign changes of r. A sign change inside I makes the
/// first integral diverge; the result is then +inf with a diagnostic.
inline ExpectedRate expected_rate_details(const RationalFilter& filter, const EigenvalueDensity& density,
                                          GapParameter gap) {
  const double G = gap;
  ExpectedRate out;
  out.p_inner = density.probability(-G, G);
  out.p_outer = density.probability(1.0 / G, density.support) + density.probability(-density.support, -1.0 / G);
  if (!(out.p_inner > 0.0) || !(out.p_outer > 0.0))
    throw DomainError("expected_rate: the density gives no mass to the interior or the exterior");

  constexpr double kAbsTol = 1e-14, kRelTol = 1e-11;
  const int scan = 10 * 200;
  const auto inner_roots = detail::sign_changes(filter, -G, G, scan);
  if (!inner_roots.empty()) {
    out.divergent = true;
    out.value = std::numeric_limits<double>::infinity();
    out.inner_integral = std::numeric_limits<double>::infinity();
    out.diagnostic = "filter changes sign inside [-G, G] near x = " + std::to_string(inner_roots.front());
    return out;
  }
  {
    const auto br = density.panels(-G, G);
    out.inner_integral =
        integrate([&](double x) { return density(x) / std::abs(filter(x)); }, std::span<const double>(br), kAbsTol, kRelTol)
            .value;
  }
  const double S = density.support;
  double outer = 0.0;
  if (S > 1.0 / G) {
    // |r| and h are even in structure only for r; integrate both sides
    for (int side : {-1, 1}) {
      const double a = side < 0 ? -S : 1.0 / G, b = side < 0 ? -1.0 / G : S;
      auto br = density.panels(a, b);
      for (double z : detail::sign_changes(filter, a, b, scan)) br.push_back(z);
      std::sort(br.begin(), br.end());
      outer += integrate([&](double x) { return std::abs(filter(x)) * density(x); }, std::span<const double>(br),
                         kAbsTol, kRelTol)
                   .value;
    }
  }
  out.outer_integral = outer;
  out.value = out.inner_integral * out.outer_integral / (out.p_inner * out.p_outer);
  return out;
}

inline double expected_rate(const RationalFilter& filter, const EigenvalueDensity& density, GapParameter gap) {
  return expected_rate_details(filter, density, gap).value;
}

/// Derivative-free minimization of the expected rate over the filter
/// parameters. The simplex works on (Re b, Im b, Re w, log Im w), so every
/// candidate keeps its poles off the real axis. The reported solution is in
/// the usual real embedding and its value never exceeds the start's.
inline OptimizerReport minimize_expected_rate(const EigenvalueDensity& density, GapParameter gap,
                                              const RationalFilter& start, const NelderMeadConfig& config = {}) {
  const double e0 = expected_rate(start, density, gap);
  if (!std::isfinite(e0)) throw DomainError("minimize_expected_rate: expected rate is infinite at the start");
  const RealVector v0 = to_real(start);
  const Eigen::Index m = v0.size() / 4;
  auto to_search = [m](RealVector v) {
    for (Eigen::Index i = 0; i < m; ++i) v[3 * m + i] = std::log(v[3 * m + i]);
    return v;
  };
  auto from_search = [m](RealVector u) {
    for (Eigen::Index i = 0; i < m; ++i) u[3 * m + i] = std::exp(u[3 * m + i]);
    return u;
  };
  auto objective = [&](const Eigen::VectorXd& u) {
    const RealVector v = from_search(u);
    if (!v.allFinite()) return std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i)
      if (!(v[3 * m + i] >= kMinPoleImag)) return std::numeric_limits<double>::infinity();
    return expected_rate(filter_from_real(v), density, gap);
  };
  auto rep = nelder_mead(objective, to_search(v0), config);
  rep.solution = to_real(filter_from_real(from_search(rep.solution)));
  return rep;
}

struct IterationPrediction {
  long long iterations = 0;
  bool converges = false;
  /// Set when more than 1000 iterations are predicted.
  bool excessive = false;
};

/// ceil(log(tolerance) / log(rate)); rate >= 1 signals no convergence.
inline IterationPrediction predicted_iterations(double rate, double tolerance) {
  if (!(rate > 0.0)) throw DomainError("predicted_iterations: rate must be positive");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw DomainError("predicted_iterations: tolerance must lie in (0, 1)");
  IterationPrediction p;
  if (rate >= 1.0) return p;
  const double n = std::ceil(std::log(tolerance) / std::log(rate) - 1e-9);
  p.converges = true;
  p.iterations = std::max(1LL, static_cast<long long>(n));
  p.excessive = p.iterations > 1000;
  return p;
}

}  // namespace filterforge
