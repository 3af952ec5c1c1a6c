#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"
#include "filterforge/quadrature.hpp"
#include "filterforge/weight.hpp"

namespace filterforge {

/// Weighted least-squares distance between a degree-4m filter and the
/// indicator of (-1, 1):
///
///   f(b, w) = 1/2 * integral G(x) (1_(-1,1)(x) - r(x))^2 dx
///
/// over the whole real line, i.e. the integral over the half-line x >= 0.
struct SliseObjective {
  StepWeightFunction weight;
  int m = 4;

  SliseObjective(StepWeightFunction g, int poles_per_quadrant) : weight(std::move(g)), m(poles_per_quadrant) {
    if (m < 1) throw DomainError("slise objective: need m >= 1");
  }
};

/// Real embedding (Re b_1..m, Im b_1..m, Re w_1..m, Im w_1..m).
using RealVector = Eigen::VectorXd;

struct ComplexParams {
  std::vector<complex> beta;
  std::vector<complex> poles;
};

inline RealVector to_real(std::span<const complex> beta, std::span<const complex> poles) {
  if (beta.size() != poles.size()) throw DomainError("to_real: size mismatch");
  const auto m = static_cast<Eigen::Index>(beta.size());
  RealVector v(4 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    v[i] = beta[i].real();
    v[m + i] = beta[i].imag();
    v[2 * m + i] = poles[i].real();
    v[3 * m + i] = poles[i].imag();
  }
  return v;
}

inline RealVector to_real(const RationalFilter& filter) { return to_real(filter.coeffs(), filter.poles()); }

inline ComplexParams from_real(const RealVector& v) {
  if (v.size() == 0 || v.size() % 4 != 0) throw DomainError("from_real: length must be a positive multiple of 4");
  const Eigen::Index m = v.size() / 4;
  ComplexParams p;
  for (Eigen::Index i = 0; i < m; ++i) {
    p.beta.emplace_back(v[i], v[m + i]);
    p.poles.emplace_back(v[2 * m + i], v[3 * m + i]);
  }
  return p;
}

inline RationalFilter filter_from_real(const RealVector& v) {
  auto p = from_real(v);
  return RationalFilter(std::move(p.poles), std::move(p.beta));
}

/// Gradient of the real embedding from a complex gradient: 2 conj(grad), split
/// into the real and imaginary slots.
inline RealVector real_gradient(std::span<const complex> grad_beta, std::span<const complex> grad_poles) {
  std::vector<complex> gb, gw;
  for (auto g : grad_beta) gb.push_back(2.0 * std::conj(g));
  for (auto g : grad_poles) gw.push_back(2.0 * std::conj(g));
  return to_real(gb, gw);
}

struct SliseGradient {
  std::vector<complex> beta;
  std::vector<complex> poles;
};

inline constexpr double kMinPoleImag = 1e-10;

namespace detail {

struct Segment {
  double lo, hi, weight;
  bool inside;  // segment lies within [-1, 1]
};

// Full-line segments of a step weight with +-1 inserted as break points.
inline std::vector<Segment> weight_segments(const StepWeightFunction& g) {
  std::vector<Segment> half;
  double lo = 0.0;
  for (std::size_t j = 0; j < g.breakpoints().size(); ++j) {
    const double hi = g.breakpoints()[j];
    const double v = g.values()[j];
    if (lo < 1.0 && 1.0 < hi) {
      half.push_back({lo, 1.0, v, true});
      half.push_back({1.0, hi, v, false});
    } else {
      half.push_back({lo, hi, v, hi <= 1.0});
    }
    lo = hi;
  }
  std::vector<Segment> full;
  for (auto it = half.rbegin(); it != half.rend(); ++it)
    if (it->weight != 0.0) full.push_back({-it->hi, -it->lo, it->weight, it->inside});
  for (const auto& s : half)
    if (s.weight != 0.0) full.push_back(s);
  return full;
}

// Moments of the weight against the 4m symmetric poles
//   p = (w, conj w, -w, -conj w),  c = (b, conj b, -b, -conj b).
struct PoleMoments {
  std::vector<complex> p, c;
  std::vector<complex> l1, l2, l3;  // integral G / (x-p)^k, k = 1, 2, 3
  std::vector<complex> t1, t2;      // same restricted to (-1, 1)
  double c0 = 0.0;                  // integral of G over (-1, 1)
};

inline PoleMoments pole_moments(const SliseObjective& obj, std::span<const complex> beta,
                                std::span<const complex> poles, bool second_order) {
  const std::size_t m = poles.size();
  if (beta.size() != m || static_cast<int>(m) != obj.m)
    throw DomainError("slise: expected " + std::to_string(obj.m) + " coefficients and poles");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(std::abs(poles[i].imag()) >= kMinPoleImag))
      throw DomainError("slise: pole " + std::to_string(i) + " is (nearly) real");
    if (!std::isfinite(poles[i].real()) || !std::isfinite(beta[i].real()) || !std::isfinite(beta[i].imag()))
      throw DomainError("slise: non-finite parameter");
  }
  PoleMoments mo;
  const std::size_t n = 4 * m;
  mo.p.resize(n);
  mo.c.resize(n);
  for (std::size_t i = 0; i < m; ++i) {
    mo.p[i] = poles[i];
    mo.p[m + i] = std::conj(poles[i]);
    mo.p[2 * m + i] = -poles[i];
    mo.p[3 * m + i] = -std::conj(poles[i]);
    mo.c[i] = beta[i];
    mo.c[m + i] = std::conj(beta[i]);
    mo.c[2 * m + i] = -beta[i];
    mo.c[3 * m + i] = -std::conj(beta[i]);
  }
  mo.l1.assign(n, 0.0);
  mo.l2.assign(n, 0.0);
  mo.l3.assign(n, 0.0);
  mo.t1.assign(n, 0.0);
  mo.t2.assign(n, 0.0);
  for (const auto& s : weight_segments(obj.weight)) {
    if (s.inside) mo.c0 += s.weight * (s.hi - s.lo);
    for (std::size_t j = 0; j < n; ++j) {
      const complex ua = s.lo - mo.p[j], ub = s.hi - mo.p[j];
      // ua and ub share the sign of their imaginary part, so the log of the
      // ratio stays on the principal branch.
      const complex k1 = s.weight * std::log(ub / ua);
      const complex k2 = s.weight * (1.0 / ua - 1.0 / ub);
      mo.l1[j] += k1;
      mo.l2[j] += k2;
      if (s.inside) {
        mo.t1[j] += k1;
        mo.t2[j] += k2;
      }
      if (second_order) mo.l3[j] += s.weight * 0.5 * (1.0 / (ua * ua) - 1.0 / (ub * ub));
    }
  }
  return mo;
}

inline constexpr double kConfluentGap = 1e-12;

// integral G / ((x - p_j)(x - p_k))
inline complex pair_moment(const PoleMoments& mo, std::size_t j, std::size_t k) {
  const complex d = mo.p[j] - mo.p[k];
  if (std::abs(d) < kConfluentGap) return mo.l2[k];
  return (mo.l1[j] - mo.l1[k]) / d;
}

// integral G / ((x - p_j)(x - p_k)^2)
inline complex pair_moment_sq(const PoleMoments& mo, std::size_t j, std::size_t k) {
  const complex d = mo.p[j] - mo.p[k];
  if (std::abs(d) < kConfluentGap) return mo.l3[k];
  return (mo.l1[j] - mo.l1[k]) / (d * d) - mo.l2[k] / d;
}

inline double loss_from_moments(const PoleMoments& mo) {
  const std::size_t n = mo.p.size();
  complex quad{0.0, 0.0}, lin{0.0, 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    lin += mo.c[j] * mo.t1[j];
    complex row{0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) row += mo.c[k] * pair_moment(mo, j, k);
    quad += mo.c[j] * row;
  }
  const double value = 0.5 * (mo.c0 - 2.0 * lin + quad).real();
  return value < 0.0 ? 0.0 : value;
}

}  // namespace detail

/// Closed-form loss for step weights: every term reduces to the moments
/// integral G/(x-p)^k of the 4m symmetric poles, combined by partial fractions.
/// Rejects poles with |Im w| < 1e-10.
inline double loss(const SliseObjective& obj, std::span<const complex> beta, std::span<const complex> poles) {
  return detail::loss_from_moments(detail::pole_moments(obj, beta, poles, false));
}

inline double loss(const SliseObjective& obj, const RationalFilter& filter) {
  return loss(obj, filter.coeffs(), filter.poles());
}

/// Loss and complex gradient (in the convention real gradient = 2 conj(grad)).
inline std::pair<double, SliseGradient> loss_and_gradient(const SliseObjective& obj, std::span<const complex> beta,
                                                          std::span<const complex> poles) {
  const auto mo = detail::pole_moments(obj, beta, poles, true);
  const std::size_t m = poles.size(), n = 4 * m;
  // residual moments  a_k = integral G (1_I - r) / (x - p_k),
  //                   q_k = integral G (1_I - r) / (x - p_k)^2
  std::vector<complex> a(n), q(n);
  for (std::size_t k = 0; k < n; ++k) {
    complex sa = mo.t1[k], sq = mo.t2[k];
    for (std::size_t j = 0; j < n; ++j) {
      sa -= mo.c[j] * detail::pair_moment(mo, j, k);
      sq -= mo.c[j] * detail::pair_moment_sq(mo, j, k);
    }
    a[k] = sa;
    q[k] = sq;
  }
  // With f = 1/2 integral G e^2 and e = 1_I - r, df/dRe(b) = -2 Re(a_i - a_{2m+i})
  // and df/dRe(w) = -2 Re(b (q_i + q_{2m+i})); the complex gradient is the
  // negated residual moment.
  SliseGradient g;
  for (std::size_t i = 0; i < m; ++i) {
    g.beta.push_back(-(a[i] - a[2 * m + i]));
    g.poles.push_back(-beta[i] * (q[i] + q[2 * m + i]));
  }
  return {detail::loss_from_moments(mo), std::move(g)};
}

inline SliseGradient gradient(const SliseObjective& obj, std::span<const complex> beta,
                              std::span<const complex> poles) {
  return loss_and_gradient(obj, beta, poles).second;
}

/// Loss and gradient on the real embedding, the form consumed by the optimizers.
inline std::pair<double, RealVector> loss_and_real_gradient(const SliseObjective& obj, const RealVector& v) {
  const auto p = from_real(v);
  auto [f, g] = loss_and_gradient(obj, p.beta, p.poles);
  return {f, real_gradient(g.beta, g.poles)};
}

/// Objective on the real embedding in the form the optimizers expect:
/// returns the loss, writes the gradient, and reports +inf for parameter
/// points whose poles come within 1e-10 of the real axis.
inline auto real_objective(const SliseObjective& obj) {
  return [&obj](const RealVector& v, RealVector& g) {
    const Eigen::Index m = v.size() / 4;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!(std::abs(v[3 * m + i]) >= kMinPoleImag)) return std::numeric_limits<double>::infinity();
    if (!v.allFinite()) return std::numeric_limits<double>::infinity();
    auto [f, grad] = loss_and_real_gradient(obj, v);
    g = std::move(grad);
    return f;
  };
}

/// Same loss by adaptive Gauss-Kronrod quadrature of the defining integral, for
/// weights that are not handled in closed form and as an independent check.
inline IntegrationResult<double> loss_quadrature(const SliseObjective& obj, const RationalFilter& filter,
                                                 double abs_tol = 1e-12) {
  if (static_cast<int>(filter.m()) != obj.m) throw DomainError("slise: filter has the wrong number of poles");
  std::vector<double> breaks{0.0};
  bool one_added = false;
  for (double b : obj.weight.breakpoints()) {
    if (!one_added && b >= 1.0) {
      if (b > 1.0) breaks.push_back(1.0);
      one_added = true;
    }
    breaks.push_back(b);
  }
  if (!one_added) breaks.push_back(1.0);
  auto integrand = [&](double x) {
    const double e = (x < 1.0 ? 1.0 : 0.0) - filter(x);
    return obj.weight(x) * e * e;
  };
  // 1/2 of the full-line integral of an even integrand is the half-line integral.
  return integrate(integrand, std::span<const double>(breaks), abs_tol);
}

/// Partial derivatives of r(x) with respect to the real embedding.
inline RealVector filter_point_gradient(std::span<const complex> beta, std::span<const complex> poles, double x) {
  const auto m = static_cast<Eigen::Index>(poles.size());
  RealVector d(4 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const complex w = poles[i];
    const complex h = 1.0 / (x - w) - 1.0 / (x + w);
    const complex u = beta[i] * (1.0 / ((x - w) * (x - w)) + 1.0 / ((x + w) * (x + w)));
    d[i] = 2.0 * h.real();
    d[m + i] = -2.0 * h.imag();
    d[2 * m + i] = 2.0 * u.real();
    d[3 * m + i] = -2.0 * u.imag();
  }
  return d;
}

}  // namespace filterforge
