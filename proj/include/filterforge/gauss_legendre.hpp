#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"

namespace filterforge {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending. Roots of P_n are
/// found by Newton iteration on the three-term recurrence.
inline QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw DomainError("gauss-legendre rule: need n >= 1");
  QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double step = p0 / dp;
      z -= step;
      if (std::abs(step) <= 1e-15) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Degree-4m filter from the 2m-point Gauss-Legendre discretization of the
/// unit-circle contour integral of the indicator over (0, pi):
///
///   1_(-1,1)(x) ~ 1/(2 pi) Re sum_k omega_k (g_x(t_k) + conj g_x(t_k)),
///   g_x(t) = e^{it} / (e^{it} - x).
///
/// Nodes t and pi - t pair up; the node in (pi/2, pi) becomes the stored pole
/// w = e^{it} with coefficient b = -omega w / (2 pi). Poles are returned in
/// ascending imaginary part.
inline RationalFilter gauss_legendre_filter(int m) {
  if (m < 1) throw DomainError("gauss-legendre filter: need m >= 1");
  const auto rule = gauss_legendre_rule(2 * m);
  const double half_pi = 0.5 * std::numbers::pi;
  std::vector<complex> poles, coeffs;
  for (int k = 0; k < 2 * m; ++k) {
    if (rule.nodes[k] <= 0.0) continue;
    const double t = half_pi * (rule.nodes[k] + 1.0);
    const double omega = half_pi * rule.weights[k];
    const complex w = std::polar(1.0, t);
    poles.push_back(w);
    coeffs.push_back(-omega * w / (2.0 * std::numbers::pi));
  }
  // t ascends through (pi/2, pi) so Im(w) descends; reverse to ascending Im
  std::reverse(poles.begin(), poles.end());
  std::reverse(coeffs.begin(), coeffs.end());
  return RationalFilter(std::move(poles), std::move(coeffs));
}

}  // namespace filterforge
