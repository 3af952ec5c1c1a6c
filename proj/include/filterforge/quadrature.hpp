#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <span>
#include <type_traits>
#include <vector>

#include "filterforge/errors.hpp"

namespace filterforge {

template <typename T>
struct IntegrationResult {
  T value{};
  double error = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename T>
double magnitude(const T& v) {
  return std::abs(v);
}

template <typename T>
struct Panel {
  double a, b;
  T value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename T, typename F>
Panel<T> gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b), half = 0.5 * (b - a);
  const T fc = f(center);
  T kronrod = fc * kKronrodWeights[7];
  T gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const T pair = f(center - dx) + f(center + dx);
    kronrod += pair * kKronrodWeights[j];
    if (j % 2 == 1) gauss += pair * kGaussWeights[j / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, magnitude(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over the panels
/// delimited by `breaks` (ascending). The panel with the largest error
/// estimate is bisected until the summed estimate is below
/// max(abs_tol, rel_tol * |integral|) or `max_panels` is reached.
template <typename F, typename T = std::invoke_result_t<F&, double>>
IntegrationResult<T> integrate(F&& f, std::span<const double> breaks, double abs_tol, double rel_tol = 0.0,
                               int max_panels = 20000) {
  if (breaks.size() < 2) throw DomainError("integrate: need at least two break points");
  std::priority_queue<detail::Panel<T>> queue;
  IntegrationResult<T> result;
  T total{};
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i] < breaks[i + 1])) {
      if (breaks[i] == breaks[i + 1]) continue;
      throw DomainError("integrate: break points must ascend");
    }
    auto p = detail::gauss_kronrod_15<T>(f, breaks[i], breaks[i + 1]);
    result.evaluations += 15;
    total += p.value;
    err += p.error;
    queue.push(p);
  }
  int panels = static_cast<int>(queue.size());
  while (!queue.empty() && err > std::max(abs_tol, rel_tol * detail::magnitude(total))) {
    if (panels >= max_panels) {
      result.converged = false;
      break;
    }
    auto worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      // panel cannot be split further in floating point
      result.converged = false;
      break;
    }
    auto left = detail::gauss_kronrod_15<T>(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15<T>(f, mid, worst.b);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++panels;
  }
  // re-sum to shed the drift of the incremental updates
  T resum{};
  double reerr = 0.0;
  while (!queue.empty()) {
    resum += queue.top().value;
    reerr += queue.top().error;
    queue.pop();
  }
  result.value = resum;
  result.error = reerr;
  return result;
}

template <typename F, typename T = std::invoke_result_t<F&, double>>
IntegrationResult<T> integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                               int max_panels = 20000) {
  const std::array<double, 2> breaks{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(breaks), abs_tol, rel_tol, max_panels);
}

}  // namespace filterforge
