#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include "filterforge/filter.hpp"
#include "filterforge/optim/types.hpp"
#include "filterforge/rates.hpp"
#include "filterforge/slise.hpp"

namespace filterforge::testing {

using hp = boost::multiprecision::cpp_dec_float_50;

/// n-point Gauss-Legendre nodes and weights in 50-digit arithmetic, found by
/// Newton iteration from Chebyshev initial guesses (ascending nodes).
inline std::pair<std::vector<hp>, std::vector<hp>> gauss_legendre_hp(int n) {
  const hp pi = boost::math::constants::pi<hp>();
  std::vector<hp> nodes(n), weights(n);
  for (int i = 0; i < n; ++i) {
    hp z = cos(pi * (i + hp(3) / 4) / (n + hp(1) / 2));
    hp dp;
    for (int it = 0; it < 200; ++it) {
      hp p0 = 1, p1 = 0;
      for (int j = 1; j <= n; ++j) {
        hp p2 = p1;
        p1 = p0;
        p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      hp step = p0 / dp;
      z -= step;
      if (abs(step) < hp("1e-45")) break;
    }
    nodes[n - 1 - i] = z;
    weights[n - 1 - i] = 2 / ((1 - z * z) * dp * dp);
  }
  return {nodes, weights};
}

/// The 2m-node Gauss-Legendre approximation of the unit-circle contour
/// integral of 1/(z - x), evaluated directly in 50-digit arithmetic:
/// (1/2pi) * sum over nodes t in (0, pi) of omega * 2 Re(e^{it} / (e^{it} - x)).
inline hp contour_quadrature_hp(int m, double x) {
  const auto [nodes, weights] = gauss_legendre_hp(2 * m);
  const hp pi = boost::math::constants::pi<hp>();
  hp sum = 0;
  for (int k = 0; k < 2 * m; ++k) {
    const hp t = pi / 2 * (nodes[k] + 1);
    const hp omega = pi / 2 * weights[k];
    const hp c = cos(t), xx = x;
    // Re(e^{it} / (e^{it} - x)) = (1 - x cos t) / (1 - 2x cos t + x^2)
    sum += omega * 2 * (1 - xx * c) / (1 - 2 * xx * c + xx * xx);
  }
  return sum / (2 * pi);
}

/// Random filter with poles in the quadrant and |Im w| >= min_imag.
inline RationalFilter random_filter(std::mt19937_64& rng, int m, double min_imag = 0.05) {
  std::uniform_real_distribution<double> re(-1.2, 0.0), im(min_imag, 1.2), b(-0.1, 0.1);
  std::vector<complex> poles, coeffs;
  for (int i = 0; i < m; ++i) {
    poles.emplace_back(re(rng), im(rng));
    coeffs.emplace_back(b(rng), b(rng));
  }
  return RationalFilter(poles, coeffs);
}

/// Random perturbation of a filter in the real embedding.
inline RationalFilter perturbed(const RationalFilter& f, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, 1.0);
  RealVector v = to_real(f);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= 1.0 + scale * n(rng);
  return filter_from_real(v);
}

/// Central finite-difference gradient.
template <typename F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    const double h = step * std::max(1.0, std::abs(x[i]));
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (a[i] - b[i]);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Re-checks every accepted optimizer step: SPD inverse Hessian (smallest
/// eigenvalue > 0, dense problems only), both Wolfe inequalities (curvature
/// skipped for steps flagged as bound-limited) and strict descent.
struct IntegrityMonitor {
  int steps = 0;
  int violations = 0;
  std::string first_violation;
  bool check_spd = true;

  IterationObserver observer() {
    return [this](const IterationEvent& e) {
      ++steps;
      auto fail = [&](const std::string& what) {
        if (violations++ == 0) {
          std::ostringstream os;
          os << "iteration " << e.iteration << ": " << what;
          first_violation = os.str();
        }
      };
      if (!(e.loss < e.previous_loss)) fail("no strict descent");
      if (!(e.phi <= e.phi0 + e.c1 * e.alpha * e.dphi0)) fail("sufficient decrease violated");
      if (!e.bound_limited && !(e.dphi >= e.c2 * e.dphi0)) fail("curvature condition violated");
      if (check_spd && e.inverse_hessian) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*e.inverse_hessian, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues().minCoeff() > 0.0)) fail("inverse Hessian not positive definite");
      }
    };
  }
};

/// Brute-force worst-case rate: min |r| over a uniform grid on [0, G] and
/// max |r| over a uniform grid on [1/G, outer_end], `points` samples each.
inline double dense_grid_rate(const RationalFilter& r, double G, double outer_end, int points) {
  double inner = std::numeric_limits<double>::infinity(), outer = 0.0;
  for (int k = 0; k < points; ++k) {
    inner = std::min(inner, std::abs(r(G * k / (points - 1.0))));
    const double y = 1.0 / G + (outer_end - 1.0 / G) * k / (points - 1.0);
    outer = std::max(outer, std::abs(r(y)));
  }
  return outer / inner;
}

/// Eigenvalue model for the Monte Carlo oracle: symmetric density given by its
/// CDF and quantile function.
struct SampledDensity {
  std::function<double(double)> cdf;
  std::function<double(double)> quantile;
  double support;
};

inline SampledDensity uniform_sampler(double a) {
  return {[a](double x) { return std::clamp((x + a) / (2 * a), 0.0, 1.0); },
          [a](double u) { return -a + 2 * a * u; }, a};
}

inline SampledDensity normal_sampler(double sigma) {
  const boost::math::normal_distribution<double> nd(0.0, sigma);
  return {[nd](double x) { return boost::math::cdf(nd, x); },
          [nd](double u) { return boost::math::quantile(nd, u); }, 12.0 * sigma};
}

/// Monte Carlo estimate of E[1/|r(X)| | X in I] * E[|r(Y)| | Y in O] with
/// I = [-G, G] and O = {1/G <= |y| <= support}. Each conditional sample is
/// drawn by inverting the CDF on a uniform variate restricted to the region.
inline double monte_carlo_expected_rate(const RationalFilter& r, const SampledDensity& d, double G, long samples,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ilo = d.cdf(-G), ihi = d.cdf(G);
  const double olo = d.cdf(1.0 / G), ohi = d.cdf(d.support);
  double inner = 0.0, outer = 0.0;
  const long half = samples / 2;
  for (long k = 0; k < half; ++k) {
    const double x = d.quantile(ilo + (ihi - ilo) * unit(rng));
    inner += 1.0 / std::abs(r(x));
    // symmetric density: draw |y| from the right tail
    const double y = d.quantile(std::min(olo + (ohi - olo) * unit(rng), 1.0 - 1e-16));
    outer += std::abs(r(y));
  }
  return (inner / half) * (outer / half);
}

}  // namespace filterforge::testing
