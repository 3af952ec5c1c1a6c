#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "filterforge/errors.hpp"

namespace filterforge {

using complex = std::complex<double>;

/// Rational filter of degree 4m on the real line:
///
///   r(x) = sum_i  b_i/(x-w_i) + conj(b_i)/(x-conj(w_i))
///               - b_i/(x+w_i) - conj(b_i)/(x+conj(w_i))
///
/// Only one representative pole per symmetry orbit is stored, normalized into
/// the quadrant Re(w) <= 0, Im(w) > 0. The other three copies are generated
/// on evaluation.
class RationalFilter {
 public:
  RationalFilter() = default;

  /// Builds a filter from representative poles and coefficients. Poles outside
  /// the canonical quadrant are mapped into it by the orbit symmetries
  /// (w -> conj(w), b -> conj(b) and w -> -conj(w), b -> -conj(b)), which
  /// leave r unchanged. Throws DomainError for real poles or size mismatch.
  RationalFilter(std::vector<complex> poles, std::vector<complex> coeffs)
      : poles_(std::move(poles)), coeffs_(std::move(coeffs)) {
    if (poles_.size() != coeffs_.size())
      throw DomainError("rational filter: pole/coefficient count mismatch");
    if (poles_.empty()) throw DomainError("rational filter: need at least one pole");
    for (std::size_t i = 0; i < poles_.size(); ++i) {
      if (!std::isfinite(poles_[i].real()) || !std::isfinite(poles_[i].imag()) ||
          !std::isfinite(coeffs_[i].real()) || !std::isfinite(coeffs_[i].imag()))
        throw DomainError("rational filter: non-finite pole or coefficient");
      if (poles_[i].imag() == 0.0)
        throw DomainError("rational filter: pole " + std::to_string(i) + " is real");
      normalize(poles_[i], coeffs_[i]);
    }
  }

  std::size_t m() const noexcept { return poles_.size(); }
  std::size_t degree() const noexcept { return 4 * poles_.size(); }
  std::span<const complex> poles() const noexcept { return poles_; }
  std::span<const complex> coeffs() const noexcept { return coeffs_; }

  /// The four-term sum before discarding the imaginary part.
  complex evaluate_raw(double x) const {
    check_finite(x);
    complex sum{0.0, 0.0};
    for (std::size_t i = 0; i < poles_.size(); ++i) {
      const complex w = poles_[i], b = coeffs_[i];
      sum += b / (x - w) + std::conj(b) / (x - std::conj(w)) - b / (x + w) -
             std::conj(b) / (x + std::conj(w));
    }
    return sum;
  }

  double evaluate(double x) const { return evaluate_raw(x).real(); }
  double operator()(double x) const { return evaluate(x); }

  double evaluate_derivative(double x) const {
    check_finite(x);
    complex sum{0.0, 0.0};
    for (std::size_t i = 0; i < poles_.size(); ++i) {
      const complex w = poles_[i], b = coeffs_[i];
      const complex a = x - w, ac = x - std::conj(w), c = x + w, cc = x + std::conj(w);
      sum += -b / (a * a) - std::conj(b) / (ac * ac) + b / (c * c) + std::conj(b) / (cc * cc);
    }
    return sum.real();
  }

  /// Returns a copy with every coefficient multiplied by a real factor.
  RationalFilter scaled(double factor) const {
    std::vector<complex> c(coeffs_);
    for (auto& b : c) b *= factor;
    return RationalFilter(poles_, std::move(c));
  }

  /// Bound K with |r(x)| <= K / (x^2 - max|w|^2) for |x| > max|w|, from
  /// b/(x-w) - b/(x+w) = 2bw/(x^2-w^2) and its conjugate.
  double tail_constant() const noexcept {
    double k = 0.0;
    for (std::size_t i = 0; i < poles_.size(); ++i) k += 4.0 * std::abs(coeffs_[i]) * std::abs(poles_[i]);
    return k;
  }

  double max_pole_modulus() const noexcept {
    double r = 0.0;
    for (const auto& w : poles_) r = std::max(r, std::abs(w));
    return r;
  }

  friend bool operator==(const RationalFilter&, const RationalFilter&) = default;

 private:
  static void check_finite(double x) {
    if (!std::isfinite(x)) throw DomainError("rational filter: evaluation point is not finite");
  }

  static void normalize(complex& w, complex& b) {
    if (w.imag() < 0.0) {
      w = std::conj(w);
      b = std::conj(b);
    }
    if (w.real() > 0.0) {
      w = -std::conj(w);
      b = -std::conj(b);
    }
  }

  std::vector<complex> poles_;
  std::vector<complex> coeffs_;
};

/// Worst-case conditioning of the shifted solves, max_i 1/|Im w_i|.
inline double worst_case_condition_number(const RationalFilter& filter) {
  double c = 0.0;
  for (const auto& w : filter.poles()) c = std::max(c, 1.0 / std::abs(w.imag()));
  return c;
}

/// Real search interval (a, b) with a < b.
class SearchInterval {
 public:
  SearchInterval(double a, double b) : a_(a), b_(b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
      throw DomainError("search interval: need finite a < b");
  }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double midpoint() const noexcept { return 0.5 * (a_ + b_); }
  double radius() const noexcept { return 0.5 * (b_ - a_); }

 private:
  double a_, b_;
};

/// Affine map A' = (A - shift I) / scale taking (a, b) onto (-1, 1).
struct Canonicalization {
  double shift;
  double scale;

  double apply(double lambda) const noexcept { return (lambda - shift) / scale; }
  double undo(double mu) const noexcept { return shift + scale * mu; }
};

inline Canonicalization canonicalize(const SearchInterval& interval) {
  return {interval.midpoint(), interval.radius()};
}

}  // namespace filterforge
