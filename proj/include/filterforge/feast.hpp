#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"
#include "filterforge/filter_io.hpp"
#include "filterforge/parallel.hpp"
#include "filterforge/rates.hpp"

namespace filterforge {

using ComplexMatrix = Eigen::MatrixXcd;

/// Dense Hermitian test problem A = U diag(spectrum) U^H with a seeded random
/// unitary U (seed 0 gives U = I).
struct SyntheticHiep {
  std::vector<double> spectrum;
  std::uint64_t seed = 0;
  ComplexMatrix unitary;
  ComplexMatrix matrix;
  SearchInterval interval{-1.0, 1.0};

  Eigen::Index n() const { return matrix.rows(); }

  /// Eigenvalues mapped by the interval canonicalization.
  std::vector<double> canonical_spectrum() const {
    const auto c = canonicalize(interval);
    std::vector<double> out;
    for (double l : spectrum) out.push_back(c.apply(l));
    return out;
  }

  std::vector<Eigen::Index> interior_indices() const {
    std::vector<Eigen::Index> idx;
    const auto cs = canonical_spectrum();
    for (std::size_t i = 0; i < cs.size(); ++i)
      if (cs[i] > -1.0 && cs[i] < 1.0) idx.push_back(static_cast<Eigen::Index>(i));
    return idx;
  }
};

namespace detail {

// Separate streams for matrix generation and start blocks, so equal seeds do
// not produce correlated start vectors.
enum class Stream : std::uint64_t { Unitary = 1, StartBlock = 2 };

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline ComplexMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng), im = normal(rng);
      m(i, j) = complex(re, im) / std::sqrt(2.0);
    }
  return m;
}

}  // namespace detail

inline SyntheticHiep generate_problem(std::vector<double> spectrum, std::uint64_t seed,
                                      SearchInterval interval = SearchInterval(-1.0, 1.0)) {
  if (spectrum.empty()) throw DomainError("generate_problem: empty spectrum");
  for (double l : spectrum)
    if (!std::isfinite(l)) throw DomainError("generate_problem: non-finite eigenvalue");
  const auto n = static_cast<Eigen::Index>(spectrum.size());
  SyntheticHiep p;
  p.spectrum = std::move(spectrum);
  p.seed = seed;
  p.interval = interval;
  if (seed == 0) {
    p.unitary = ComplexMatrix::Identity(n, n);
  } else {
    auto rng = detail::make_rng(seed, detail::Stream::Unitary);
    Eigen::HouseholderQR<ComplexMatrix> qr(detail::gaussian_matrix(n, n, rng));
    p.unitary = qr.householderQ() * ComplexMatrix::Identity(n, n);
  }
  Eigen::VectorXcd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = p.spectrum[static_cast<std::size_t>(i)];
  p.matrix = p.unitary * d.asDiagonal() * p.unitary.adjoint();
  p.matrix = (0.5 * (p.matrix + p.matrix.adjoint())).eval();
  return p;
}

/// X = r(A') V for the canonicalized A' = (A - shift I) / scale, accumulated
/// from the 4m shifted solves
///   r(A') V = sum_j c_j scale (A - (shift + scale p_j) I)^-1 V
/// over the symmetric poles p_j with coefficients c_j. Each system is solved
/// by dense LU with partial pivoting; the solves run concurrently.
inline ComplexMatrix apply_filter(const RationalFilter& filter, const ComplexMatrix& A, const ComplexMatrix& V,
                                  SearchInterval interval = SearchInterval(-1.0, 1.0)) {
  if (A.rows() != A.cols() || A.rows() != V.rows()) throw DomainError("apply_filter: shape mismatch");
  const auto c = canonicalize(interval);
  std::vector<complex> poles, coeffs;
  for (std::size_t i = 0; i < filter.m(); ++i) {
    const complex w = filter.poles()[i], b = filter.coeffs()[i];
    poles.insert(poles.end(), {w, std::conj(w), -w, -std::conj(w)});
    coeffs.insert(coeffs.end(), {b, std::conj(b), -b, -std::conj(b)});
  }
  const Eigen::Index n = A.rows();
  std::vector<ComplexMatrix> parts(poles.size());
  parallel_for(poles.size(), [&](std::size_t j) {
    const complex z = c.shift + c.scale * poles[j];
    ComplexMatrix shifted = A;
    shifted.diagonal().array() -= z;
    Eigen::PartialPivLU<ComplexMatrix> lu(shifted);
    parts[j] = (coeffs[j] * c.scale) * lu.solve(V);
    if (!parts[j].allFinite()) throw NumericError("apply_filter: shifted solve broke down");
  });
  ComplexMatrix X = ComplexMatrix::Zero(n, V.cols());
  for (const auto& p : parts) X += p;
  return X;
}

inline ComplexMatrix apply_filter(const RationalFilter& filter, const SyntheticHiep& problem, const ComplexMatrix& V) {
  return apply_filter(filter, problem.matrix, V, problem.interval);
}

struct HermitianEigen {
  Eigen::VectorXd values;   // ascending
  ComplexMatrix vectors;    // columns
  int sweeps = 0;
};

/// Cyclic Jacobi diagonalization of a Hermitian matrix. Each rotation first
/// makes the pivot real with a diagonal phase, then applies the classical
/// real rotation.
inline HermitianEigen jacobi_eigen(ComplexMatrix A, int max_sweeps = 100) {
  if (A.rows() != A.cols()) throw DomainError("jacobi_eigen: matrix is not square");
  const Eigen::Index n = A.rows();
  ComplexMatrix V = ComplexMatrix::Identity(n, n);
  const double scale = std::max(A.norm(), std::numeric_limits<double>::min());
  HermitianEigen out;
  for (; out.sweeps < max_sweeps; ++out.sweeps) {
    double off = 0.0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) off += std::norm(A(p, q));
    if (std::sqrt(2.0 * off) <= 1e-16 * scale) break;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const complex b = A(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0 || mag < 1e-300) continue;
        const complex phase = b / mag;
        const double app = A(p, p).real(), aqq = A(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const complex jpp = cs, jpq = sn, jqp = -sn * std::conj(phase), jqq = cs * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const complex akp = A(k, p), akq = A(k, q);
          A(k, p) = akp * jpp + akq * jqp;
          A(k, q) = akp * jpq + akq * jqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const complex apk = A(p, k), aqk = A(q, k);
          A(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
          A(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const complex vkp = V(k, p), vkq = V(k, q);
          V(k, p) = vkp * jpp + vkq * jqp;
          V(k, q) = vkp * jpq + vkq * jqq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return A(a, a).real() < A(b, b).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = A(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]).real();
    out.vectors.col(k) = V.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

/// Sum of |lambda| over the approximations inside (-1, 1).
inline double eigentrace(std::span<const double> lambdas) {
  double s = 0.0;
  for (double l : lambdas)
    if (l > -1.0 && l < 1.0) s += std::abs(l);
  return s;
}

struct IterationHistory {
  std::vector<double> eigentraces;
  std::vector<double> relative_changes;  // first entry is +inf (nothing to compare)
  std::vector<double> subspace_residuals;  // ||(I - Q Q^H) U_interior||_2 per iteration
  std::vector<int> interior_counts;  // Ritz values inside (-1, 1)
  std::vector<int> accepted_counts;  // of those, the ones passing the residual screen
  std::vector<double> orthogonality;  // max |Q^H Q - I| per iteration
  int rank_restarts = 0;
};

struct SubspaceOptions {
  double tolerance = 1e-13;
  /// Ritz pairs in (-1, 1) enter the eigentrace only when the residual of the
  /// canonicalized problem, ||A' v - theta v||, is at most this value. Extra
  /// basis vectors (N above the interior count) mix exterior eigenvectors
  /// and produce Ritz values that wander through (-1, 1); their residual is at
  /// least the distance to the exterior spectrum. Infinity disables the screen.
  double ritz_residual_screen = 1e-3;
  /// Stop once the subspace error reaches this value (0 disables).
  double min_subspace_error = 0.0;
  int max_iterations = 50;
  std::uint64_t seed = 1;
};

struct SubspaceResult {
  Eigen::VectorXd eigenvalues;  // original scale, inside the search interval
  ComplexMatrix eigenvectors;
  std::vector<double> residuals;  // ||A v - lambda v||
  IterationHistory history;
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

namespace detail {

inline double subspace_error(const ComplexMatrix& Q, const ComplexMatrix& U) {
  if (U.cols() == 0) return 0.0;
  const ComplexMatrix r = U - Q * (Q.adjoint() * U);
  Eigen::JacobiSVD<ComplexMatrix> svd(r);
  return svd.singularValues()(0);
}

// Orthonormal basis of span(X) by Householder QR; columns whose diagonal
// entry of R collapses are replaced by fresh random vectors.
inline ComplexMatrix orthonormalize(ComplexMatrix X, std::mt19937_64& rng, int& restarts) {
  const Eigen::Index n = X.rows(), k = X.cols();
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::HouseholderQR<ComplexMatrix> qr(X);
    const ComplexMatrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    double rmax = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) rmax = std::max(rmax, std::abs(R(i, i)));
    bool collapsed = false;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!(std::abs(R(i, i)) > 1e-14 * rmax)) {
        X.col(i) = gaussian_matrix(n, 1, rng) * rmax;
        collapsed = true;
      }
    }
    if (!collapsed) return qr.householderQ() * ComplexMatrix::Identity(n, k);
    ++restarts;
  }
  throw NumericError("orthonormalize: basis keeps collapsing");
}

}  // namespace detail

/// Subspace iteration with a rational filter: from a seeded Gaussian start V,
/// repeat X = r(A)V, Q = orth(X), solve the reduced problem Q^H A Q = Y diag Y^H,
/// V = Q Y, until the relative change of the eigentrace is <= tolerance while
/// the number of screened Ritz values in (-1, 1) is nonzero and unchanged.
/// Eigenpairs whose canonicalized eigenvalue lies in (-1, 1) and that pass
/// the residual screen are returned.
inline SubspaceResult subspace_iteration(const SyntheticHiep& problem, Eigen::Index N, const RationalFilter& filter,
                                         const SubspaceOptions& options = {}) {
  const Eigen::Index n = problem.n();
  if (N < 1 || N > n) throw DomainError("subspace_iteration: need 1 <= N <= n");
  const auto canon = canonicalize(problem.interval);
  auto rng = detail::make_rng(options.seed, detail::Stream::StartBlock);
  ComplexMatrix V = detail::gaussian_matrix(n, N, rng);

  const auto interior = problem.interior_indices();
  ComplexMatrix U(n, static_cast<Eigen::Index>(interior.size()));
  for (std::size_t k = 0; k < interior.size(); ++k) U.col(static_cast<Eigen::Index>(k)) = problem.unitary.col(interior[k]);

  SubspaceResult res;
  HermitianEigen red;
  ComplexMatrix Q;
  double previous = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const ComplexMatrix X = apply_filter(filter, problem, V);
    Q = detail::orthonormalize(X, rng, res.history.rank_restarts);
    const ComplexMatrix gram = Q.adjoint() * Q - ComplexMatrix::Identity(N, N);
    res.history.orthogonality.push_back(gram.cwiseAbs().maxCoeff());
    ComplexMatrix B = Q.adjoint() * problem.matrix * Q;
    B = (0.5 * (B + B.adjoint())).eval();
    red = jacobi_eigen(B);
    V = Q * red.vectors;
    std::vector<double> lambdas;
    int count = 0;
    const ComplexMatrix AV = problem.matrix * V;
    for (Eigen::Index k = 0; k < N; ++k) {
      const double l = canon.apply(red.values[k]);
      if (!(l > -1.0 && l < 1.0)) continue;
      ++count;
      const double resid = (AV.col(k) - red.values[k] * V.col(k)).norm() / canon.scale;
      if (resid <= options.ritz_residual_screen) lambdas.push_back(l);
    }
    const double trace = eigentrace(lambdas);
    const double change = it == 1 ? std::numeric_limits<double>::infinity()
                                  : std::abs(trace - previous) / (trace != 0.0 ? std::abs(trace) : 1.0);
    res.history.eigentraces.push_back(trace);
    res.history.relative_changes.push_back(change);
    res.history.subspace_residuals.push_back(detail::subspace_error(Q, U));
    res.history.interior_counts.push_back(count);
    res.history.accepted_counts.push_back(static_cast<int>(lambdas.size()));
    const bool settled = it > 1 && !lambdas.empty() &&
                         res.history.accepted_counts[static_cast<std::size_t>(it - 2)] ==
                             static_cast<int>(lambdas.size());
    previous = trace;
    res.iterations = it;
    if (settled && change <= options.tolerance) {
      res.converged = true;
      break;
    }
    if (res.history.subspace_residuals.back() <= options.min_subspace_error) break;
  }
  if (!res.converged)
    res.diagnostic = "eigentrace did not settle within " + std::to_string(options.max_iterations) + " iterations";

  std::vector<Eigen::Index> keep;
  const ComplexMatrix AV = problem.matrix * V;
  for (Eigen::Index k = 0; k < N; ++k) {
    const double l = canon.apply(red.values[k]);
    const double resid = (AV.col(k) - red.values[k] * V.col(k)).norm() / canon.scale;
    if (l > -1.0 && l < 1.0 && resid <= options.ritz_residual_screen) keep.push_back(k);
  }
  res.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
  res.eigenvectors.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto j = static_cast<Eigen::Index>(k);
    res.eigenvalues[j] = red.values[keep[k]];
    res.eigenvectors.col(j) = V.col(keep[k]);
    res.residuals.push_back((problem.matrix * V.col(keep[k]) - red.values[keep[k]] * V.col(keep[k])).norm());
  }
  return res;
}

struct RateComparison {
  double measured = std::numeric_limits<double>::quiet_NaN();
  double predicted = 0.0;
  /// The interior eigenvalues are not the ones with the largest |r|.
  bool ordering_violated = false;
  int iterations = 0;
  bool converged = false;
  int factors_used = 0;
};

/// Noise floor below which subspace errors no longer carry rate information.
inline constexpr double kSubspaceNoiseFloor = 1e-12;

/// Predicted rate |r(l_{N+1})| / min over the interior |r(l_i)| with the
/// eigenvalues sorted by |r| in descending order, and the measured rate as the
/// geometric mean of the per-iteration subspace-error reduction factors,
/// excluding the first and last iterations and errors at the noise floor.
/// The iteration count and convergence flag come from a standard run.
inline RateComparison measured_vs_predicted_rate(const SyntheticHiep& problem, Eigen::Index N,
                                                 const RationalFilter& filter, const SubspaceOptions& options = {}) {
  RateComparison out;
  const auto cs = problem.canonical_spectrum();
  const auto interior = problem.interior_indices();
  const auto k = static_cast<Eigen::Index>(interior.size());
  if (N < k) throw DomainError("measured_vs_predicted_rate: N is below the interior eigenvalue count");
  if (N >= static_cast<Eigen::Index>(cs.size())) throw DomainError("measured_vs_predicted_rate: need N < n");

  std::vector<double> mags;
  for (double l : cs) mags.push_back(std::abs(filter(l)));
  std::vector<std::size_t> order(mags.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mags[a] > mags[b]; });
  for (Eigen::Index i = 0; i < k; ++i) {
    const double l = cs[order[static_cast<std::size_t>(i)]];
    if (!(l > -1.0 && l < 1.0)) out.ordering_violated = true;
  }
  double interior_min = std::numeric_limits<double>::infinity();
  for (auto i : interior) interior_min = std::min(interior_min, mags[static_cast<std::size_t>(i)]);
  out.predicted = mags[order[static_cast<std::size_t>(N)]] / interior_min;

  const auto run = subspace_iteration(problem, N, filter, options);
  out.iterations = run.iterations;
  out.converged = run.converged;
  // the convergence test stops before the subspace error reaches rounding
  // level, so the rate is measured on a second run that continues until then
  auto measure = options;
  measure.tolerance = -1.0;
  measure.min_subspace_error = kSubspaceNoiseFloor;
  const auto probe = subspace_iteration(problem, N, filter, measure);
  const auto& e = probe.history.subspace_residuals;
  double log_sum = 0.0;
  for (std::size_t i = 2; i + 1 < e.size(); ++i) {
    if (!(e[i] > kSubspaceNoiseFloor && e[i - 1] > kSubspaceNoiseFloor)) continue;
    log_sum += std::log(e[i] / e[i - 1]);
    ++out.factors_used;
  }
  if (out.factors_used > 0) out.measured = std::exp(log_sum / out.factors_used);
  return out;
}

/// Standard desk-scale problem: 200 eigenvalues, 20 inside (-0.9, 0.9), 10 per
/// side clustered in [1.05, 1.10] and the rest spread over [1.1, 5].
inline SyntheticHiep standard_problem(std::uint64_t id) {
  std::mt19937_64 rng(0x5eed0000ULL + id);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s;
  for (int i = 0; i < 20; ++i) s.push_back(-0.9 + 1.8 * (i + unit(rng)) / 20.0);
  for (int side : {-1, 1}) {
    for (int i = 0; i < 10; ++i) s.push_back(side * (1.05 + 0.05 * unit(rng)));
    for (int i = 0; i < 80; ++i) s.push_back(side * (1.1 + 3.9 * unit(rng)));
  }
  std::sort(s.begin(), s.end());
  return generate_problem(std::move(s), id + 1);
}

/// Diagonal 8x8 problem with spectrum {+-0.3, +-0.7, +-1.5, +-3}.
inline SyntheticHiep smoke_problem() { return generate_problem({-3.0, -1.5, -0.7, -0.3, 0.3, 0.7, 1.5, 3.0}, 0); }

inline constexpr const char* kBenchmarkHeader =
    "problem_id,filter,N_multiplier,iterations,converged,predicted_rate,measured_rate";

inline std::string benchmark_row(const std::string& problem_id, const std::string& filter_name, double multiplier,
                                 const RateComparison& r) {
  std::ostringstream os;
  os << problem_id << ',' << filter_name << ',' << detail::format_shortest(multiplier) << ',' << r.iterations << ','
     << (r.converged ? "true" : "false") << ',' << detail::format_shortest(r.predicted) << ','
     << detail::format_shortest(r.measured);
  return os.str();
}

}  // namespace filterforge
