#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "filterforge/filter_io.hpp"
#include "filterforge/gauss_legendre.hpp"
#include "filterforge/parallel.hpp"
#include "filterforge/rates.hpp"
#include "filterforge/optim/bfgs.hpp"
#include "filterforge/optim/box.hpp"
#include "filterforge/slise.hpp"
#include "filterforge/weight.hpp"

namespace filterforge {

/// SLiSe-optimal filter for a weight: unconstrained BFGS on the real
/// embedding, started from the Gauss-Legendre filter of the same degree.
inline RationalFilter slise_filter(const StepWeightFunction& weight, int m, const OptimizerConfig& config = {},
                                   OptimizerReport* report = nullptr) {
  const SliseObjective obj(weight, m);
  auto rep = bfgs_minimize(real_objective(obj), to_real(gauss_legendre_filter(m)), config);
  auto filter = filter_from_real(rep.solution);
  if (report) *report = std::move(rep);
  return filter;
}

/// Bounds |Im w_i| >= lb on the real embedding (stored poles have Im w > 0).
inline BoxBounds slise_box_bounds(int m, double lb) {
  if (!(lb >= kMinPoleImag) || !std::isfinite(lb)) throw DomainError("pole bound must be >= 1e-10 and finite");
  auto bounds = BoxBounds::unbounded(4 * m);
  for (int i = 0; i < m; ++i) bounds.lower[3 * m + i] = lb;
  return bounds;
}

struct BoxStart {
  RealVector x;
  /// Indices of poles moved onto the bound.
  std::vector<int> clamped;
};

/// Start point for the pole-bounded problem. Poles whose imaginary part falls
/// short of lb by at most `relative_slack * lb` are moved onto the bound
/// (published filters may sit a rounding step below a round-number bound);
/// larger violations throw a DomainError naming the pole.
inline BoxStart prepare_box_start(const RationalFilter& filter, double lb, double relative_slack = 1e-2) {
  BoxStart out{to_real(filter), {}};
  const auto m = static_cast<int>(filter.m());
  for (int i = 0; i < m; ++i) {
    const double im = filter.poles()[static_cast<std::size_t>(i)].imag();
    if (im >= lb) continue;
    if (im < lb * (1.0 - relative_slack)) {
      std::ostringstream os;
      os.precision(17);
      os << "start pole " << i << " (" << filter.poles()[static_cast<std::size_t>(i)].real() << " + " << im
         << "i) violates the bound Im(w) >= " << lb;
      throw DomainError(os.str());
    }
    out.x[3 * m + i] = lb;
    out.clamped.push_back(i);
  }
  return out;
}

/// Filter families compared in the worst-case rate table.
enum class RateFamily { GaussLegendre, GammaSlise, EnhancedGammaSlise };

inline constexpr RateFamily kRateFamilies[] = {RateFamily::GaussLegendre, RateFamily::GammaSlise,
                                               RateFamily::EnhancedGammaSlise};

inline std::string_view to_string(RateFamily f) {
  switch (f) {
    case RateFamily::GaussLegendre: return "gauss-legendre";
    case RateFamily::GammaSlise: return "gamma-slise";
    case RateFamily::EnhancedGammaSlise: return "enhanced-gamma-slise";
  }
  return "unknown";
}

/// Filter of a family with 4m poles: Gauss-Legendre directly, the SLiSe
/// families optimized for their weight from the Gauss-Legendre start.
inline RationalFilter family_filter(RateFamily family, int m, const OptimizerConfig& config = {}) {
  switch (family) {
    case RateFamily::GaussLegendre: return gauss_legendre_filter(m);
    case RateFamily::GammaSlise: return slise_filter(builtin_weight(BuiltinWeight::GammaSlise), m, config);
    case RateFamily::EnhancedGammaSlise:
      return slise_filter(builtin_weight(BuiltinWeight::EnhancedGammaSlise), m, config);
  }
  throw DomainError("unknown filter family");
}

struct RateRow {
  double gap;
  int poles;
  RateFamily family;
  double rate;
};

/// Worst-case rates for every (gap, pole count, family); pole counts must be
/// positive multiples of 4. Filters are built once per pole count, in parallel.
inline std::vector<RateRow> rate_table(const std::vector<double>& gaps, const std::vector<int>& pole_counts,
                                       const OptimizerConfig& config = {}) {
  for (int p : pole_counts)
    if (p < 4 || p % 4 != 0) throw DomainError("rate table: pole counts must be positive multiples of 4");
  std::vector<GapParameter> gs;
  for (double g : gaps) gs.emplace_back(g);
  constexpr std::size_t kFamilies = std::size(kRateFamilies);
  std::vector<RationalFilter> filters(pole_counts.size() * kFamilies);
  parallel_for(filters.size(), [&](std::size_t k) {
    filters[k] = family_filter(kRateFamilies[k % kFamilies], pole_counts[k / kFamilies] / 4, config);
  });
  std::vector<RateRow> rows;
  for (const auto& g : gs)
    for (std::size_t p = 0; p < pole_counts.size(); ++p)
      for (std::size_t f = 0; f < kFamilies; ++f)
        rows.push_back({g.value(), pole_counts[p], kRateFamilies[f], worst_case_rate(filters[p * kFamilies + f], g)});
  return rows;
}

inline constexpr const char* kRateReportHeader = "G,poles,filter,worst_case_rate";

inline std::string rate_report_csv(const std::vector<RateRow>& rows) {
  std::ostringstream os;
  os << kRateReportHeader << '\n';
  for (const auto& r : rows)
    os << detail::format_shortest(r.gap) << ',' << r.poles << ',' << to_string(r.family) << ','
       << detail::format_shortest(r.rate) << '\n';
  return os.str();
}

}  // namespace filterforge
