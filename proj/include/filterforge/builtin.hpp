#pragma once

#include <array>
#include <string>
#include <string_view>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"

namespace filterforge {

enum class BuiltinFilter { GaussLegendre16, Zolotarev16, BoxLbfgsb16, GammaSlise16, EnhancedGammaSlise16 };

inline constexpr std::array<BuiltinFilter, 5> kBuiltinFilters = {
    BuiltinFilter::GaussLegendre16, BuiltinFilter::Zolotarev16, BuiltinFilter::BoxLbfgsb16,
    BuiltinFilter::GammaSlise16, BuiltinFilter::EnhancedGammaSlise16};

namespace detail {

struct FilterTable {
  std::array<complex, 4> poles;
  std::array<complex, 4> coeffs;
};

// Published 16-pole filters, representative poles in the upper-left quadrant.
inline const FilterTable& table(BuiltinFilter name) {
  static const FilterTable gauss_legendre{
      {complex{-0.9980552138505067, 0.062336105956370486}, complex{-0.9494253842988177, 0.3139927382100546},
       complex{-0.7348899387554323, 0.678186388770961}, complex{-0.2841679239019292, 0.9587745256428074}},
      {complex{0.02525791710871586, -0.0015775481910044564}, complex{0.05278354977406013, -0.017456507483534722},
       complex{0.05763496444397823, -0.05318789432545047}, complex{0.025765774438829884, -0.0869329930919054}}};
  static const FilterTable zolotarev{
      {complex{-0.9999975815339606, 0.0021993013049440135}, complex{-0.9998514744807556, 0.017234528675274002},
       complex{-0.9933358764099828, 0.11525552757595411}, complex{-0.7398348571484926, 0.6727885136861876}},
      {complex{0.0008989201462643977, -1.977001032029609e-6}, complex{0.005245791227192865, -9.042216932920706e-5},
       complex{0.03462538525214074, -0.004017540430714314}, complex{0.15051737271560608, -0.13687697801045523}}};
  static const FilterTable box_lbfgsb{
      {complex{-0.9999983713139353, 0.0022}, complex{-0.9998476756269521, 0.023174916170735475},
       complex{-0.9897979425768154, 0.15300422557734145}, complex{-0.6868662884959791, 0.7440732728350293}},
      {complex{0.0010905705446617412, -1.4902889756769852e-6}, complex{0.007300520076462563, -0.00010162408356932002},
       complex{0.0435127109551866, -0.006058193629191226}, complex{0.1355339692180714, -0.14590122484259907}}};
  static const FilterTable gamma_slise{
      {complex{-0.9997180876994749, 0.010064168904151764}, complex{-0.985330269864567, 0.08344015646402761},
       complex{-0.8908400599591626, 0.30261876848986174}, complex{-0.43598745582039683, 0.6982671139969543}},
      {complex{0.005218903896671892, -0.0003275342117714203}, complex{0.019780578125967584, -0.005308415315997665},
       complex{0.053241710348050676, -0.03215097589453323}, complex{0.05378661362857605, -0.12118676200021669}}};
  static const FilterTable enhanced_gamma_slise{
      {complex{-0.995102777784057, 0.01971965034279112}, complex{-0.9656137585011698, 0.09822459880633161},
       complex{-0.8531623369434934, 0.30357032990253513}, complex{-0.4113331147792164, 0.6641012378282691}},
      {complex{0.007451889566376135, -0.0023538898767857387}, complex{0.019581536492404246, -0.00823771601370859},
       complex{0.04865850681408789, -0.033809650419106246}, complex{0.04909233881671418, -0.11480784939181093}}};
  switch (name) {
    case BuiltinFilter::GaussLegendre16: return gauss_legendre;
    case BuiltinFilter::Zolotarev16: return zolotarev;
    case BuiltinFilter::BoxLbfgsb16: return box_lbfgsb;
    case BuiltinFilter::GammaSlise16: return gamma_slise;
    case BuiltinFilter::EnhancedGammaSlise16: return enhanced_gamma_slise;
  }
  throw LookupError("unknown builtin filter");
}

}  // namespace detail

inline RationalFilter builtin_filter(BuiltinFilter name) {
  const auto& t = detail::table(name);
  return RationalFilter({t.poles.begin(), t.poles.end()}, {t.coeffs.begin(), t.coeffs.end()});
}

inline std::string_view to_string(BuiltinFilter name) {
  switch (name) {
    case BuiltinFilter::GaussLegendre16: return "gauss-legendre16";
    case BuiltinFilter::Zolotarev16: return "zolotarev16";
    case BuiltinFilter::BoxLbfgsb16: return "box-lbfgsb16";
    case BuiltinFilter::GammaSlise16: return "gamma-slise16";
    case BuiltinFilter::EnhancedGammaSlise16: return "enhanced-gamma-slise16";
  }
  throw LookupError("unknown builtin filter");
}

inline BuiltinFilter parse_builtin_filter(std::string_view name) {
  for (auto f : kBuiltinFilters)
    if (to_string(f) == name) return f;
  throw LookupError("unknown builtin filter '" + std::string(name) + "'");
}

inline RationalFilter builtin_filter(std::string_view name) { return builtin_filter(parse_builtin_filter(name)); }

}  // namespace filterforge
