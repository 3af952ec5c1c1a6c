#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "filterforge/errors.hpp"
#include "filterforge/filter_io.hpp"

namespace filterforge {

/// Even, non-negative, piecewise-constant weight with compact support. Stored
/// on the positive half-line: values[j] applies for breakpoints[j-1] <= |x| <
/// breakpoints[j] (with breakpoints[-1] = 0); the weight vanishes for
/// |x| >= breakpoints.back().
class StepWeightFunction {
 public:
  StepWeightFunction() = default;

  StepWeightFunction(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size())
      throw DomainError("weight function: need equally many (>0) breakpoints and values");
    double prev = 0.0;
    for (std::size_t j = 0; j < breakpoints_.size(); ++j) {
      if (!std::isfinite(breakpoints_[j]) || !(breakpoints_[j] > prev))
        throw DomainError("weight function: breakpoints must be finite, positive and strictly increasing");
      if (!std::isfinite(values_[j]) || values_[j] < 0.0)
        throw DomainError("weight function: values must be finite and non-negative");
      prev = breakpoints_[j];
    }
  }

  double operator()(double x) const noexcept {
    const double ax = std::abs(x);
    for (std::size_t j = 0; j < breakpoints_.size(); ++j)
      if (ax < breakpoints_[j]) return values_[j];
    return 0.0;
  }

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double support() const noexcept { return breakpoints_.back(); }

  StepWeightFunction scaled(double factor) const {
    std::vector<double> v(values_);
    for (auto& x : v) x *= factor;
    return {breakpoints_, std::move(v)};
  }

  friend bool operator==(const StepWeightFunction&, const StepWeightFunction&) = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

enum class BuiltinWeight { GammaSlise, BoxSlise, EnhancedGammaSlise };

inline StepWeightFunction builtin_weight(BuiltinWeight name) {
  switch (name) {
    case BuiltinWeight::GammaSlise:
      return {{0.95, 1.05, 1.4, 5.0}, {1.0, 0.01, 10.0, 20.0}};
    case BuiltinWeight::BoxSlise:
      return {{0.95, 0.995, 1.005, 1.05, 1.1, 1.3, 1.8, 3.0}, {1.0, 4.0, 2.0, 4.0, 0.6, 1.0, 0.3, 0.1}};
    case BuiltinWeight::EnhancedGammaSlise:
      return {{0.96, 1.0417, 1.4, 10.0}, {0.7, 0.00092, 887.0, 20.0}};
  }
  throw LookupError("unknown builtin weight");
}

inline BuiltinWeight parse_builtin_weight(std::string_view name) {
  if (name == "gamma-slise") return BuiltinWeight::GammaSlise;
  if (name == "box-slise") return BuiltinWeight::BoxSlise;
  if (name == "enhanced-gamma-slise") return BuiltinWeight::EnhancedGammaSlise;
  throw LookupError("unknown builtin weight '" + std::string(name) + "'");
}

inline StepWeightFunction builtin_weight(std::string_view name) { return builtin_weight(parse_builtin_weight(name)); }

/// JSON document {"breakpoints": [...], "values": [...]} on the positive half-line.
inline std::string dump_weight(const StepWeightFunction& weight) {
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + detail::format_double(v[i]);
    return s + "]";
  };
  return "{\n  \"breakpoints\": " + list(weight.breakpoints()) + ",\n  \"values\": " + list(weight.values()) +
         "\n}\n";
}

inline StepWeightFunction parse_weight(const std::string& text, const std::string& source = "weight") {
  const auto j = detail::parse_json(text, source);
  if (!j.is_object() || !j.contains("breakpoints") || !j.contains("values"))
    throw ParseError(source + ": expected fields 'breakpoints' and 'values'");
  std::vector<double> b, v;
  for (const char* key : {"breakpoints", "values"}) {
    if (!j[key].is_array()) throw ParseError(source + ": '" + key + "' must be an array");
    for (std::size_t i = 0; i < j[key].size(); ++i) {
      if (!j[key][i].is_number())
        throw ParseError(source + ": " + key + "[" + std::to_string(i) + "] is not a number");
      (std::string_view(key) == "breakpoints" ? b : v).push_back(j[key][i].get<double>());
    }
  }
  try {
    return {std::move(b), std::move(v)};
  } catch (const DomainError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline void write_weight(const StepWeightFunction& weight, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << dump_weight(weight);
}

inline StepWeightFunction read_weight(const std::filesystem::path& path) {
  return parse_weight(detail::read_text(path), path.string());
}

}  // namespace filterforge
