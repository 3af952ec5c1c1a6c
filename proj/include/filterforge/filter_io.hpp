#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "filterforge/errors.hpp"
#include "filterforge/filter.hpp"

namespace filterforge {

namespace detail {

inline nlohmann::ordered_json complex_to_json(complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline complex complex_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im") || !j["re"].is_number() || !j["im"].is_number())
    throw ParseError(where + ": expected {\"re\": number, \"im\": number}");
  return {j["re"].get<double>(), j["im"].get<double>()};
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shortest decimal text that reads back to the same double.
inline std::string format_shortest(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// JSON document {"m", "poles": [{"re","im"}], "coeffs": [{"re","im"}]}.
inline nlohmann::ordered_json filter_to_json(const RationalFilter& filter) {
  nlohmann::ordered_json j;
  j["m"] = filter.m();
  j["poles"] = nlohmann::ordered_json::array();
  j["coeffs"] = nlohmann::ordered_json::array();
  for (auto w : filter.poles()) j["poles"].push_back(detail::complex_to_json(w));
  for (auto b : filter.coeffs()) j["coeffs"].push_back(detail::complex_to_json(b));
  return j;
}

inline RationalFilter filter_from_json(const nlohmann::json& j, const std::string& source = "filter") {
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");
  for (const char* key : {"m", "poles", "coeffs"})
    if (!j.contains(key)) throw ParseError(source + ": missing field '" + key + "'");
  if (!j["m"].is_number_integer() || j["m"].get<long long>() < 1)
    throw ParseError(source + ": field 'm' must be a positive integer");
  if (!j["poles"].is_array() || !j["coeffs"].is_array())
    throw ParseError(source + ": 'poles' and 'coeffs' must be arrays");
  const auto m = static_cast<std::size_t>(j["m"].get<long long>());
  if (j["poles"].size() != m || j["coeffs"].size() != m)
    throw ParseError(source + ": m = " + std::to_string(m) + " but " + std::to_string(j["poles"].size()) +
                     " poles and " + std::to_string(j["coeffs"].size()) + " coeffs");
  std::vector<complex> poles, coeffs;
  for (std::size_t i = 0; i < m; ++i) {
    poles.push_back(detail::complex_from_json(j["poles"][i], source + ": poles[" + std::to_string(i) + "]"));
    coeffs.push_back(detail::complex_from_json(j["coeffs"][i], source + ": coeffs[" + std::to_string(i) + "]"));
    if (poles.back().imag() == 0.0)
      throw ParseError(source + ": poles[" + std::to_string(i) + "] violates Im(w) != 0");
  }
  try {
    return RationalFilter(std::move(poles), std::move(coeffs));
  } catch (const DomainError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

/// Serializes with 17 significant digits so that a read-back is bit-exact.
inline std::string dump_filter(const RationalFilter& filter) {
  std::string out = "{\n  \"m\": " + std::to_string(filter.m()) + ",\n";
  auto list = [&](const char* key, std::span<const complex> values, bool last) {
    out += std::string("  \"") + key + "\": [\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      out += "    {\"re\": " + detail::format_double(values[i].real()) +
             ", \"im\": " + detail::format_double(values[i].imag()) + "}";
      out += (i + 1 < values.size()) ? ",\n" : "\n";
    }
    out += last ? "  ]\n" : "  ],\n";
  };
  list("poles", filter.poles(), false);
  list("coeffs", filter.coeffs(), true);
  out += "}\n";
  return out;
}

inline RationalFilter parse_filter(const std::string& text, const std::string& source = "filter") {
  return filter_from_json(detail::parse_json(text, source), source);
}

inline void write_filter(const RationalFilter& filter, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << dump_filter(filter);
}

inline RationalFilter read_filter(const std::filesystem::path& path) {
  return parse_filter(detail::read_text(path), path.string());
}

/// Samples r on [lo, hi] (both endpoints included) as "x,value" rows.
inline std::string filter_curve_csv(const RationalFilter& filter, double lo, double hi, int samples) {
  if (samples < 2 || !(lo < hi)) throw DomainError("curve export: need samples >= 2 and lo < hi");
  std::string out = "x,value\n";
  for (int i = 0; i < samples; ++i) {
    // a range symmetric about 0 yields exactly mirrored sample points
    const double x = i == 0               ? lo
                     : i == samples - 1 ? hi
                                        : (static_cast<double>(samples - 1 - i) * lo + static_cast<double>(i) * hi) /
                                              (samples - 1);
    out += detail::format_shortest(x) + "," + detail::format_shortest(filter.evaluate(x)) + "\n";
  }
  return out;
}

}  // namespace filterforge
