#include "cpprop/phase_tables.hpp"

#include <algorithm>
#include <charconv>
#include <numbers>

#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

using C = CompClass;

std::vector<TableEntry> make_table() {
  const C A = C::AlternatingAmplitude;
  const C S = C::CombinedSech;
  return {
      {"U3a", A, {"1/3"}},
      {"U5a_1", A, {"3/5", "4/5"}},
      {"U5a_2", A, {"1/5", "8/5"}},
      {"U7a_1", A, {"1/7", "10/7", "13/7"}},
      {"U7a_2", A, {"0.230", "1.230", "1"}},
      {"U7a_3", A, {"3/7", "2/7", "11/7"}},
      {"U7a_4", A, {"5/7", "8/7", "9/7"}},
      {"U9a_1", A, {"1/9", "4/3", "5/3", "10/9"}},
      {"U9a_2", A, {"1/3", "0", "1/3", "2/3"}},
      {"U9a_3", A, {"1/3", "0", "5/3", "0"}},
      {"U9a_4", A, {"5/9", "2/3", "1/3", "14/9"}},
      {"U9a_5", A, {"7/9", "4/3", "5/3", "16/9"}},
      {"U9a_6", A, {"0.145", "1.280", "0.024", "2/9"}},
      {"U9a_7", A, {"0.199", "1.803", "1.160", "8/9"}},
      {"U9a_8", A, {"0.271", "1.083", "0.590", "4/9"}},
      {"U3c", S, {"1/3"}},
      {"U5c_1", S, {"5/6", "1/3"}},
      {"U5c_2", S, {"1/6", "5/3"}},
      {"U7c_1", S, {"-0.647", "1/3", "0.647"}},
      {"U7c_2", S, {"-0.176", "1/3", "0.176"}},
      {"U7c_3", S, {"0.425", "1/3", "-0.425"}},
      {"U7c_4", S, {"0.536", "1/3", "-0.536"}},
      {"U7c_5", S, {"0.193", "1.386", "1.245"}},
      {"U7c_6", S, {"0.955", "0.911", "1.533"}},
      {"U9c_1", S, {"0.025", "0.847", "0.670", "1.299"}},
      {"U9c_2", S, {"0.057", "1.30", "1.911", "0.095"}},
      {"U9c_3", S, {"0.126", "1.454", "1.916", "1.983"}},
      {"U9c_4", S, {"0.128", "1.458", "1.789", "1.724"}},
      {"U9c_5", S, {"0.431", "1.189", "0.572", "0.385"}},
      {"U9c_6", S, {"0.500", "0.606", "0.304", "1.601"}},
      {"U9c_7", S, {"0.526", "0.609", "0.294", "1.595"}},
      {"U9c_8", S, {"0.721", "0.254", "0.878", "1.925"}},
      {"U9c_9", S, {"0.731", "0.261", "0.791", "1.721"}},
      {"U9c_10", S, {"0.782", "1.474", "0.530", "0.212"}},
      {"U9c_11", S, {"0.808", "0.779", "1.751", "0.084"}},
      {"U9c_12", S, {"0.866", "0.570", "0.814", "1.585"}},
  };
}

std::string strip_underscores(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '_') out.push_back(c);
  }
  return out;
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(fmt::format("cannot parse number '{}'", text));
  }
  return v;
}

}  // namespace

std::string_view to_string(CompClass c) {
  switch (c) {
    case C::AlternatingAmplitude: return "alternating";
    case C::CombinedSech: return "combined";
    case C::DetuningOnly: return "detuning";
    case C::Uniform: return "uniform";
  }
  return "?";
}

CompClass parse_comp_class(std::string_view text) {
  if (text == "alternating" || text == "AlternatingAmplitude") return C::AlternatingAmplitude;
  if (text == "combined" || text == "CombinedSech") return C::CombinedSech;
  if (text == "detuning" || text == "DetuningOnly") return C::DetuningOnly;
  if (text == "uniform" || text == "Uniform") return C::Uniform;
  throw ConfigError(fmt::format("unknown compensation class '{}'", text));
}

bool is_exact_spelling(std::string_view text) {
  return text.find('.') == std::string_view::npos;
}

double parse_pi_multiple(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_double(text);
  const double num = parse_double(text.substr(0, slash));
  const double den = parse_double(text.substr(slash + 1));
  if (den == 0.0) throw ConfigError(fmt::format("zero denominator in '{}'", text));
  return num / den;
}

bool TableEntry::exact() const {
  return std::all_of(phases_pi.begin(), phases_pi.end(),
                     [](const std::string& s) { return is_exact_spelling(s); });
}

std::vector<double> TableEntry::free_phases() const {
  std::vector<double> out;
  out.reserve(phases_pi.size());
  for (const auto& s : phases_pi) out.push_back(parse_pi_multiple(s) * std::numbers::pi);
  return out;
}

const std::vector<TableEntry>& phase_table() {
  static const std::vector<TableEntry> table = make_table();
  return table;
}

const TableEntry& find_entry(std::string_view name) {
  const std::string key = strip_underscores(name);
  for (const auto& e : phase_table()) {
    if (strip_underscores(e.name) == key) return e;
  }
  throw ConfigError(fmt::format("unknown phase-table entry '{}'", name));
}

}  // namespace cpprop
