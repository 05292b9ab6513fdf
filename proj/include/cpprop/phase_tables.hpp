#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cpprop {

enum class CompClass { AlternatingAmplitude, CombinedSech, DetuningOnly, Uniform };

std::string_view to_string(CompClass c);
/// Accepts "alternating", "combined", "detuning", "uniform" and the enum spellings.
CompClass parse_comp_class(std::string_view text);

/// One published phase sequence. Phases are the free phases phi_2 ... phi_{n+1}
/// in units of pi, kept as the printed strings ("1/3", "0.230", "-0.647").
struct TableEntry {
  std::string name;  // "U3a", "U5a_1", ..., "U9c_12"
  CompClass comp_class;
  std::vector<std::string> phases_pi;

  int n_pulses() const { return 2 * static_cast<int>(phases_pi.size()) + 1; }
  /// True when every phase is printed as a fraction or an integer.
  bool exact() const;
  /// Free phases in radians.
  std::vector<double> free_phases() const;
};

/// Both appendix tables: 15 alternating-amplitude rows, then 21 combined rows.
const std::vector<TableEntry>& phase_table();

/// Looks up an entry by name; "U5c2" and "U5c_2" are equivalent. Throws
/// ConfigError for unknown names.
const TableEntry& find_entry(std::string_view name);

/// Parses "p/q", an integer or a decimal; returns the value (units of pi).
double parse_pi_multiple(std::string_view text);
/// True for "p/q" and integer spellings.
bool is_exact_spelling(std::string_view text);

}  // namespace cpprop
