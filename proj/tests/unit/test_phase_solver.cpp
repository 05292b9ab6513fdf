#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cpprop/errors.hpp"
#include "cpprop/phase_solver.hpp"
#include "cpprop/phase_tables.hpp"

using namespace cpprop;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(PhaseTables, ShipsBothTables) {
  int amp = 0, comb = 0;
  for (const auto& e : phase_table()) {
    if (e.comp_class == CompClass::AlternatingAmplitude) ++amp;
    if (e.comp_class == CompClass::CombinedSech) ++comb;
  }
  EXPECT_EQ(amp, 15);
  EXPECT_EQ(comb, 21);
  EXPECT_THROW(find_entry("U11z"), ConfigError);
}

TEST(PhaseTables, ParsesPiMultiples) {
  EXPECT_DOUBLE_EQ(parse_pi_multiple("1/3"), 1.0 / 3);
  EXPECT_DOUBLE_EQ(parse_pi_multiple("5/3"), 5.0 / 3);
  EXPECT_DOUBLE_EQ(parse_pi_multiple("-0.647"), -0.647);
  EXPECT_DOUBLE_EQ(parse_pi_multiple("1"), 1.0);
  EXPECT_TRUE(is_exact_spelling("4/9"));
  EXPECT_FALSE(is_exact_spelling("0.2708"));
  EXPECT_THROW(parse_pi_multiple("pi/3"), ConfigError);
}

TEST(PhaseTables, KnownEntries) {
  const auto& u5c2 = find_entry("U5c_2");
  EXPECT_EQ(u5c2.n_pulses(), 5);
  EXPECT_TRUE(u5c2.exact());
  const auto p = u5c2.free_phases();
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], kPi / 6, 1e-15);
  EXPECT_NEAR(p[1], 5 * kPi / 3, 1e-15);
  EXPECT_EQ(find_entry("U9a_8").n_pulses(), 9);
}

class TableRow : public ::testing::TestWithParam<std::string> {};

TEST_P(TableRow, Verifies) {
  const TableVerification v = verify_table(GetParam());
  EXPECT_TRUE(v.pass) << v.name << " residual " << v.root_residual << " deviation "
                      << v.max_phase_deviation;
  EXPECT_LT(v.root_residual, 1e-9);
  if (!v.exact) EXPECT_LE(v.max_phase_deviation, v.allowed_phase_deviation);
}

std::vector<std::string> all_entry_names() {
  std::vector<std::string> n;
  for (const auto& e : phase_table()) n.push_back(e.name);
  return n;
}

INSTANTIATE_TEST_SUITE_P(All, TableRow, ::testing::ValuesIn(all_entry_names()),
                         [](const auto& info) { return info.param; });

TEST(PhaseSolver, ClosedFormsAgreeWithJets) {
  for (const char* name : {"U3a", "U5a_1", "U5a_2", "U3c", "U5c_1", "U5c_2", "U7c_1"}) {
    const auto& e = find_entry(name);
    const auto r = class_residuals(e.comp_class, e.free_phases(), e.n_pulses(),
                                   default_max_order(e.comp_class, e.n_pulses()));
    if (!std::isnan(r.closed_form_discrepancy)) EXPECT_LT(r.closed_form_discrepancy, 1e-10) << name;
  }
}

TEST(PhaseSolver, ConstraintSets) {
  // Amplitude class: odd eps-derivatives only.
  const auto amp = class_constraints(CompClass::AlternatingAmplitude, 5);
  for (const auto& d : amp) {
    EXPECT_EQ(d.delta, 0);
    EXPECT_EQ(d.eps % 2, 1);
  }
  // Combined class to order 2: all five mixed derivatives.
  EXPECT_EQ(class_constraints(CompClass::CombinedSech, 2).size(), 5u);
}

TEST(PhaseSolver, ThreePulseAlternating) {
  const SolveReport r = solve(3, CompClass::AlternatingAmplitude, 1);
  ASSERT_EQ(r.sequences.size(), 1u);
  EXPECT_NEAR(r.sequences[0].free_phases[0], kPi / 3, 1e-9);
  EXPECT_EQ(r.expected_count, 1);
}

TEST(PhaseSolver, FivePulseAlternating) {
  const SolveReport r = solve(5, CompClass::AlternatingAmplitude, 3);
  ASSERT_EQ(r.sequences.size(), 2u);
  std::vector<std::vector<double>> got;
  for (const auto& s : r.sequences) got.push_back(s.free_phases);
  std::sort(got.begin(), got.end());
  EXPECT_LT(max_phase_distance(got[0], {kPi / 5, 8 * kPi / 5}), 1e-8);
  EXPECT_LT(max_phase_distance(got[1], {3 * kPi / 5, 4 * kPi / 5}), 1e-8);
}

TEST(PhaseSolver, SevenPulseCounts) {
  EXPECT_EQ(solve(7, CompClass::AlternatingAmplitude, 5).sequences.size(), 4u);
  EXPECT_EQ(solve(7, CompClass::CombinedSech, default_max_order(CompClass::CombinedSech, 7))
                .sequences.size(), 6u);
}

TEST(PhaseSolver, CanonicalPhasesAreMirrorInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p{u(rng), u(rng), u(rng)};
    std::vector<double> m = p;
    for (auto& x : m) x = -x + 2 * kPi * std::round(u(rng));
    const auto cp = canonical_phases(p);
    const auto cm = canonical_phases(m);
    EXPECT_LT(max_phase_distance(cp, cm), 1e-12);
    EXPECT_LT(cp[0], kPi + 1e-12);
    for (double x : cp) {
      EXPECT_GE(x, 0.0);
      EXPECT_LT(x, 2 * kPi);
    }
  }
}

TEST(PhaseSolver, PolishRecoversPerturbedRoot) {
  const std::vector<double> root{kPi / 6, 5 * kPi / 3};
  const PolishResult r = polish(CompClass::CombinedSech, {root[0] + 0.02, root[1] - 0.03}, 2);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_LT(max_phase_distance(r.free_phases, root), 1e-8);
}

TEST(PhaseSolver, SquarePulseDeviation) {
  for (const char* name : {"U5c_2", "U7c_1"}) {
    const auto& e = find_entry(name);
    // Every order the sequence was built to cancel (2 for U5c_2, 3 for U7c_1).
    const auto r = square_pulse_deviation_check(e.free_phases(), e.n_pulses());
    ASSERT_GE(r.max_residual.size(), 2u);
    for (std::size_t k = 0; k < r.max_residual.size(); ++k) {
      EXPECT_LT(r.max_residual[k], 1e-8) << name << " order " << k + 1;
    }
  }
  const auto& u9 = find_entry("U9c_1");
  const auto r = square_pulse_deviation_check(u9.free_phases(), u9.n_pulses(), 4);
  EXPECT_GT(r.max_residual[3], 1e-3);
  EXPECT_LT(r.sech_max_residual[3], 1e-9);
}

TEST(PhaseSolver, InvalidArguments) {
  EXPECT_THROW(solve(4, CompClass::AlternatingAmplitude, 1), ConfigError);
  EXPECT_THROW(parse_comp_class("nonsense"), ConfigError);
  EXPECT_EQ(parse_comp_class("combined"), CompClass::CombinedSech);
}
