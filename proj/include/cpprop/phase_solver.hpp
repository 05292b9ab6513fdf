#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "cpprop/analytic_models.hpp"
#include "cpprop/phase_tables.hpp"

namespace cpprop {

struct PhaseSequence {
  int n_pulses = 0;
  std::vector<double> free_phases;  // radians in [0, 2 pi)
  CompClass comp_class = CompClass::AlternatingAmplitude;
  int max_nullified_order = 0;
  double residual_norm = 0.0;  // max |derivative| over the constraint set
  std::string provenance;      // table entry name or "solver"
};

/// Derivative d^i/deps^i d^j/ddelta^j of a at the origin.
struct DerivativeIndex {
  int eps = 0;
  int delta = 0;
  int order() const { return eps + delta; }
  friend bool operator==(const DerivativeIndex&, const DerivativeIndex&) = default;
};

struct ResidualReport {
  std::vector<DerivativeIndex> indices;
  std::vector<std::complex<double>> derivatives;
  std::vector<double> residuals;  // |derivatives|

  /// Hand-derived constraint expressions, where known (N = 3, 5, 7), e.g.
  /// cos(phi2) - 1/2 for N = 3.
  std::vector<double> closed_forms;
  /// Largest |numeric - closed-form prediction| over derivatives that have a
  /// closed form; NaN when none applies.
  double closed_form_discrepancy = 0.0;

  double max_residual() const;
  /// Largest residual among derivatives of total order `order`.
  double max_residual_at_order(int order) const;
};

/// Order of the constraint system used by default for a class: N - 2 for the
/// alternating-amplitude class, (N - 1)/2 otherwise.
int default_max_order(CompClass c, int n_pulses);

/// The error model and single-pulse model a class is defined on.
PulseModel class_pulse_model(CompClass c);
ErrorKind class_error_kind(CompClass c);

/// Derivatives constrained by a class up to max_order.
std::vector<DerivativeIndex> class_constraints(CompClass c, int max_order);

/// Odd eps-derivatives of the resonant composed a up to max_order.
ResidualReport amplitude_residuals(const std::vector<double>& free_phases, int n_pulses,
                                   int max_order);

/// All mixed derivatives 1 <= i + j <= max_order of the Rosen-Zener composed a
/// with alternating amplitude error.
ResidualReport combined_residuals(const std::vector<double>& free_phases, int n_pulses,
                                  int max_order);

/// Residuals for any class; `model` overrides the class's pulse model (used
/// for the square-pulse comparison).
ResidualReport class_residuals(CompClass c, const std::vector<double>& free_phases, int n_pulses,
                               int max_order, std::optional<PulseModel> model = std::nullopt);

struct SolveOptions {
  int seed_grid_density = 24;
  double tolerance = 1e-9;
  double dedup_tolerance = 1e-4;
  /// Fraction of the seed lattice (lowest residual first) polished in
  /// addition to the lattice local minima.
  double screen_fraction = 0.01;
  int max_iterations = 200;
};

struct SolveReport {
  std::vector<PhaseSequence> sequences;
  int expected_count = -1;  // -1 when no published count exists
  bool seed_density_warning = false;
  long seeds = 0;
  long polished = 0;
  long converged = 0;
};

/// Published root counts: 2^{n-1} for the alternating class and 1, 2, 6, 12
/// for the combined class at N = 3, 5, 7, 9.
int expected_root_count(CompClass c, int n_pulses);

SolveReport solve(int n_pulses, CompClass c, int max_order, const SolveOptions& options = {});

struct PolishResult {
  std::vector<double> free_phases;
  double residual = 0.0;  // max |derivative|
  int iterations = 0;
  bool converged = false;
};

/// Damped least-squares (Levenberg-Marquardt) refinement of a phase set
/// against the class constraints.
PolishResult polish(CompClass c, const std::vector<double>& free_phases, int max_order,
                    std::optional<PulseModel> model = std::nullopt, double tolerance = 1e-9,
                    int max_iterations = 200);

/// Canonical representative under phi -> -phi (mod 2 pi): phases reduced to
/// [0, 2 pi) and the lexicographically smaller of the pair, i.e. phi_2 < pi.
std::vector<double> canonical_phases(const std::vector<double>& free_phases);

/// Largest circular distance between two phase lists.
double max_phase_distance(const std::vector<double>& x, const std::vector<double>& y);

struct TableVerification {
  std::string name;
  bool exact = false;
  int max_order = 0;
  ResidualReport at_table;         // residuals at the printed phases
  std::vector<double> root;        // printed phases for exact rows, polished root otherwise
  double root_residual = 0.0;
  double max_phase_deviation = 0.0;     // |root - printed| (radians)
  double allowed_phase_deviation = 0.0;  // one unit in the last printed digit
  bool pass = false;
};

/// Checks a shipped table entry. Exact (fractional) rows pass when every class
/// residual is below 1e-9 at the printed phases. Decimal rows pass when a
/// Levenberg-Marquardt polish started at the printed phases reaches residual
/// below 1e-9 and every printed decimal lies within one unit of its last
/// digit of that root.
TableVerification verify_table(const std::string& entry_name);

struct SquareDeviationReport {
  std::vector<double> phases;            // polished sech root that was tested
  std::vector<double> max_residual;      // per order 1..max_order, square model
  std::vector<double> sech_max_residual; // same under the sech model
  std::vector<bool> nullified;           // square residual < 1e-8
};

/// Evaluates the combined-class residuals under the square-pulse model for a
/// sequence derived with sech pulses. The phases are first polished under the
/// sech model so that printed-decimal rounding does not mask the comparison.
SquareDeviationReport square_pulse_deviation_check(const std::vector<double>& free_phases,
                                                   int n_pulses, int max_order = -1);

}  // namespace cpprop
