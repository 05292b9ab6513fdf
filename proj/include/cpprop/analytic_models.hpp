#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

#include "cpprop/series.hpp"
#include "cpprop/su2.hpp"

namespace cpprop {

enum class ErrorKind { None, Alternating, Uniform };
enum class PulseModel { Resonant, RosenZener, Square };

std::string_view to_string(PulseModel model);

/// Per-pulse perturbation. Pulse k (1-based) gets e_k = sign(k) * epsilon with
/// sign(k) = (-1)^k for Alternating, +1 for Uniform. How e_k enters depends on
/// the pulse model, see composed_propagator.
struct ErrorModel {
  ErrorKind kind = ErrorKind::None;
  double epsilon = 0.0;

  static int sign(ErrorKind kind, int k) {
    switch (kind) {
      case ErrorKind::None: return 0;
      case ErrorKind::Alternating: return (k % 2 == 0) ? 1 : -1;
      case ErrorKind::Uniform: return 1;
    }
    return 0;
  }
  double error_of(int k) const { return sign(kind, k) * epsilon; }
};

/// Resonant pulse of area A: a = cos(A/2), b = i sin(A/2) e^{i phase}.
SU2 resonant_propagator(double area, double phase);

/// Rosen-Zener (sech) pulse with p = Omega0 T / 2, q = Delta T / 2:
/// a = Gamma(1/2+iq)^2 / (Gamma(1/2+iq-p) Gamma(1/2+iq+p)),
/// b = i sin(pi p) / cosh(pi q) e^{i phase}.
/// Throws DomainError for p < 0 or non-finite arguments.
SU2 rosen_zener_propagator(double p, double q, double phase);

/// Constant-amplitude pulse solved from the two-level equations with
/// d(alpha)/dt = (i/2) conj(Omega) beta, d(beta)/dt = (i/2) Omega alpha - i Delta beta.
/// Returned in the symmetric frame, i.e. with the trivial phase
/// exp(-i Delta duration / 2) divided out.
SU2 square_pulse_propagator(double omega0, double duration, double delta, double phase);

/// Propagator of the N-pulse sequence with the given (expanded) phase list.
/// Resonant: area pi + e_k. RosenZener: Omega0 T = 1 + e_k, i.e.
/// p = (1 + e_k)/2, with q = delta/2.
/// Square: duration pi, Omega0 = 1 + e_k, detuning delta. Resonant requires
/// delta == 0.
SU2 composed_propagator(const std::vector<double>& phases, const ErrorModel& model, double delta,
                        PulseModel pulse_model);

std::complex<double> composed_a(const std::vector<double>& phases, const ErrorModel& model,
                                double delta, PulseModel pulse_model);

/// Taylor expansion of the composed a(eps, delta) about (0, 0), built from
/// exact Taylor jets of the single-pulse propagators.
///
/// The jets are computed once per (model, error sign) by a two-dimensional
/// Cauchy integral on circles in the complex eps and delta planes and then
/// composed as truncated power series, so no finite-difference step enters.
/// Derivatives with respect to the free phases come out of the same pass.
class ComposedTaylor {
 public:
  ComposedTaylor(PulseModel model, ErrorKind error, Series2::Shape shape);

  const Series2::Shape& shape() const { return shape_; }
  PulseModel model() const { return model_; }
  ErrorKind error() const { return error_; }

  /// Series of a for the expanded phase list.
  Series2 a_series(const std::vector<double>& phases) const;

  /// Series of a for the anagram sequence with the given free phases; when
  /// grad is non-null, also fills d(a)/d(free_phase_k) as series.
  Series2 a_series_free(const std::vector<double>& free_phases, std::vector<Series2>* grad) const;

 private:
  struct Jet {
    Series2 u11, b0, c0, u22;  // U12 = b0 e^{i s phi}, U21 = c0 e^{-i s phi}
  };
  const Jet& jet_for(int k) const;

  PulseModel model_;
  ErrorKind error_;
  Series2::Shape shape_;
  int phase_sign_ = 1;
  std::array<Jet, 3> jets_{};  // indexed by error sign + 1
};

}  // namespace cpprop
