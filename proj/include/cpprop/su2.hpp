#pragma once

#include <complex>

namespace cpprop {

using cplx = std::complex<double>;

/// Two-level propagator in Cayley-Klein form, U = [[a, b], [-b*, a*]].
///
/// Instances always satisfy |a|^2 + |b|^2 = 1 to 1e-12; construction
/// renormalizes drift up to 1e-9 and rejects anything larger.
class SU2 {
 public:
  static constexpr double kUnitarityTolerance = 1e-12;
  static constexpr double kRejectTolerance = 1e-9;

  SU2() = default;  // identity
  SU2(cplx a, cplx b);

  static SU2 identity() { return {}; }

  cplx a() const { return a_; }
  cplx b() const { return b_; }

  // Full matrix elements.
  cplx u11() const { return a_; }
  cplx u12() const { return b_; }
  cplx u21() const { return -std::conj(b_); }
  cplx u22() const { return std::conj(a_); }

  double norm_defect() const { return std::norm(a_) + std::norm(b_) - 1.0; }

  /// Applies U to the column (alpha, beta).
  void apply(cplx& alpha, cplx& beta) const;

  friend bool operator==(const SU2&, const SU2&) = default;

 private:
  cplx a_{1.0, 0.0};
  cplx b_{0.0, 0.0};
};

/// Matrix product later * earlier.
SU2 compose(const SU2& later, const SU2& earlier);

/// Probability that a ground-state atom stays in the ground state, |a|^2.
double error_probability(const SU2& u);

/// Largest unitarity drift renormalized away since the last reset. Shared by
/// all threads; used to report integrator/composition quality per run.
class DriftMonitor {
 public:
  static void record(double drift);
  static double max_drift();
  static void reset();
};

}  // namespace cpprop
