#pragma once

#include <complex>
#include <vector>

#include "cpprop/sampled_field.hpp"
#include "cpprop/su2.hpp"

namespace cpprop {

/// Ground (alpha) and excited (beta) amplitudes.
struct AtomState {
  cplx alpha{1.0, 0.0};
  cplx beta{0.0, 0.0};
  double norm() const { return std::norm(alpha) + std::norm(beta); }
};

enum class IntegrationFrame {
  /// beta~ = beta e^{i Delta (t - t0)}: the -i Delta beta term is removed analytically.
  Interaction,
  /// Direct integration of the equations as written; reference only.
  Lab,
};

enum class Stepper {
  RK4,
  /// Fourth-order Magnus step with two Gauss points; each step is an exact
  /// SU(2) exponential, so the norm is conserved to rounding and the step
  /// size is not limited by Delta dt.
  Magnus4,
};

struct IntegratorOptions {
  int substeps = 1;  // steps per field sample interval
  IntegrationFrame frame = IntegrationFrame::Interaction;  // RK4 only
  Stepper stepper = Stepper::RK4;
  double max_norm_drift = 1e-8;  // NumericalError beyond this
};

/// Field values on the RK4 node grid t0 + k dt / (2 substeps), obtained from
/// the samples by 4-point Lagrange (cubic) interpolation; one-sided stencils
/// at the ends. Build once per field and share between atoms.
class FieldInterpolant {
 public:
  FieldInterpolant(const SampledField& field, int substeps);

  int substeps() const { return substeps_; }
  double t0() const { return t0_; }
  double step() const { return h_; }  // RK4 step
  std::size_t n_steps() const { return (nodes_.size() - 1) / 2; }
  /// Node k sits at t0 + k * step / 2.
  const std::vector<cplx>& nodes() const { return nodes_; }

 private:
  int substeps_;
  double t0_;
  double h_;
  std::vector<cplx> nodes_;
};

/// Field values at the two Gauss points of every Magnus step.
class MagnusField {
 public:
  MagnusField(const SampledField& field, int substeps);

  int substeps() const { return substeps_; }
  double t0() const { return t0_; }
  double step() const { return h_; }
  std::size_t n_steps() const { return gauss_.size() / 2; }
  const std::vector<cplx>& gauss() const { return gauss_; }

 private:
  int substeps_;
  double t0_;
  double h_;
  std::vector<cplx> gauss_;
};

/// Evolves one atom across the whole sample window under
/// d(alpha)/dt = (i/2) conj(Omega) beta, d(beta)/dt = (i/2) Omega alpha - i Delta beta.
/// Returns the lab-frame state at the last sample time. When trajectory is
/// non-null it receives the state at every sample time. The norm is monitored
/// but never renormalized; drift beyond options.max_norm_drift throws
/// NumericalError with a step-size hint.
AtomState integrate(const SampledField& field, double delta, AtomState initial,
                    const IntegratorOptions& options = {},
                    std::vector<AtomState>* trajectory = nullptr);

/// Same, with a prepared interpolant (frame is always Interaction).
AtomState integrate(const FieldInterpolant& field, double delta, AtomState initial,
                    double max_norm_drift = 1e-8);

/// Interaction-frame RK4 that calls visit(j, alpha, beta) with the lab-frame
/// state at every field sample j = 0 .. n - 1. Returns the final lab state
/// without checking the norm.
template <class Visitor>
AtomState integrate_visit(const FieldInterpolant& field, double delta, AtomState initial,
                          Visitor&& visit);

/// Magnus counterpart of integrate_visit. The visitor sees the state up to a
/// phase common to alpha and beta (populations and conj(alpha) beta are
/// exact); the returned final state is the lab-frame state.
template <class Visitor>
AtomState integrate_visit(const MagnusField& field, double delta, AtomState initial,
                          Visitor&& visit);

/// Propagator over the sample window, in the symmetric frame: the lab-frame
/// propagator is exp(-i Delta T_w / 2) times the returned SU(2) element, where
/// T_w = field.window().
SU2 numeric_propagator(const SampledField& field, double delta, const IntegratorOptions& options = {});

template <class Visitor>
AtomState integrate_visit(const FieldInterpolant& field, double delta, AtomState initial,
                          Visitor&& visit) {
  constexpr cplx kHalfI{0.0, 0.5};
  const double h = field.step();
  const cplx* f = field.nodes().data();
  const std::size_t steps = field.n_steps();
  const auto sub = static_cast<std::size_t>(field.substeps());
  const cplx half_turn = std::polar(1.0, 0.5 * delta * h);
  cplx a = initial.alpha;
  cplx b = initial.beta;  // interaction frame, b = beta e^{i Delta (t - t0)}
  cplx e0{1.0, 0.0};
  visit(std::size_t{0}, a, b);
  for (std::size_t k = 0; k < steps; ++k) {
    // Rotating factor by recurrence, resynchronised to stop rounding build-up.
    if (k % 64 == 0) e0 = std::polar(1.0, delta * h * static_cast<double>(k));
    const cplx em = e0 * half_turn;
    const cplx e1 = em * half_turn;
    const cplx g1 = kHalfI * f[2 * k] * e0;
    const cplx gm = kHalfI * f[2 * k + 1] * em;
    const cplx g4 = kHalfI * f[2 * k + 2] * e1;
    const cplx cg1 = std::conj(g1), cgm = std::conj(gm), cg4 = std::conj(g4);
    const cplx k1a = -cg1 * b, k1b = g1 * a;
    const cplx a2 = a + 0.5 * h * k1a, b2 = b + 0.5 * h * k1b;
    const cplx k2a = -cgm * b2, k2b = gm * a2;
    const cplx a3 = a + 0.5 * h * k2a, b3 = b + 0.5 * h * k2b;
    const cplx k3a = -cgm * b3, k3b = gm * a3;
    const cplx a4 = a + h * k3a, b4 = b + h * k3b;
    const cplx k4a = -cg4 * b4, k4b = g4 * a4;
    a += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    b += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    e0 = e1;
    if ((k + 1) % sub == 0) visit((k + 1) / sub, a, b * std::conj(e1));
  }
  return {a, b * std::conj(e0)};
}

template <class Visitor>
AtomState integrate_visit(const MagnusField& field, double delta, AtomState initial,
                          Visitor&& visit) {
  // Symmetric frame: psi_lab = exp(-i Delta (t - t0) / 2) psi_s, and
  // psi_s' = X psi_s with X = [[i z, w], [-conj(w), -i z]], z = Delta / 2,
  // w = (i/2) conj(Omega).
  constexpr double kC = 0.14433756729740644;  // sqrt(3) / 12
  const double h = field.step();
  const cplx* f = field.gauss().data();
  const std::size_t steps = field.n_steps();
  const auto sub = static_cast<std::size_t>(field.substeps());
  const double z = 0.5 * delta;
  cplx a = initial.alpha;
  cplx b = initial.beta;
  visit(std::size_t{0}, a, b);
  for (std::size_t k = 0; k < steps; ++k) {
    const cplx w1{0.5 * f[2 * k].imag(), 0.5 * f[2 * k].real()};
    const cplx w2{0.5 * f[2 * k + 1].imag(), 0.5 * f[2 * k + 1].real()};
    // [X2, X1] has z part -2 Im(w2 conj(w1)) and w part 2i z (w1 - w2).
    const double zc = -2.0 * (w2 * std::conj(w1)).imag();
    const cplx dw = w1 - w2;
    const double zs = h * z + kC * h * h * zc;
    const cplx ws = 0.5 * h * (w1 + w2) + kC * h * h * cplx{-2.0 * z * dw.imag(), 2.0 * z * dw.real()};
    const double t2 = zs * zs + std::norm(ws);
    double c, s;
    if (t2 < 0.36) {
      // cos and sin(x)/x as series in x^2; truncation below 1e-16 for |x| < 0.6.
      c = 1.0 + t2 * (-1.0 / 2 + t2 * (1.0 / 24 + t2 * (-1.0 / 720 + t2 * (1.0 / 40320 +
          t2 * (-1.0 / 3628800 + t2 * (1.0 / 479001600 + t2 * (-1.0 / 87178291200.0)))))));
      s = 1.0 + t2 * (-1.0 / 6 + t2 * (1.0 / 120 + t2 * (-1.0 / 5040 + t2 * (1.0 / 362880 +
          t2 * (-1.0 / 39916800 + t2 * (1.0 / 6227020800.0 + t2 * (-1.0 / 1307674368000.0)))))));
    } else {
      const double theta = std::sqrt(t2);
      c = std::cos(theta);
      s = std::sin(theta) / theta;
    }
    const cplx na = cplx{c, s * zs} * a + s * ws * b;
    const cplx nb = -s * std::conj(ws) * a + cplx{c, -s * zs} * b;
    a = na;
    b = nb;
    if ((k + 1) % sub == 0) visit((k + 1) / sub, a, b);
  }
  const cplx phase = std::polar(1.0, -z * h * static_cast<double>(steps));
  return {a * phase, b * phase};
}

}  // namespace cpprop
