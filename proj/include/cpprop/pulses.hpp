#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "cpprop/sampled_field.hpp"

namespace cpprop {

enum class ShapeKind { HyperbolicSecant, Gaussian, CosineSquared, Square };

std::string_view to_string(ShapeKind kind);
/// Accepts "sech", "gaussian", "cos2", "square" (and the enum spellings).
ShapeKind parse_shape_kind(std::string_view text);

/// Elementary pulse envelope.
///
/// time_constant is T_s for sech(t/T_s), T_g for exp(-t^2/2T_g^2), T_c for
/// cos^2(pi t / 2T_c) on (-T_c, T_c), and the full duration for Square.
/// truncation_halfwidth only applies to sech and Gaussian envelopes.
struct PulseShape {
  ShapeKind kind = ShapeKind::CosineSquared;
  double peak_rabi = 1.0;
  double time_constant = 0.0;
  double truncation_halfwidth = 0.0;

  /// Time constant giving area pi at the given peak Rabi frequency, with the
  /// default truncation (10 T for sech, 6 T_g for Gaussian).
  static PulseShape canonical(ShapeKind kind, double peak_rabi = 1.0);

  /// Half-length of the support actually sampled.
  double support_halfwidth() const;
  double fwhm() const;
  void validate() const;
};

/// Omega_0 * envelope(t) * exp(i phase); zero outside the support. The cos^2
/// envelope vanishes exactly at |t| >= T_c.
std::complex<double> envelope_at(const PulseShape& shape, double phase, double t);

/// Integral of the real envelope over its (truncated) support. An infinite
/// truncation_halfwidth gives the untruncated analytic value.
double pulse_area(const PulseShape& shape);

/// N = 2n+1 pulses with anagram phases [0, p2, ..., p_{n+1}, p_n, ..., p2, 0].
struct CompositePulseSpec {
  PulseShape shape;
  int n_pulses = 1;
  std::vector<double> free_phases;  // radians, size (N-1)/2
  double inter_pulse_gap = 0.0;

  /// Expanded phase list of length N.
  std::vector<double> phases() const;
  void validate() const;
};

/// [0, free..., reversed(free without last)..., 0]
std::vector<double> expand_anagram(const std::vector<double>& free_phases);

struct PulseTrain {
  SampledField field;        // starts at tau = 0
  double train_duration = 0.0;  // without the trailing buffer
  std::vector<double> centers;  // pulse centres in time order
};

/// Minimum sampling density accepted by build_train.
inline constexpr double kMinSamplesPerFwhm = 40.0;

/// Samples the composite train at a step no larger than max_dt, snapped so
/// that every pulse support spans an integer number of steps. A zero-valued
/// buffer of tail_buffer time units is appended after the last pulse. When
/// pulses are back to back, a sample on a shared boundary takes the mean of
/// the two adjacent pulse values.
PulseTrain build_train(const CompositePulseSpec& spec, double max_dt, double tail_buffer = 0.0);

}  // namespace cpprop
