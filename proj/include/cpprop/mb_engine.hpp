#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "cpprop/bloch.hpp"
#include "cpprop/pulses.hpp"
#include "cpprop/sampled_field.hpp"

namespace cpprop {

enum class Quadrature { Trapezoid, GaussLegendre };

std::string_view to_string(Quadrature q);
Quadrature parse_quadrature(std::string_view text);

/// Implicit Runge-Kutta scheme for the step in depth. Both are Gauss
/// collocation methods, so the discrete fluence change equals the excitation
/// created at the stages, and the energy balance closes to the stage
/// iteration tolerance.
enum class DepthScheme {
  Midpoint,  // one stage, second order
  Gauss4,    // two stages, fourth order
};

std::string_view to_string(DepthScheme s);
DepthScheme parse_depth_scheme(std::string_view text);

/// Flat inhomogeneous line over [-detuning_halfwidth, detuning_halfwidth] and
/// the depth/time discretisation. Depth is optical depth alpha*z.
struct MediumConfig {
  double depth_max = 12.0;
  int n_z_steps = 200;
  double detuning_halfwidth = 20.0;
  int n_detuning_channels = 0;  // 0 picks the smallest count meeting the recurrence bound
  Quadrature quadrature = Quadrature::GaussLegendre;

  /// Multiplies the coupling; 0 switches the medium off.
  double absorption = 1.0;
  /// Largest time step for sampling the incident train.
  double max_dt = 0.05;
  /// Zero-field buffer after the train, as a fraction of the train duration.
  /// The reshaped pulses grow tails several train lengths long by alpha z ~ 5,
  /// and atoms still rotate under them, so the buffer must be generous.
  double tail_buffer_fraction = 2.0;
  /// Lower bound on the whole tau window, so that runs to be compared can
  /// share one window.
  double min_window = 0.0;
  /// Atom integration: stepper and steps per sample interval.
  Stepper stepper = Stepper::Magnus4;
  int substeps = 1;
  DepthScheme depth_scheme = DepthScheme::Gauss4;
  /// Fixed-point iteration of the implicit stages. One iteration is one
  /// ensemble pass per stage.
  int max_stage_iterations = 12;
  double stage_tolerance = 1e-9;  // relative to max |Omega| of the row
  double max_norm_drift = 1e-8;
  /// Worker threads; 0 uses the hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// Rows are depths, columns retarded times tau0 + j dt.
struct FieldGrid {
  std::vector<double> z_values;
  double tau0 = 0.0;
  double dt = 0.0;
  std::size_t n_samples = 0;
  std::vector<std::complex<double>> field;  // row-major, z_values.size() * n_samples

  std::size_t n_rows() const { return z_values.size(); }
  const std::complex<double>* row_data(std::size_t i) const { return field.data() + i * n_samples; }
  SampledField row(std::size_t i) const;
  /// Index of the stored row closest to depth alpha_z.
  std::size_t nearest_row(double alpha_z) const;
};

/// Channel states at the end of the tau window for the atoms driven by each
/// stage field of each z step.
struct EnsembleStates {
  std::vector<double> detunings;
  std::vector<double> weights;
  std::vector<double> stage_weights{1.0};  // quadrature weights b_i of the depth scheme
  std::vector<double> z_stage;             // stage depths, step-major
  std::vector<AtomState> final;            // z_stage.size() * detunings.size()

  std::size_t n_channels() const { return detunings.size(); }
  std::size_t n_stages() const { return stage_weights.size(); }
  std::size_t n_steps() const { return z_stage.size() / n_stages(); }
  const AtomState& at(std::size_t step, std::size_t stage, std::size_t channel) const {
    return final[(step * n_stages() + stage) * detunings.size() + channel];
  }
};

struct RunDiagnostics {
  std::vector<double> fluence_per_z;             // one per stored row
  std::vector<double> excitation_created_per_z;  // energy moved into the atoms per step
  std::vector<double> energy_residual_per_z;     // per step, relative to the step's input fluence
  double accumulated_energy_residual = 0.0;      // relative to the incident fluence
  double max_norm_drift = 0.0;
  std::vector<int> stage_iterations;
  int n_channels = 0;
  double spectral_halfwidth = 0.0;  // HWHM of the incident power spectrum
  /// Largest |Omega| in the last 5% of the window at the deepest row, over the
  /// incident peak. Above 1e-3 a warning is issued.
  double window_edge_fraction = 0.0;
  std::vector<std::string> warnings;
};

struct PropagationResult {
  FieldGrid grid;
  EnsembleStates states;
  RunDiagnostics diagnostics;
  MediumConfig medium;  // with the automatic choices filled in
};

/// Channel detunings and quadrature weights; the weights sum to 2 * halfwidth.
void detuning_channels(const MediumConfig& medium, int n, std::vector<double>& detunings,
                       std::vector<double>& weights);

/// Smallest channel count whose largest spacing keeps the recurrence time
/// 2 pi / dDelta at least twice the window (at least 400 for Gauss-Legendre).
int auto_channel_count(const MediumConfig& medium, double window);

/// Half width at half maximum of the power spectrum (rad per unit time).
double spectral_halfwidth(const SampledField& field);

/// Marches d(Omega)/dz = i (absorption / pi) P(tau) with P = sum_m w_m conj(alpha_m) beta_m
/// through the ensemble, starting from the all-ground state at every depth.
PropagationResult propagate(const CompositePulseSpec& spec, const MediumConfig& medium);
PropagationResult propagate_field(const SampledField& incident, const MediumConfig& medium);

/// Trapezoid integral of |Omega|^2 along row z_index.
double fluence(const FieldGrid& grid, std::size_t z_index);

/// Per-step |F(z+h) - F(z) + (2 absorption / pi) h sum_i b_i sum_m w_m |beta_im(end)|^2| / F(z),
/// with i running over the stages.
std::vector<double> energy_balance(const FieldGrid& grid, const EnsembleStates& states,
                                   double absorption);

}  // namespace cpprop
