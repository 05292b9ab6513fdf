#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "cpprop/bloch.hpp"
#include "cpprop/mb_engine.hpp"

namespace cpprop {

/// P_err = |a|^2 on a depth x detuning lattice, row-major by depth.
struct ErrorMap {
  std::vector<double> alpha_z_values;
  std::vector<double> delta_values;
  std::vector<double> p_err;

  std::size_t n_z() const { return alpha_z_values.size(); }
  std::size_t n_delta() const { return delta_values.size(); }
  double at(std::size_t iz, std::size_t id) const { return p_err[iz * delta_values.size() + id]; }
};

struct MapOptions {
  Stepper stepper = Stepper::Magnus4;
  int substeps = 1;
  int threads = 0;  // 0: hardware concurrency
};

/// Symmetric detuning grid of n (odd) points on [-halfwidth, halfwidth],
/// uniform in asinh(Delta / scale), so it is dense near resonance and
/// contains Delta = 0.
std::vector<double> sinh_spaced_deltas(double halfwidth, int n, double scale);

/// Integrates the ground state through every stored row at every requested
/// detuning; P_err is the final ground population |alpha|^2 = |a|^2.
ErrorMap perr_map(const FieldGrid& grid, const std::vector<double>& delta_values,
                  const MapOptions& options = {});

struct ContourPoint {
  double alpha_z;
  double delta;
};

struct ContourSet {
  double level = 0.0;
  /// Each polyline is closed (first point repeated at the end) when the
  /// region closes inside the map, and open where it runs off the domain.
  std::vector<std::vector<ContourPoint>> polylines;
};

/// Marching squares on log10(P_err) - log10(level), linear interpolation along
/// cell edges. Points below the level are inside. The domain boundary is never
/// part of a contour, so a map entirely below (or above) the level gives an
/// empty set.
ContourSet extract_contours(const ErrorMap& map, double level);

/// Total Delta extent of the region enclosed by the contours at depth alpha_z
/// (sum of segments when disconnected); 0 when no contour reaches that depth.
/// Assumes the region does not touch the Delta edges of the map.
double width_at_depth(const ContourSet& contours, double alpha_z);

/// The same width read directly from the map: the row is interpolated
/// linearly in log10(P_err) between the bracketing depths and the sub-level
/// intervals are measured with linear edge crossings, as in extract_contours.
double width_at_depth(const ErrorMap& map, double level, double alpha_z);

/// Integral over alpha_z in [z_lo, z_hi] of width_at_depth(map, level, .)
/// by the trapezoid rule on the map's depth rows.
double region_area(const ErrorMap& map, double level, double z_lo, double z_hi);

/// True when P_err < level on every row with alpha_z <= target plus the first
/// row at or beyond it, at the detuning closest to delta.
bool region_reaches(const ErrorMap& map, double level, double delta, double target_alpha_z);

struct AreaPoint {
  double alpha_z;
  double area;    // |integral of Omega d tau|
  double oracle;  // area theorem from the incident area
};

/// Area theorem d(theta)/dz = -(absorption / 2) sin(theta), solved in closed
/// form: tan(theta/2) = tan(theta0/2) exp(-absorption z / 2) on each branch.
double area_theorem(double theta0, double alpha_z, double absorption = 1.0);

std::vector<AreaPoint> area_vs_depth(const FieldGrid& grid, double absorption = 1.0);

/// Length of the smallest tau interval holding every sample with
/// |Omega| > threshold_fraction * (peak |Omega| of the incident row).
double tail_window(const FieldGrid& grid, std::size_t z_index, double threshold_fraction = 1e-2);

/// Control time available before relaxation spoils the target: p_err_target * t1.
double max_control_time(double p_err_target, double t1);

struct ScalingFit {
  std::vector<double> epsilons;
  std::vector<double> p_err;
  double slope = 0.0;
};

/// Zero-depth resonant sequence with the alternating amplitude error:
/// least-squares slope of log P_err against log eps over [eps_lo, eps_hi].
ScalingFit scaling_slope(const std::vector<double>& expanded_phases, double eps_lo = 1e-2,
                         double eps_hi = 1e-1, int n_points = 9);

/// Delimited text exports (tab separated, '#' header lines).
void write_map(std::ostream& out, const ErrorMap& map);
void write_contours(std::ostream& out, const ContourSet& contours);
/// Reads what write_map wrote (rows grouped by depth, same detunings per row).
ErrorMap read_map(std::istream& in);

}  // namespace cpprop
