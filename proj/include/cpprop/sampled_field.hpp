#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cpprop {

/// Complex Rabi frequency sampled on a uniform time grid tau0 + j*dt.
struct SampledField {
  double tau0 = 0.0;
  double dt = 0.0;
  std::vector<std::complex<double>> samples;

  std::size_t size() const { return samples.size(); }
  double time_at(std::size_t j) const { return tau0 + static_cast<double>(j) * dt; }
  /// Length of the sampled window, (n - 1) * dt.
  double window() const { return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) * dt; }
  double max_abs() const;
  /// Throws ConfigError unless dt > 0, at least two samples and all finite.
  void validate() const;
};

}  // namespace cpprop
