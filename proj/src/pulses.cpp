#include "cpprop/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kSechTruncation = 10.0;
constexpr double kGaussTruncation = 6.0;
}  // namespace

double SampledField::max_abs() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, std::abs(s));
  return m;
}

void SampledField::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sampled field: dt must be positive");
  if (samples.size() < 2) throw ConfigError("sampled field: need at least two samples");
  for (const auto& s : samples) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw NumericalError("sampled field: non-finite sample");
    }
  }
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::HyperbolicSecant: return "sech";
    case ShapeKind::Gaussian: return "gaussian";
    case ShapeKind::CosineSquared: return "cos2";
    case ShapeKind::Square: return "square";
  }
  return "?";
}

ShapeKind parse_shape_kind(std::string_view text) {
  if (text == "sech" || text == "HyperbolicSecant") return ShapeKind::HyperbolicSecant;
  if (text == "gaussian" || text == "gauss" || text == "Gaussian") return ShapeKind::Gaussian;
  if (text == "cos2" || text == "CosineSquared") return ShapeKind::CosineSquared;
  if (text == "square" || text == "Square") return ShapeKind::Square;
  throw ConfigError(fmt::format("unknown pulse shape '{}'", text));
}

PulseShape PulseShape::canonical(ShapeKind kind, double peak_rabi) {
  PulseShape s;
  s.kind = kind;
  s.peak_rabi = peak_rabi;
  switch (kind) {
    case ShapeKind::HyperbolicSecant:
      s.time_constant = 1.0 / peak_rabi;
      s.truncation_halfwidth = kSechTruncation * s.time_constant;
      break;
    case ShapeKind::Gaussian:
      s.time_constant = std::sqrt(kPi / 2.0) / peak_rabi;
      s.truncation_halfwidth = kGaussTruncation * s.time_constant;
      break;
    case ShapeKind::CosineSquared:
    case ShapeKind::Square:
      s.time_constant = kPi / peak_rabi;
      break;
  }
  return s;
}

double PulseShape::support_halfwidth() const {
  switch (kind) {
    case ShapeKind::HyperbolicSecant:
    case ShapeKind::Gaussian: return truncation_halfwidth;
    case ShapeKind::CosineSquared: return time_constant;
    case ShapeKind::Square: return 0.5 * time_constant;
  }
  return 0.0;
}

double PulseShape::fwhm() const {
  switch (kind) {
    case ShapeKind::HyperbolicSecant: return 2.0 * std::acosh(2.0) * time_constant;
    case ShapeKind::Gaussian: return 2.0 * std::sqrt(2.0 * std::log(2.0)) * time_constant;
    case ShapeKind::CosineSquared:
    case ShapeKind::Square: return time_constant;
  }
  return 0.0;
}

void PulseShape::validate() const {
  if (!(peak_rabi > 0.0) || !std::isfinite(peak_rabi)) {
    throw ConfigError("pulse: peak_rabi must be positive");
  }
  if (!(time_constant > 0.0) || !std::isfinite(time_constant)) {
    throw ConfigError("pulse: time_constant must be positive");
  }
  if (kind == ShapeKind::HyperbolicSecant || kind == ShapeKind::Gaussian) {
    if (!(truncation_halfwidth > 0.0)) {
      throw ConfigError("pulse: truncation_halfwidth must be positive");
    }
    const double x = truncation_halfwidth / time_constant;
    const double cut = kind == ShapeKind::HyperbolicSecant ? 1.0 / std::cosh(x)
                                                            : std::exp(-0.5 * x * x);
    if (cut >= 1e-4) {
      throw ConfigError(fmt::format(
          "pulse: envelope at truncation is {:.2e} of peak, must be below 1e-4", cut));
    }
  }
}

std::complex<double> envelope_at(const PulseShape& shape, double phase, double t) {
  const double at = std::abs(t);
  double env = 0.0;
  switch (shape.kind) {
    case ShapeKind::HyperbolicSecant:
      if (at <= shape.truncation_halfwidth * (1.0 + 1e-12)) env = 1.0 / std::cosh(t / shape.time_constant);
      break;
    case ShapeKind::Gaussian:
      if (at <= shape.truncation_halfwidth * (1.0 + 1e-12)) {
        const double x = t / shape.time_constant;
        env = std::exp(-0.5 * x * x);
      }
      break;
    case ShapeKind::CosineSquared:
      if (at < shape.time_constant) {
        const double c = std::cos(kPi * t / (2.0 * shape.time_constant));
        env = c * c;
      }
      break;
    case ShapeKind::Square:
      if (at <= 0.5 * shape.time_constant * (1.0 + 1e-12)) env = 1.0;
      break;
  }
  if (env == 0.0) return {0.0, 0.0};
  return std::polar(shape.peak_rabi * env, phase);
}

double pulse_area(const PulseShape& shape) {
  const double T = shape.time_constant;
  const double h = shape.truncation_halfwidth;
  switch (shape.kind) {
    case ShapeKind::HyperbolicSecant:
      if (std::isinf(h)) return shape.peak_rabi * kPi * T;
      return shape.peak_rabi * 4.0 * T * std::atan(std::tanh(h / (2.0 * T)));
    case ShapeKind::Gaussian: {
      const double full = shape.peak_rabi * T * std::sqrt(2.0 * kPi);
      if (std::isinf(h)) return full;
      return full * std::erf(h / (T * std::sqrt(2.0)));
    }
    case ShapeKind::CosineSquared:
    case ShapeKind::Square: return shape.peak_rabi * T;
  }
  return 0.0;
}

std::vector<double> expand_anagram(const std::vector<double>& free_phases) {
  std::vector<double> out;
  out.reserve(2 * free_phases.size() + 1);
  out.push_back(0.0);
  out.insert(out.end(), free_phases.begin(), free_phases.end());
  if (!free_phases.empty()) {
    out.insert(out.end(), free_phases.rbegin() + 1, free_phases.rend());
    out.push_back(0.0);
  }
  return out;
}

std::vector<double> CompositePulseSpec::phases() const { return expand_anagram(free_phases); }

void CompositePulseSpec::validate() const {
  shape.validate();
  if (n_pulses < 1 || n_pulses % 2 == 0) {
    throw ConfigError(fmt::format("composite pulse: N = {} must be odd and >= 1", n_pulses));
  }
  if (static_cast<int>(free_phases.size()) * 2 + 1 != n_pulses) {
    throw ConfigError(fmt::format("composite pulse: N = {} needs {} free phases, got {}",
                                  n_pulses, (n_pulses - 1) / 2, free_phases.size()));
  }
  for (double p : free_phases) {
    if (!std::isfinite(p)) throw ConfigError("composite pulse: non-finite phase");
  }
  if (!(inter_pulse_gap >= 0.0) || !std::isfinite(inter_pulse_gap)) {
    throw ConfigError("composite pulse: inter_pulse_gap must be >= 0");
  }
}

PulseTrain build_train(const CompositePulseSpec& spec, double max_dt, double tail_buffer) {
  spec.validate();
  if (!(max_dt > 0.0)) throw ConfigError("build_train: time step must be positive");
  if (!(tail_buffer >= 0.0)) throw ConfigError("build_train: tail buffer must be >= 0");

  const PulseShape& shape = spec.shape;
  const double half = shape.support_halfwidth();
  const double steps_per_pulse = std::ceil(2.0 * half / max_dt - 1e-9);
  const double dt = 2.0 * half / steps_per_pulse;
  if (shape.fwhm() / dt < kMinSamplesPerFwhm) {
    throw ConfigError(fmt::format("build_train: {:.1f} samples per FWHM, need at least {}",
                                  shape.fwhm() / dt, kMinSamplesPerFwhm));
  }

  const auto phases = spec.phases();
  const int n = spec.n_pulses;
  PulseTrain train;
  train.train_duration = n * 2.0 * half + (n - 1) * spec.inter_pulse_gap;
  for (int k = 0; k < n; ++k) {
    train.centers.push_back(half + k * (2.0 * half + spec.inter_pulse_gap));
  }

  const double total = train.train_duration + tail_buffer;
  const auto n_samples = static_cast<std::size_t>(std::ceil(total / dt - 1e-9)) + 1;
  train.field.tau0 = 0.0;
  train.field.dt = dt;
  train.field.samples.assign(n_samples, {0.0, 0.0});

  const bool back_to_back = spec.inter_pulse_gap == 0.0;
  const auto steps = static_cast<std::size_t>(steps_per_pulse);
  for (int k = 0; k < n; ++k) {
    const double c = train.centers[k];
    // index of the first sample of pulse k; exact when pulses are back to back
    const std::size_t start =
        back_to_back ? static_cast<std::size_t>(k) * steps
                     : static_cast<std::size_t>(std::max(0.0, std::floor((c - half) / dt - 1e-9)));
    const std::size_t stop = std::min(n_samples - 1, start + steps + (back_to_back ? 0 : 2));
    for (std::size_t j = start; j <= stop; ++j) {
      const double t = back_to_back
                           ? (static_cast<double>(j - start) - 0.5 * steps_per_pulse) * dt
                           : static_cast<double>(j) * dt - c;
      auto v = envelope_at(shape, phases[k], t);
      if (back_to_back && ((j == start && k > 0) || (j == start + steps && k + 1 < n))) {
        v *= 0.5;
      }
      train.field.samples[j] += v;
    }
  }
  return train;
}

}  // namespace cpprop
