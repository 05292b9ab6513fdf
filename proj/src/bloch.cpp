#include "cpprop/bloch.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

constexpr cplx kHalfI{0.0, 0.5};

// Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2 evaluated at s.
void lagrange4(double s, double w[4]) {
  w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
  w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
  w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
  w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
}

cplx interpolate(const std::vector<cplx>& f, std::size_t j, double frac) {
  const std::size_t n = f.size();
  if (frac == 0.0) return f[j];
  if (n < 4) {
    // Two or three samples: linear is all the data supports.
    return f[j] + frac * (f[j + 1] - f[j]);
  }
  // Stencil j-1 .. j+2, shifted inwards at the ends.
  std::size_t first = j == 0 ? 0 : j - 1;
  if (first + 3 >= n) first = n - 4;
  const double s = static_cast<double>(j) + frac - static_cast<double>(first) - 1.0;
  double w[4];
  lagrange4(s, w);
  return w[0] * f[first] + w[1] * f[first + 1] + w[2] * f[first + 2] + w[3] * f[first + 3];
}

[[noreturn]] void drift_error(double drift, double delta, double dt, int substeps, double t) {
  throw NumericalError(fmt::format(
      "Bloch integration: norm drift {:.3e} at t = {:.4f} (Delta = {:.4f}, dt = {:.4g}, "
      "{} substeps); reduce the time step or raise the substep count",
      drift, t, delta, dt, substeps));
}

}  // namespace

FieldInterpolant::FieldInterpolant(const SampledField& field, int substeps)
    : substeps_(substeps), t0_(field.tau0) {
  field.validate();
  if (substeps < 1) throw ConfigError("integrator: substeps must be >= 1");
  h_ = field.dt / substeps;
  const std::size_t intervals = field.size() - 1;
  const auto per = static_cast<std::size_t>(2 * substeps);
  nodes_.resize(intervals * per + 1);
  for (std::size_t j = 0; j < intervals; ++j) {
    for (std::size_t m = 0; m < per; ++m) {
      nodes_[j * per + m] = interpolate(field.samples, j, double(m) / double(per));
    }
  }
  nodes_.back() = field.samples.back();
}

MagnusField::MagnusField(const SampledField& field, int substeps)
    : substeps_(substeps), t0_(field.tau0) {
  field.validate();
  if (substeps < 1) throw ConfigError("integrator: substeps must be >= 1");
  h_ = field.dt / substeps;
  constexpr double kOff = 0.28867513459481287;  // 1 / (2 sqrt 3)
  const std::size_t intervals = field.size() - 1;
  gauss_.resize(2 * intervals * substeps);
  std::size_t k = 0;
  for (std::size_t j = 0; j < intervals; ++j) {
    for (int m = 0; m < substeps; ++m) {
      const double centre = (m + 0.5) / substeps;
      gauss_[k++] = interpolate(field.samples, j, centre - kOff / substeps);
      gauss_[k++] = interpolate(field.samples, j, centre + kOff / substeps);
    }
  }
}

AtomState integrate(const FieldInterpolant& field, double delta, AtomState initial,
                    double max_norm_drift) {
  const double n0 = initial.norm();
  const AtomState out = integrate_visit(field, delta, initial, [](std::size_t, cplx, cplx) {});
  const double drift = std::abs(out.norm() - n0);
  if (!(drift <= max_norm_drift)) {
    drift_error(drift, delta, field.step() * field.substeps(), field.substeps(),
                field.t0() + field.step() * static_cast<double>(field.n_steps()));
  }
  return out;
}

AtomState integrate(const SampledField& field, double delta, AtomState initial,
                    const IntegratorOptions& options, std::vector<AtomState>* trajectory) {
  if (options.stepper == Stepper::Magnus4) {
    const MagnusField mf(field, options.substeps);
    const double n0 = initial.norm();
    const double dt = field.dt;
    const double t0 = field.tau0;
    if (trajectory != nullptr) {
      trajectory->clear();
      trajectory->reserve(field.size());
    }
    const AtomState out = integrate_visit(mf, delta, initial, [&](std::size_t j, cplx a, cplx b) {
      if (trajectory == nullptr) return;
      const cplx phase = std::polar(1.0, -0.5 * delta * dt * static_cast<double>(j));
      trajectory->push_back({a * phase, b * phase});
    });
    const double drift = std::abs(out.norm() - n0);
    if (!(drift <= options.max_norm_drift)) {
      drift_error(drift, delta, dt, options.substeps, t0 + field.window());
    }
    return out;
  }

  const FieldInterpolant interp(field, options.substeps);
  if (options.frame == IntegrationFrame::Interaction && trajectory == nullptr) {
    return integrate(interp, delta, initial, options.max_norm_drift);
  }

  const double h = interp.step();
  const auto& f = interp.nodes();
  const std::size_t steps = interp.n_steps();
  const double n0 = initial.norm();
  const bool lab = options.frame == IntegrationFrame::Lab;
  const cplx half_turn = std::polar(1.0, 0.5 * delta * h);
  const cplx mi_delta{0.0, -delta};
  cplx a = initial.alpha;
  cplx b = initial.beta;
  if (trajectory != nullptr) {
    trajectory->clear();
    trajectory->reserve(field.size());
    trajectory->push_back(initial);
  }

  for (std::size_t k = 0; k < steps; ++k) {
    cplx k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    if (lab) {
      auto rhs = [&](cplx om, cplx x, cplx y, cplx& dx, cplx& dy) {
        dx = kHalfI * std::conj(om) * y;
        dy = kHalfI * om * x + mi_delta * y;
      };
      rhs(f[2 * k], a, b, k1a, k1b);
      rhs(f[2 * k + 1], a + 0.5 * h * k1a, b + 0.5 * h * k1b, k2a, k2b);
      rhs(f[2 * k + 1], a + 0.5 * h * k2a, b + 0.5 * h * k2b, k3a, k3b);
      rhs(f[2 * k + 2], a + h * k3a, b + h * k3b, k4a, k4b);
    } else {
      const cplx e0 = std::polar(1.0, delta * h * static_cast<double>(k));
      const cplx em = e0 * half_turn;
      const cplx e1 = em * half_turn;
      auto rhs = [&](cplx g, cplx x, cplx y, cplx& dx, cplx& dy) {
        dx = -std::conj(g) * y;
        dy = g * x;
      };
      const cplx g1 = kHalfI * f[2 * k] * e0;
      const cplx gm = kHalfI * f[2 * k + 1] * em;
      const cplx g4 = kHalfI * f[2 * k + 2] * e1;
      rhs(g1, a, b, k1a, k1b);
      rhs(gm, a + 0.5 * h * k1a, b + 0.5 * h * k1b, k2a, k2b);
      rhs(gm, a + 0.5 * h * k2a, b + 0.5 * h * k2b, k3a, k3b);
      rhs(g4, a + h * k3a, b + h * k3b, k4a, k4b);
    }
    a += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    b += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);

    const double drift = std::abs(std::norm(a) + std::norm(b) - n0);
    if (!(drift <= options.max_norm_drift)) {
      drift_error(drift, delta, field.dt, options.substeps, interp.t0() + h * double(k + 1));
    }
    if (trajectory != nullptr && (k + 1) % static_cast<std::size_t>(options.substeps) == 0) {
      const double t = h * static_cast<double>(k + 1);
      trajectory->push_back({a, lab ? b : b * std::polar(1.0, -delta * t)});
    }
  }
  const double t_total = h * static_cast<double>(steps);
  return {a, lab ? b : b * std::polar(1.0, -delta * t_total)};
}

SU2 numeric_propagator(const SampledField& field, double delta, const IntegratorOptions& options) {
  const AtomState c1 = integrate(field, delta, {{1.0, 0.0}, {0.0, 0.0}}, options);
  const AtomState c2 = integrate(field, delta, {{0.0, 0.0}, {1.0, 0.0}}, options);
  const cplx phase = std::polar(1.0, 0.5 * delta * field.window());
  const cplx a = c1.alpha * phase;
  const cplx b = c2.alpha * phase;
  // The second column must be (-conj(b), conj(a)) of the first up to rounding.
  const double mismatch = std::max(std::abs(c2.beta * phase - std::conj(a)),
                                   std::abs(c1.beta * phase + std::conj(b)));
  if (mismatch > 1e-8) {
    throw NumericalError(fmt::format(
        "numeric_propagator: columns inconsistent by {:.3e} at Delta = {:.4f}", mismatch, delta));
  }
  const double defect = std::abs(std::norm(a) + std::norm(b) - 1.0);
  DriftMonitor::record(defect);
  if (defect > SU2::kRejectTolerance) {
    throw NumericalError(fmt::format(
        "numeric_propagator: unitarity defect {:.3e} at Delta = {:.4f}", defect, delta));
  }
  return SU2(a, b);
}

}  // namespace cpprop
