#include "cpprop/analytic_models.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "cpprop/complex_gamma.hpp"
#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

// Single-pulse matrix without its carrier phase:
// U = [[u11, b0 e^{i s phi}], [c0 e^{-i s phi}, u22]] with s = phase_sign(model).
struct Entries {
  cplx u11, b0, c0, u22;
};

int phase_sign(PulseModel model) { return model == PulseModel::Square ? -1 : 1; }

Entries rosen_zener_entries(cplx p, cplx q) {
  using special::gamma;
  using special::rgamma;
  const cplx zp = 0.5 + kI * q;
  const cplx zm = 0.5 - kI * q;
  const cplx gp = gamma(zp);
  const cplx gm = gamma(zm);
  Entries e;
  e.u11 = gp * gp * rgamma(zp - p) * rgamma(zp + p);
  e.u22 = gm * gm * rgamma(zm - p) * rgamma(zm + p);
  e.b0 = kI * special::sin_pi(p) / std::cosh(kPi * q);
  e.c0 = e.b0;
  return e;
}

// cos(x) and sin(x)/w for x = w tau / 2, both even in w and so single-valued
// functions of w^2.
void square_core(cplx w2, double tau, cplx& c, cplx& s_over_w) {
  const cplx w = std::sqrt(w2);
  const cplx x = 0.5 * tau * w;
  if (std::abs(x) < 1e-4) {
    const cplx x2 = x * x;
    c = 1.0 - x2 / 2.0 + x2 * x2 / 24.0;
    s_over_w = 0.5 * tau * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
  } else {
    c = std::cos(x);
    s_over_w = std::sin(x) / w;
  }
}

Entries square_entries(cplx omega0, double tau, cplx delta) {
  cplx c, s;
  square_core(omega0 * omega0 + delta * delta, tau, c, s);
  Entries e;
  e.u11 = c + kI * delta * s;
  e.u22 = c - kI * delta * s;
  e.b0 = kI * omega0 * s;
  e.c0 = e.b0;
  return e;
}

// Entries at relative amplitude error e and detuning delta (both may be
// complex; the Cauchy jets evaluate off the real axis).
Entries model_entries(PulseModel model, cplx e, cplx delta) {
  switch (model) {
    case PulseModel::Resonant: {
      const cplx half = 0.5 * (kPi + e);
      return {std::cos(half), kI * std::sin(half), kI * std::sin(half), std::cos(half)};
    }
    case PulseModel::RosenZener: return rosen_zener_entries(0.5 * (1.0 + e), 0.5 * delta);
    case PulseModel::Square: return square_entries(1.0 + e, kPi, delta);
  }
  return {};
}

SU2 with_phase(const Entries& e, double phase, int sign) {
  return SU2(e.u11, e.b0 * std::polar(1.0, sign * phase));
}

}  // namespace

std::string_view to_string(PulseModel model) {
  switch (model) {
    case PulseModel::Resonant: return "resonant";
    case PulseModel::RosenZener: return "rosen-zener";
    case PulseModel::Square: return "square";
  }
  return "?";
}

SU2 resonant_propagator(double area, double phase) {
  return SU2(std::cos(0.5 * area), kI * std::sin(0.5 * area) * std::polar(1.0, phase));
}

SU2 rosen_zener_propagator(double p, double q, double phase) {
  if (!std::isfinite(p) || !std::isfinite(q) || !std::isfinite(phase)) {
    throw DomainError("rosen_zener_propagator: non-finite argument");
  }
  if (p < 0.0) throw DomainError(fmt::format("rosen_zener_propagator: p = {} < 0", p));
  return with_phase(rosen_zener_entries(p, q), phase, 1);
}

SU2 square_pulse_propagator(double omega0, double duration, double delta, double phase) {
  if (!(duration > 0.0)) throw ConfigError("square_pulse_propagator: duration must be > 0");
  return with_phase(square_entries(omega0, duration, delta), phase, -1);
}

SU2 composed_propagator(const std::vector<double>& phases, const ErrorModel& model, double delta,
                        PulseModel pulse_model) {
  if (pulse_model == PulseModel::Resonant && delta != 0.0) {
    throw ConfigError("composed_propagator: the resonant model is only defined at delta = 0");
  }
  SU2 u;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    const double e = model.error_of(static_cast<int>(k) + 1);
    const Entries ent = model_entries(pulse_model, e, delta);
    u = compose(with_phase(ent, phases[k], phase_sign(pulse_model)), u);
  }
  return u;
}

std::complex<double> composed_a(const std::vector<double>& phases, const ErrorModel& model,
                                double delta, PulseModel pulse_model) {
  return composed_propagator(phases, model, delta, pulse_model).a();
}

// ---------------------------------------------------------------------------
// Taylor jets

namespace {

constexpr int kCauchyPoints = 32;

// Radius of the Cauchy circle in the delta plane. The Rosen-Zener entries
// have poles at delta = +-i (Gamma(1/2 +- iq) and 1/cosh(pi q)), so the
// circle stays well inside; aliasing is (1/4)^32. Resonant and square
// entries are entire.
double delta_radius(PulseModel model) { return model == PulseModel::RosenZener ? 0.25 : 1.0; }
constexpr double kEpsRadius = 1.0;

}  // namespace

ComposedTaylor::ComposedTaylor(PulseModel model, ErrorKind error, Series2::Shape shape)
    : model_(model), error_(error), shape_(shape), phase_sign_(phase_sign(model)) {
  if (model == PulseModel::Resonant && shape.delta_order > 0) {
    throw ConfigError("ComposedTaylor: the resonant model has no detuning dependence");
  }
  (void)Series2(shape);  // validates capacity

  const int ne = shape.eps_order > 0 ? kCauchyPoints : 1;
  const int nd = shape.delta_order > 0 ? kCauchyPoints : 1;
  const double re = kEpsRadius;
  const double rd = delta_radius(model);

  for (int sign = -1; sign <= 1; ++sign) {
    Jet& jet = jets_[sign + 1];
    jet = {Series2(shape), Series2(shape), Series2(shape), Series2(shape)};
    if (model == PulseModel::Resonant) {
      // cos((pi + s e)/2) = -sin(x), sin((pi + s e)/2) = cos(x), x = s e / 2;
      // the coefficients are known exactly.
      const double h = 0.5 * sign;
      double term = 1.0;  // h^i / i!
      for (int i = 0; i <= shape.eps_order; ++i) {
        const double sgn = (i / 2) % 2 == 0 ? 1.0 : -1.0;
        if (i % 2 == 1) {
          jet.u11(i, 0) = -sgn * term;
          jet.u22(i, 0) = -sgn * term;
        } else {
          jet.b0(i, 0) = {0.0, sgn * term};
          jet.c0(i, 0) = {0.0, sgn * term};
        }
        term *= h / (i + 1);
      }
      continue;
    }
    // Samples on the torus |eps| = re, |delta| = rd.
    std::vector<Entries> f(static_cast<std::size_t>(ne * nd));
    for (int m = 0; m < ne; ++m) {
      const cplx eps = ne > 1 ? std::polar(re, 2.0 * kPi * m / ne) : cplx{};
      for (int n = 0; n < nd; ++n) {
        const cplx del = nd > 1 ? std::polar(rd, 2.0 * kPi * n / nd) : cplx{};
        f[static_cast<std::size_t>(m * nd + n)] = model_entries(model, double(sign) * eps, del);
      }
    }
    for (int i = 0; i <= shape.eps_order; ++i) {
      for (int j = 0; j <= shape.delta_order && i + j <= shape.total_order; ++j) {
        Entries acc{};
        for (int m = 0; m < ne; ++m) {
          for (int n = 0; n < nd; ++n) {
            const double ang = -2.0 * kPi * (double(i * m) / ne + double(j * n) / nd);
            const cplx w = std::polar(1.0, ang);
            const Entries& e = f[static_cast<std::size_t>(m * nd + n)];
            acc.u11 += e.u11 * w;
            acc.b0 += e.b0 * w;
            acc.c0 += e.c0 * w;
            acc.u22 += e.u22 * w;
          }
        }
        const double scale = 1.0 / (double(ne * nd) * std::pow(re, i) * std::pow(rd, j));
        jet.u11(i, j) = acc.u11 * scale;
        jet.b0(i, j) = acc.b0 * scale;
        jet.c0(i, j) = acc.c0 * scale;
        jet.u22(i, j) = acc.u22 * scale;
      }
    }
  }
}

const ComposedTaylor::Jet& ComposedTaylor::jet_for(int k) const {
  return jets_[ErrorModel::sign(error_, k) + 1];
}

Series2 ComposedTaylor::a_series(const std::vector<double>& phases) const {
  // Row vector e1^T U_N ... U_1, accumulated from the left.
  Series2 r0 = Series2::constant(shape_, 1.0);
  Series2 r1(shape_);
  for (int k = static_cast<int>(phases.size()); k >= 1; --k) {
    const Jet& jet = jet_for(k);
    const cplx ep = std::polar(1.0, phase_sign_ * phases[k - 1]);
    const Series2 u12 = jet.b0 * ep;
    const Series2 u21 = jet.c0 * std::conj(ep);
    Series2 n0 = r0 * jet.u11;
    n0.add_product(r1, u21);
    if (k == 1) return n0;
    Series2 n1 = r0 * u12;
    n1.add_product(r1, jet.u22);
    r0 = n0;
    r1 = n1;
  }
  return r0;
}

Series2 ComposedTaylor::a_series_free(const std::vector<double>& free_phases,
                                      std::vector<Series2>* grad) const {
  const std::vector<double> phases = [&] {
    std::vector<double> out{0.0};
    out.insert(out.end(), free_phases.begin(), free_phases.end());
    if (!free_phases.empty()) {
      out.insert(out.end(), free_phases.rbegin() + 1, free_phases.rend());
      out.push_back(0.0);
    }
    return out;
  }();
  if (grad == nullptr) return a_series(phases);

  const int n_pulses = static_cast<int>(phases.size());
  const int n_free = static_cast<int>(free_phases.size());
  struct Pulse {
    Series2 u11, u12, u21, u22;
  };
  std::vector<Pulse> u(static_cast<std::size_t>(n_pulses));
  for (int k = 1; k <= n_pulses; ++k) {
    const Jet& jet = jet_for(k);
    const cplx ep = std::polar(1.0, phase_sign_ * phases[k - 1]);
    u[k - 1] = {jet.u11, jet.b0 * ep, jet.c0 * std::conj(ep), jet.u22};
  }

  // Column vectors R_k = U_{k-1} ... U_1 e1 and row vectors L_k = e1^T U_N ... U_{k+1}.
  std::vector<std::array<Series2, 2>> right(static_cast<std::size_t>(n_pulses));
  std::vector<std::array<Series2, 2>> left(static_cast<std::size_t>(n_pulses));
  right[0] = {Series2::constant(shape_, 1.0), Series2(shape_)};
  for (int k = 1; k < n_pulses; ++k) {
    const Pulse& p = u[k - 1];
    const auto& r = right[k - 1];
    Series2 c0 = p.u11 * r[0];
    c0.add_product(p.u12, r[1]);
    Series2 c1 = p.u21 * r[0];
    c1.add_product(p.u22, r[1]);
    right[k] = {c0, c1};
  }
  left[n_pulses - 1] = {Series2::constant(shape_, 1.0), Series2(shape_)};
  for (int k = n_pulses - 2; k >= 0; --k) {
    const Pulse& p = u[k + 1];
    const auto& l = left[k + 1];
    Series2 r0 = l[0] * p.u11;
    r0.add_product(l[1], p.u21);
    Series2 r1 = l[0] * p.u12;
    r1.add_product(l[1], p.u22);
    left[k] = {r0, r1};
  }

  grad->assign(static_cast<std::size_t>(n_free), Series2(shape_));
  const cplx is{0.0, double(phase_sign_)};
  for (int k = 2; k < n_pulses; ++k) {
    // d U_k / d phi_k has off-diagonals i s U12 and -i s U21.
    const Pulse& p = u[k - 1];
    const auto& l = left[k - 1];
    const auto& r = right[k - 1];
    Series2 d = (l[0] * p.u12) * r[1] * is;
    d += (l[1] * p.u21) * r[0] * (-is);
    const int mirror = std::min(k, n_pulses + 1 - k);
    (*grad)[static_cast<std::size_t>(mirror - 2)] += d;
  }

  const Pulse& p = u[0];
  Series2 a = left[0][0] * p.u11;
  a.add_product(left[0][1], p.u21);
  return a;
}

}  // namespace cpprop
