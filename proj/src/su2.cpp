#include "cpprop/su2.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {
std::atomic<double> g_max_drift{0.0};
}

void DriftMonitor::record(double drift) {
  drift = std::abs(drift);
  double current = g_max_drift.load(std::memory_order_relaxed);
  while (drift > current &&
         !g_max_drift.compare_exchange_weak(current, drift, std::memory_order_relaxed)) {
  }
}

double DriftMonitor::max_drift() { return g_max_drift.load(std::memory_order_relaxed); }

void DriftMonitor::reset() { g_max_drift.store(0.0, std::memory_order_relaxed); }

SU2::SU2(cplx a, cplx b) : a_(a), b_(b) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()) || !std::isfinite(b.real()) ||
      !std::isfinite(b.imag())) {
    throw NumericalError("SU2: non-finite Cayley-Klein parameters");
  }
  const double defect = norm_defect();
  if (std::abs(defect) > kRejectTolerance) {
    throw DomainError(fmt::format("SU2: |a|^2+|b|^2-1 = {:.3e} exceeds {:.0e}", defect,
                                  kRejectTolerance));
  }
  if (std::abs(defect) > kUnitarityTolerance) {
    DriftMonitor::record(defect);
    const double scale = 1.0 / std::sqrt(1.0 + defect);
    a_ *= scale;
    b_ *= scale;
  }
}

void SU2::apply(cplx& alpha, cplx& beta) const {
  const cplx a0 = alpha;
  alpha = u11() * a0 + u12() * beta;
  beta = u21() * a0 + u22() * beta;
}

SU2 compose(const SU2& later, const SU2& earlier) {
  const cplx a = later.a() * earlier.a() - later.b() * std::conj(earlier.b());
  const cplx b = later.a() * earlier.b() + later.b() * std::conj(earlier.a());
  return {a, b};
}

double error_probability(const SU2& u) { return std::norm(u.a()); }

}  // namespace cpprop
