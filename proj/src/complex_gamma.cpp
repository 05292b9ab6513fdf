#include "cpprop/complex_gamma.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "cpprop/errors.hpp"

namespace cpprop::special {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kShiftTarget = 12.0;

// B_{2k} / (2k (2k-1)), k = 1..8
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,         -1.0 / 360.0,          1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0,       -691.0 / 360360.0,     1.0 / 156.0,  -3617.0 / 122400.0,
};

// log Gamma(z) up to a multiple of 2 pi i, valid for Re z >= 1/2.
cplx log_gamma_right(cplx z) {
  cplx shift_product{1.0, 0.0};
  while (z.real() < kShiftTarget) {
    shift_product *= z;
    z += 1.0;
  }
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  cplx series{0.0, 0.0};
  cplx power = inv;
  for (double c : kStirling) {
    series += c * power;
    power *= inv2;
  }
  const cplx stirling = (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi) + series;
  return stirling - std::log(shift_product);
}

bool is_pole(cplx z) {
  return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

}  // namespace

cplx sin_pi(cplx z) {
  // Re z mod 2 is exact in binary floating point.
  const double x = z.real() - 2.0 * std::round(0.5 * z.real());
  return std::sin(kPi * cplx(x, z.imag()));
}

cplx gamma(cplx z) {
  if (is_pole(z)) {
    throw DomainError("gamma: pole at non-positive integer");
  }
  if (z.real() >= 0.5) {
    return std::exp(log_gamma_right(z));
  }
  return kPi / (sin_pi(z) * std::exp(log_gamma_right(1.0 - z)));
}

cplx rgamma(cplx z) {
  if (z.real() >= 0.5) {
    return std::exp(-log_gamma_right(z));
  }
  if (is_pole(z)) {
    return {0.0, 0.0};
  }
  return sin_pi(z) * std::exp(log_gamma_right(1.0 - z)) / kPi;
}

}  // namespace cpprop::special
