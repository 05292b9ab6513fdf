#pragma once

#include <complex>

namespace cpprop::special {

/// Gamma function of a complex argument.
///
/// Scheme: for Re z >= 1/2 the argument is shifted upward with the recurrence
/// Gamma(z) = Gamma(z+n) / (z (z+1) ... (z+n-1)) until Re(z+n) >= 12, where an
/// 8-term Stirling series is used (truncation error < 1e-17). For Re z < 1/2
/// the reflection formula Gamma(z) Gamma(1-z) = pi / sin(pi z) is applied with
/// an exact reduction of Re z modulo 2 inside sin(pi z). Relative accuracy is
/// better than 1e-13 for |Im z| <= 100, which covers the Rosen-Zener strip
/// 1/2 + iq +- p with |q| <= 50, p in [0, 4].
///
/// Throws DomainError at the poles z = 0, -1, -2, ...
std::complex<double> gamma(std::complex<double> z);

/// 1 / Gamma(z); entire, returns exact zeros at non-positive integers.
std::complex<double> rgamma(std::complex<double> z);

/// sin(pi z) with exact argument reduction of the real part.
std::complex<double> sin_pi(std::complex<double> z);

}  // namespace cpprop::special
