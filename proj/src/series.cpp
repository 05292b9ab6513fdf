#include "cpprop/series.hpp"

#include <cmath>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {
double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}
}  // namespace

Series2::Series2(Shape shape) : shape_(shape) {
  if (shape.eps_order < 0 || shape.delta_order < 0 || shape.total_order < 0 ||
      (shape.eps_order + 1) * (shape.delta_order + 1) > kCapacity) {
    throw ConfigError("Series2: order exceeds capacity");
  }
}

Series2 Series2::constant(Shape shape, cplx value) {
  Series2 s(shape);
  s(0, 0) = value;
  return s;
}

std::complex<double> Series2::derivative(int i, int j) const {
  if (!contains(i, j)) return {0.0, 0.0};
  return (*this)(i, j) * (factorial(i) * factorial(j));
}

Series2& Series2::operator+=(const Series2& o) {
  for (int k = 0; k < kCapacity; ++k) c_[k] += o.c_[k];
  return *this;
}

Series2& Series2::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

void Series2::add_product(const Series2& a, const Series2& b) {
  const Shape& s = shape_;
  for (int i1 = 0; i1 <= s.eps_order; ++i1) {
    for (int j1 = 0; j1 <= s.delta_order && i1 + j1 <= s.total_order; ++j1) {
      const cplx x = a(i1, j1);
      if (x == cplx{}) continue;
      const double xr = x.real(), xi = x.imag();
      for (int i2 = 0; i1 + i2 <= s.eps_order; ++i2) {
        for (int j2 = 0; j1 + j2 <= s.delta_order && i1 + i2 + j1 + j2 <= s.total_order; ++j2) {
          // Written out to avoid the NaN-recovery path of complex operator*.
          const cplx y = b(i2, j2);
          cplx& out = (*this)(i1 + i2, j1 + j2);
          out = {out.real() + xr * y.real() - xi * y.imag(), out.imag() + xr * y.imag() + xi * y.real()};
        }
      }
    }
  }
}

Series2 operator*(const Series2& a, const Series2& b) {
  Series2 out(a.shape());
  out.add_product(a, b);
  return out;
}

}  // namespace cpprop
