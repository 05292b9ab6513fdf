#pragma once

#include <array>
#include <complex>
#include <cstddef>

namespace cpprop {

/// Truncated power series in (eps, delta): sum c_ij eps^i delta^j over
/// i <= eps_order, j <= delta_order, i + j <= total_order.
///
/// Fixed capacity so that composing thousands of propagators in the phase
/// solver does not allocate.
class Series2 {
 public:
  using cplx = std::complex<double>;
  static constexpr int kCapacity = 64;

  struct Shape {
    int eps_order = 0;
    int delta_order = 0;
    int total_order = 0;
    friend bool operator==(const Shape&, const Shape&) = default;
  };

  Series2() = default;
  explicit Series2(Shape shape);
  static Series2 constant(Shape shape, cplx value);

  const Shape& shape() const { return shape_; }
  bool contains(int i, int j) const {
    return i >= 0 && j >= 0 && i <= shape_.eps_order && j <= shape_.delta_order &&
           i + j <= shape_.total_order;
  }

  cplx& operator()(int i, int j) { return c_[index(i, j)]; }
  cplx operator()(int i, int j) const { return c_[index(i, j)]; }

  /// d^i/deps^i d^j/ddelta^j at the origin, i.e. i! j! c_ij.
  std::complex<double> derivative(int i, int j) const;

  Series2& operator+=(const Series2& o);
  Series2& operator*=(cplx s);
  friend Series2 operator+(Series2 a, const Series2& b) { return a += b; }
  friend Series2 operator*(Series2 a, cplx s) { return a *= s; }
  friend Series2 operator*(const Series2& a, const Series2& b);

  /// Accumulates a * b into *this (shapes must agree).
  void add_product(const Series2& a, const Series2& b);

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i * (shape_.delta_order + 1) + j);
  }
  Shape shape_{};
  std::array<cplx, kCapacity> c_{};
};

}  // namespace cpprop
