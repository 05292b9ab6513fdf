#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "cpprop/complex_gamma.hpp"
#include "cpprop/errors.hpp"
#include "cpprop/su2.hpp"
#include "oracle_values.hpp"

using cpprop::cplx;
using cpprop::SU2;

namespace {

SU2 random_su2(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  cplx a{g(rng), g(rng)}, b{g(rng), g(rng)};
  const double n = std::sqrt(std::norm(a) + std::norm(b));
  return {a / n, b / n};
}

}  // namespace

TEST(SU2, IdentityAndApply) {
  const SU2 u = SU2::identity();
  cplx alpha{0.6, 0.0}, beta{0.0, 0.8};
  u.apply(alpha, beta);
  EXPECT_EQ(alpha, cplx(0.6, 0.0));
  EXPECT_EQ(beta, cplx(0.0, 0.8));
}

TEST(SU2, RejectsLargeDefectAndRenormalizesSmallOne) {
  EXPECT_THROW(SU2(cplx{1.0, 0.0}, cplx{1e-4, 0.0}), cpprop::DomainError);
  EXPECT_THROW(SU2(cplx{NAN, 0.0}, cplx{0.0, 0.0}), cpprop::NumericalError);
  const SU2 u(cplx{1.0 + 2e-10, 0.0}, cplx{0.0, 0.0});
  EXPECT_LT(std::abs(u.norm_defect()), 1e-15);
}

TEST(SU2, CompositionIsAssociativeAndUnitary) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const SU2 x = random_su2(rng), y = random_su2(rng), z = random_su2(rng);
    const SU2 l = compose(compose(x, y), z);
    const SU2 r = compose(x, compose(y, z));
    EXPECT_NEAR(std::abs(l.a() - r.a()), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(l.b() - r.b()), 0.0, 1e-14);
    EXPECT_LT(std::abs(l.norm_defect()), 1e-12);
  }
}

TEST(SU2, ComposeMatchesMatrixProduct) {
  std::mt19937_64 rng(11);
  const SU2 x = random_su2(rng), y = random_su2(rng);
  const SU2 p = compose(x, y);
  // Columns of y applied through x.
  cplx a0{1.0, 0.0}, b0{0.0, 0.0};
  y.apply(a0, b0);
  x.apply(a0, b0);
  EXPECT_NEAR(std::abs(a0 - p.u11()), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b0 - p.u21()), 0.0, 1e-15);
  EXPECT_NEAR(cpprop::error_probability(p), std::norm(p.a()), 0.0);
}

TEST(ComplexGamma, MatchesHighPrecisionReference) {
  for (const auto& c : oracle::kGamma) {
    const cplx g = cpprop::special::gamma(c.z);
    EXPECT_LT(std::abs(g - c.value), 1e-13 * std::abs(c.value)) << "z = " << c.z;
  }
}

TEST(ComplexGamma, RecurrenceAndReflection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(-4.5, 6.0), im(-40.0, 40.0);
  for (int i = 0; i < 300; ++i) {
    const cplx z{re(rng), im(rng)};
    const cplx lhs = cpprop::special::gamma(z + 1.0);
    const cplx rhs = z * cpprop::special::gamma(z);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::abs(lhs)) << z;
    const cplx refl = cpprop::special::gamma(z) * cpprop::special::gamma(1.0 - z) *
                      cpprop::special::sin_pi(z);
    EXPECT_LT(std::abs(refl - std::numbers::pi), 1e-11 * std::numbers::pi) << z;
  }
}

TEST(ComplexGamma, PolesThrowAndReciprocalVanishes) {
  EXPECT_THROW(cpprop::special::gamma(cplx{0.0, 0.0}), cpprop::DomainError);
  EXPECT_THROW(cpprop::special::gamma(cplx{-3.0, 0.0}), cpprop::DomainError);
  EXPECT_EQ(cpprop::special::rgamma(cplx{-2.0, 0.0}), cplx(0.0, 0.0));
  EXPECT_NEAR(std::abs(cpprop::special::rgamma(cplx{1.0, 0.0}) - 1.0), 0.0, 1e-14);
}
