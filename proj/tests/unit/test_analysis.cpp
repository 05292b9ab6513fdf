#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "cpprop/analysis.hpp"
#include "cpprop/analytic_models.hpp"
#include "cpprop/errors.hpp"
#include "cpprop/pulses.hpp"
#include "oracle_values.hpp"

using namespace cpprop;

namespace {

constexpr double kPi = std::numbers::pi;

double w_of(double z) { return 1.0 - 0.05 * z; }

// log10 P = -6 + |Delta| / w(z): the 1e-4 contour sits at |Delta| = 2 w(z).
ErrorMap wedge_map(int n_delta = 401) {
  ErrorMap m;
  for (int i = 0; i <= 10; ++i) m.alpha_z_values.push_back(i);
  for (int j = 0; j < n_delta; ++j) m.delta_values.push_back(-4.0 + 8.0 * j / (n_delta - 1));
  for (double z : m.alpha_z_values) {
    for (double d : m.delta_values) m.p_err.push_back(std::pow(10.0, -6.0 + std::abs(d) / w_of(z)));
  }
  return m;
}

double interpolated_log(const ErrorMap& m, double z, double d) {
  // Bilinear in log10 P on the map grid.
  std::size_t i = 0;
  while (i + 2 < m.n_z() && m.alpha_z_values[i + 1] <= z) ++i;
  std::size_t j = 0;
  while (j + 2 < m.n_delta() && m.delta_values[j + 1] <= d) ++j;
  const double tz = (z - m.alpha_z_values[i]) / (m.alpha_z_values[i + 1] - m.alpha_z_values[i]);
  const double td = (d - m.delta_values[j]) / (m.delta_values[j + 1] - m.delta_values[j]);
  auto l = [&](std::size_t a, std::size_t b) { return std::log10(m.at(a, b)); };
  return (1 - tz) * ((1 - td) * l(i, j) + td * l(i, j + 1)) + tz * ((1 - td) * l(i + 1, j) + td * l(i + 1, j + 1));
}

}  // namespace

TEST(Analysis, SinhSpacing) {
  const auto d = sinh_spaced_deltas(4.0, 201, 1e-3);
  ASSERT_EQ(d.size(), 201u);
  EXPECT_EQ(d[100], 0.0);
  EXPECT_NEAR(d.front(), -4.0, 1e-12);
  EXPECT_NEAR(d.back(), 4.0, 1e-12);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_GT(d[i], d[i - 1]);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], -d[d.size() - 1 - i]);
  EXPECT_LT(d[101], 1e-3);
  EXPECT_THROW(sinh_spaced_deltas(4.0, 200, 1e-3), ConfigError);
}

TEST(Analysis, ContourWidthsOnWedge) {
  const ErrorMap m = wedge_map();
  const ContourSet c = extract_contours(m, 1e-4);
  ASSERT_FALSE(c.polylines.empty());
  for (int z = 0; z <= 10; ++z) {
    EXPECT_NEAR(width_at_depth(c, z), 4.0 * w_of(z), 1e-9) << z;
    EXPECT_NEAR(width_at_depth(m, 1e-4, z), 4.0 * w_of(z), 1e-9) << z;
  }
  // Between rows the map is interpolated linearly in log10 P.
  const double z = 4.5;
  const double inv = 0.5 * (1.0 / w_of(4.0) + 1.0 / w_of(5.0));
  EXPECT_NEAR(width_at_depth(m, 1e-4, z), 4.0 / inv, 1e-9);
}

TEST(Analysis, ContourPointsLieOnTheLevel) {
  const ErrorMap m = wedge_map(101);
  const ContourSet c = extract_contours(m, 1e-4);
  std::size_t points = 0;
  for (const auto& line : c.polylines) {
    for (const auto& p : line) {
      EXPECT_NEAR(interpolated_log(m, p.alpha_z, p.delta), -4.0, 1e-9);
      ++points;
    }
  }
  EXPECT_GT(points, 20u);
}

TEST(Analysis, RegionAreaAndReach) {
  const ErrorMap m = wedge_map();
  EXPECT_NEAR(region_area(m, 1e-4, 0.0, 10.0), 30.0, 1e-8);
  EXPECT_NEAR(region_area(m, 1e-4, 0.0, 5.0), 4.0 * (5.0 - 0.025 * 25.0), 1e-8);
  EXPECT_TRUE(region_reaches(m, 1e-4, 0.0, 10.0));
  EXPECT_FALSE(region_reaches(m, 1e-7, 0.0, 1.0));
  // Raise P at Delta = 0 above the level from alpha z = 6 on.
  ErrorMap broken = m;
  for (std::size_t i = 6; i < broken.n_z(); ++i) {
    for (std::size_t j = 0; j < broken.n_delta(); ++j) broken.p_err[i * broken.n_delta() + j] = 0.5;
  }
  EXPECT_FALSE(region_reaches(broken, 1e-4, 0.0, 10.0));
  EXPECT_TRUE(region_reaches(broken, 1e-4, 0.0, 5.0));
}

TEST(Analysis, DisconnectedSublevelSetsAddUp) {
  ErrorMap m;
  m.alpha_z_values = {0.0, 1.0};
  for (int j = 0; j < 801; ++j) m.delta_values.push_back(-4.0 + 0.01 * j);
  for (int i = 0; i < 2; ++i) {
    for (double d : m.delta_values) {
      // Two wells of half-width 0.5 around Delta = -2 and +2.
      const double x = std::min(std::abs(d - 2.0), std::abs(d + 2.0));
      m.p_err.push_back(std::pow(10.0, -6.0 + 4.0 * x));
    }
  }
  EXPECT_NEAR(width_at_depth(m, 1e-4, 0.5), 2.0, 1e-9);
  EXPECT_NEAR(width_at_depth(extract_contours(m, 1e-4), 0.0), 2.0, 1e-9);
}

TEST(Analysis, AreaTheoremMatchesIntegratedOde) {
  for (const auto& c : oracle::kArea) {
    EXPECT_NEAR(area_theorem(c.theta0, c.alpha_z), c.theta, 1e-12) << c.theta0 << " " << c.alpha_z;
  }
  EXPECT_NEAR(area_theorem(1.0, 2.0, 0.5), area_theorem(1.0, 1.0), 1e-15);
}

TEST(Analysis, ScalingLaw) {
  const auto u3a = scaling_slope(expand_anagram({kPi / 3}));
  EXPECT_NEAR(u3a.slope, 6.0, 0.2);
  const auto u5a2 = scaling_slope(expand_anagram({kPi / 5, 8 * kPi / 5}));
  EXPECT_NEAR(u5a2.slope, 10.0, 0.2);
  EXPECT_NEAR(scaling_slope({0.0}).slope, 2.0, 0.05);
}

TEST(Analysis, PerrMapOfSquarePulseMatchesClosedForm) {
  FieldGrid g;
  g.z_values = {0.0};
  g.dt = kPi / 1000;
  g.n_samples = 1001;
  g.field.assign(g.n_samples, {1.0, 0.0});
  const std::vector<double> deltas{-1.0, -0.2, 0.0, 0.5};
  const ErrorMap m = perr_map(g, deltas);
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const SU2 u = square_pulse_propagator(1.0, kPi, deltas[j], 0.0);
    EXPECT_NEAR(m.at(0, j), std::norm(u.a()), 1e-10);
  }
}

TEST(Analysis, TailWindow) {
  FieldGrid g;
  g.z_values = {0.0, 1.0};
  g.dt = 0.1;
  g.n_samples = 101;
  g.field.assign(2 * g.n_samples, {0.0, 0.0});
  g.field[10] = 1.0;
  g.field[20] = 0.5;
  g.field[g.n_samples + 30] = 0.02;
  g.field[g.n_samples + 70] = 0.011;
  g.field[g.n_samples + 90] = 0.009;  // below 1% of the incident peak
  EXPECT_NEAR(tail_window(g, 0, 0.01), 1.0, 1e-12);
  EXPECT_NEAR(tail_window(g, 1, 0.01), 4.0, 1e-12);
}

TEST(Analysis, MaxControlTime) { EXPECT_DOUBLE_EQ(max_control_time(1e-4, 1e6), 100.0); }

TEST(Analysis, MapRoundTrip) {
  ErrorMap m = wedge_map(11);
  m.p_err[3] = 0.1 + 1e-17;
  std::stringstream ss;
  write_map(ss, m);
  const ErrorMap r = read_map(ss);
  EXPECT_EQ(r.alpha_z_values, m.alpha_z_values);
  EXPECT_EQ(r.delta_values, m.delta_values);
  EXPECT_EQ(r.p_err, m.p_err);
  std::stringstream bad("# header\n0\t0\t1e-3\n0\t1\n");
  EXPECT_THROW(read_map(bad), IoError);
}
