#include "cpprop/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cpprop/analytic_models.hpp"
#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

void fill_row(const FieldGrid& grid, std::size_t iz, const std::vector<double>& deltas,
              const MapOptions& options, double* out) {
  const SampledField row = grid.row(iz);
  auto evaluate = [&](const auto& field) {
    for (std::size_t id = 0; id < deltas.size(); ++id) {
      const AtomState s = integrate_visit(field, deltas[id], AtomState{}, [](std::size_t, cplx, cplx) {});
      const double p = std::norm(s.alpha);
      const double drift = std::abs(s.norm() - 1.0);
      if (!std::isfinite(p) || drift > 1e-8) {
        throw NumericalError(fmt::format(
            "perr_map: integration failed at alpha z = {:.4f}, Delta = {:.6g} (norm drift {:.3e})",
            grid.z_values[iz], deltas[id], drift));
      }
      out[id] = std::min(p, 1.0);
    }
  };
  if (options.stepper == Stepper::Magnus4) {
    evaluate(MagnusField(row, options.substeps));
  } else {
    evaluate(FieldInterpolant(row, options.substeps));
  }
}

// log10(P / level), with P floored so that exact zeros stay finite.
double level_offset(double p, double level) {
  return std::log10(std::max(p, 1e-300)) - std::log10(level);
}

// Sub-level length along one line of offsets g over the abscissae x.
double sublevel_length(const std::vector<double>& x, const std::vector<double>& g) {
  double total = 0.0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const bool in0 = g[j] < 0.0;
    const bool in1 = g[j + 1] < 0.0;
    const double len = x[j + 1] - x[j];
    if (in0 && in1) {
      total += len;
    } else if (in0 != in1) {
      const double t = g[j] / (g[j] - g[j + 1]);
      total += in0 ? t * len : (1.0 - t) * len;
    }
  }
  return total;
}

}  // namespace

std::vector<double> sinh_spaced_deltas(double halfwidth, int n, double scale) {
  if (n < 3 || n % 2 == 0) throw ConfigError("sinh_spaced_deltas: n must be odd and >= 3");
  if (!(halfwidth > 0.0) || !(scale > 0.0)) {
    throw ConfigError("sinh_spaced_deltas: halfwidth and scale must be > 0");
  }
  const double u_max = std::asinh(halfwidth / scale);
  const int half = n / 2;
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    const int k = i - half;
    d[i] = k == 0 ? 0.0 : scale * std::sinh(u_max * k / half);
  }
  d.front() = -halfwidth;
  d.back() = halfwidth;
  return d;
}

ErrorMap perr_map(const FieldGrid& grid, const std::vector<double>& delta_values,
                  const MapOptions& options) {
  if (grid.n_rows() == 0 || grid.n_samples < 2) throw ConfigError("perr_map: empty field grid");
  if (delta_values.empty()) throw ConfigError("perr_map: no detuning values");
  for (double d : delta_values) {
    if (!std::isfinite(d)) throw ConfigError("perr_map: non-finite detuning");
  }
  if (options.substeps < 1) throw ConfigError("perr_map: substeps must be >= 1");
  ErrorMap map;
  map.alpha_z_values = grid.z_values;
  map.delta_values = delta_values;
  map.p_err.assign(grid.n_rows() * delta_values.size(), 0.0);

  const std::size_t rows = grid.n_rows();
  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, rows));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t iz = next.fetch_add(1);
      if (iz >= rows) return;
      try {
        fill_row(grid, iz, delta_values, options, map.p_err.data() + iz * delta_values.size());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(rows);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return map;
}

double width_at_depth(const ErrorMap& map, double level, double alpha_z) {
  const auto& z = map.alpha_z_values;
  if (z.empty() || alpha_z < z.front() || alpha_z > z.back()) return 0.0;
  std::size_t i = 0;
  while (i + 1 < z.size() && z[i + 1] < alpha_z) ++i;
  const std::size_t i1 = std::min(i + 1, z.size() - 1);
  const double t = (i1 == i || z[i1] == z[i]) ? 0.0 : (alpha_z - z[i]) / (z[i1] - z[i]);
  std::vector<double> g(map.n_delta());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double g0 = level_offset(map.at(i, j), level);
    g[j] = t == 0.0 ? g0 : (1.0 - t) * g0 + t * level_offset(map.at(i1, j), level);
  }
  return sublevel_length(map.delta_values, g);
}

double region_area(const ErrorMap& map, double level, double z_lo, double z_hi) {
  if (!(z_hi > z_lo)) return 0.0;
  std::vector<double> zs{z_lo};
  for (double z : map.alpha_z_values) {
    if (z > z_lo && z < z_hi) zs.push_back(z);
  }
  zs.push_back(z_hi);
  double area = 0.0;
  double w_prev = width_at_depth(map, level, zs[0]);
  for (std::size_t k = 1; k < zs.size(); ++k) {
    const double w = width_at_depth(map, level, zs[k]);
    area += 0.5 * (w + w_prev) * (zs[k] - zs[k - 1]);
    w_prev = w;
  }
  return area;
}

bool region_reaches(const ErrorMap& map, double level, double delta, double target_alpha_z) {
  if (map.n_z() == 0 || map.n_delta() == 0) return false;
  std::size_t jd = 0;
  for (std::size_t j = 1; j < map.n_delta(); ++j) {
    if (std::abs(map.delta_values[j] - delta) < std::abs(map.delta_values[jd] - delta)) jd = j;
  }
  for (std::size_t i = 0; i < map.n_z(); ++i) {
    if (!(map.at(i, jd) < level)) return false;
    if (map.alpha_z_values[i] >= target_alpha_z) return true;
  }
  return false;  // the map stops short of the target depth
}

double area_theorem(double theta0, double alpha_z, double absorption) {
  // Fixed points at multiples of pi: even ones attract, odd ones repel.
  const double two_pi = 2.0 * std::numbers::pi;
  const double k = std::round(theta0 / two_pi);
  const double rel = theta0 - two_pi * k;  // in [-pi, pi]
  if (std::abs(std::abs(rel) - std::numbers::pi) < 1e-15) return theta0;
  return two_pi * k + 2.0 * std::atan(std::tan(0.5 * rel) * std::exp(-0.5 * absorption * alpha_z));
}

std::vector<AreaPoint> area_vs_depth(const FieldGrid& grid, double absorption) {
  std::vector<AreaPoint> out;
  out.reserve(grid.n_rows());
  double theta0 = 0.0;
  for (std::size_t i = 0; i < grid.n_rows(); ++i) {
    const cplx* r = grid.row_data(i);
    cplx s{};
    for (std::size_t j = 0; j < grid.n_samples; ++j) s += r[j];
    if (grid.n_samples > 0) s -= 0.5 * (r[0] + r[grid.n_samples - 1]);
    const double area = std::abs(s) * grid.dt;
    if (i == 0) theta0 = area;
    out.push_back({grid.z_values[i], area, area_theorem(theta0, grid.z_values[i], absorption)});
  }
  return out;
}

double tail_window(const FieldGrid& grid, std::size_t z_index, double threshold_fraction) {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw ConfigError("tail_window: threshold_fraction must lie in (0, 1)");
  }
  if (z_index >= grid.n_rows()) throw ConfigError(fmt::format("tail_window: row {} out of range", z_index));
  double peak = 0.0;
  for (std::size_t j = 0; j < grid.n_samples; ++j) peak = std::max(peak, std::abs(grid.row_data(0)[j]));
  const double threshold = threshold_fraction * peak;
  const cplx* r = grid.row_data(z_index);
  std::size_t first = grid.n_samples;
  std::size_t last = 0;
  for (std::size_t j = 0; j < grid.n_samples; ++j) {
    if (std::abs(r[j]) > threshold) {
      first = std::min(first, j);
      last = j;
    }
  }
  if (first == grid.n_samples) return 0.0;
  return static_cast<double>(last - first) * grid.dt;
}

double max_control_time(double p_err_target, double t1) {
  if (!(p_err_target > 0.0) || !(t1 > 0.0)) {
    throw ConfigError("max_control_time: inputs must be positive");
  }
  return p_err_target * t1;
}

ScalingFit scaling_slope(const std::vector<double>& expanded_phases, double eps_lo, double eps_hi,
                         int n_points) {
  if (!(eps_lo > 0.0 && eps_hi > eps_lo) || n_points < 2) {
    throw ConfigError("scaling_slope: need 0 < eps_lo < eps_hi and at least two points");
  }
  ScalingFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < n_points; ++k) {
    const double eps = eps_lo * std::pow(eps_hi / eps_lo, double(k) / (n_points - 1));
    const double p =
        std::norm(composed_a(expanded_phases, {ErrorKind::Alternating, eps}, 0.0, PulseModel::Resonant));
    fit.epsilons.push_back(eps);
    fit.p_err.push_back(p);
    const double x = std::log(eps);
    const double y = std::log(p);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = n_points;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

void write_map(std::ostream& out, const ErrorMap& map) {
  out << "# alpha_z\tdelta\tp_err\n";
  for (std::size_t i = 0; i < map.n_z(); ++i) {
    for (std::size_t j = 0; j < map.n_delta(); ++j) {
      fmt::print(out, "{}\t{}\t{}\n", map.alpha_z_values[i], map.delta_values[j],
                 map.at(i, j));
    }
  }
}

void write_contours(std::ostream& out, const ContourSet& contours) {
  fmt::print(out, "# level {:.6g}\n# polyline\talpha_z\tdelta\n", contours.level);
  for (std::size_t k = 0; k < contours.polylines.size(); ++k) {
    for (const ContourPoint& p : contours.polylines[k]) {
      fmt::print(out, "{}\t{}\t{}\n", k, p.alpha_z, p.delta);
    }
  }
}

ErrorMap read_map(std::istream& in) {
  ErrorMap map;
  std::string line;
  std::size_t line_no = 0;
  double last_z = std::nan("");
  std::size_t in_row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double z, d, p;
    if (!(ss >> z >> d >> p)) throw IoError(fmt::format("map line {}: expected alpha_z, delta, p_err", line_no));
    if (map.alpha_z_values.empty() || z != last_z) {
      if (!map.alpha_z_values.empty() && in_row != map.delta_values.size()) {
        throw IoError(fmt::format("map line {}: ragged row", line_no));
      }
      map.alpha_z_values.push_back(z);
      last_z = z;
      in_row = 0;
    }
    if (map.alpha_z_values.size() == 1) {
      map.delta_values.push_back(d);
    } else if (in_row >= map.delta_values.size() || map.delta_values[in_row] != d) {
      throw IoError(fmt::format("map line {}: detuning grid differs between rows", line_no));
    }
    ++in_row;
    map.p_err.push_back(p);
  }
  if (!map.alpha_z_values.empty() && in_row != map.delta_values.size()) {
    throw IoError("map: ragged last row");
  }
  return map;
}

}  // namespace cpprop
