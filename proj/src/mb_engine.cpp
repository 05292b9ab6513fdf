#include "cpprop/mb_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>
#include <gsl/gsl_integration.h>
#include <spdlog/spdlog.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

constexpr std::size_t kBlock = 16;  // channels per reduction block

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const cplx& x : v) m = std::max(m, std::abs(x));
  return m;
}

// Largest gap between neighbouring channels.
double max_spacing(const std::vector<double>& d) {
  double s = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) s = std::max(s, d[i] - d[i - 1]);
  return s;
}

unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(block) for every block index, spread over the workers.
template <class Fn>
void parallel_blocks(std::size_t n_blocks, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        fn(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_blocks);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// One pass of the ensemble under a fixed field row.
class EnsemblePass {
 public:
  EnsemblePass(const std::vector<double>& detunings, const std::vector<double>& weights,
               const MediumConfig& medium)
      : detunings_(detunings), weights_(weights), medium_(medium) {}

  // Fills polarization (size n) and final states; returns the largest norm drift.
  double run(const SampledField& row, std::vector<cplx>& polarization,
             std::vector<AtomState>& final_states, unsigned threads) {
    if (medium_.stepper == Stepper::Magnus4) {
      const MagnusField field(row, medium_.substeps);
      return run_with(field, row.size(), polarization, final_states, threads);
    }
    const FieldInterpolant field(row, medium_.substeps);
    return run_with(field, row.size(), polarization, final_states, threads);
  }

 private:
  template <class Field>
  double run_with(const Field& field, std::size_t n, std::vector<cplx>& polarization,
                  std::vector<AtomState>& final_states, unsigned threads) {
    const std::size_t n_ch = detunings_.size();
    const std::size_t n_blocks = (n_ch + kBlock - 1) / kBlock;
    partial_.resize(n_blocks);
    std::vector<double> drift(n_blocks, 0.0);

    parallel_blocks(n_blocks, threads, [&](std::size_t blk) {
      std::vector<cplx>& acc = partial_[blk];
      acc.assign(n, cplx{});
      const std::size_t end = std::min(n_ch, (blk + 1) * kBlock);
      for (std::size_t m = blk * kBlock; m < end; ++m) {
        const double w = weights_[m];
        const AtomState out = integrate_visit(
            field, detunings_[m], AtomState{},
            [&acc, w](std::size_t j, cplx a, cplx b) { acc[j] += w * std::conj(a) * b; });
        final_states[m] = out;
        drift[blk] = std::max(drift[blk], std::abs(out.norm() - 1.0));
      }
    });

    // Fixed block order keeps the sum independent of the thread count.
    polarization.assign(n, cplx{});
    for (const auto& acc : partial_) {
      for (std::size_t j = 0; j < n; ++j) polarization[j] += acc[j];
    }
    return *std::max_element(drift.begin(), drift.end());
  }

  const std::vector<double>& detunings_;
  const std::vector<double>& weights_;
  const MediumConfig& medium_;
  std::vector<std::vector<cplx>> partial_;
};

}  // namespace

std::string_view to_string(Quadrature q) {
  return q == Quadrature::Trapezoid ? "trapezoid" : "gauss-legendre";
}

std::string_view to_string(DepthScheme s) {
  return s == DepthScheme::Midpoint ? "midpoint" : "gauss4";
}

DepthScheme parse_depth_scheme(std::string_view text) {
  if (text == "midpoint") return DepthScheme::Midpoint;
  if (text == "gauss4" || text == "gauss-legendre") return DepthScheme::Gauss4;
  throw ConfigError(fmt::format("unknown depth scheme '{}' (midpoint, gauss4)", text));
}

Quadrature parse_quadrature(std::string_view text) {
  if (text == "trapezoid") return Quadrature::Trapezoid;
  if (text == "gauss-legendre" || text == "gauss_legendre" || text == "gl") {
    return Quadrature::GaussLegendre;
  }
  throw ConfigError(fmt::format("unknown quadrature '{}' (trapezoid, gauss-legendre)", text));
}

void MediumConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("medium: " + msg); };
  if (!(depth_max >= 0.0) || !std::isfinite(depth_max)) fail("depth_max must be >= 0");
  if (n_z_steps < 1) fail("n_z_steps must be >= 1");
  if (!(detuning_halfwidth > 0.0) || !std::isfinite(detuning_halfwidth)) {
    fail("detuning_halfwidth must be > 0");
  }
  if (n_detuning_channels < 0) fail("n_detuning_channels must be >= 0 (0 = automatic)");
  if (n_detuning_channels == 1 || (quadrature == Quadrature::Trapezoid && n_detuning_channels == 2)) {
    fail("too few detuning channels");
  }
  if (!(absorption >= 0.0) || !std::isfinite(absorption)) fail("absorption must be >= 0");
  if (!(max_dt > 0.0)) fail("max_dt must be > 0");
  if (!(tail_buffer_fraction >= 0.0)) fail("tail_buffer_fraction must be >= 0");
  if (!(min_window >= 0.0) || !std::isfinite(min_window)) fail("min_window must be >= 0");
  if (substeps < 1) fail("substeps must be >= 1");
  if (max_stage_iterations < 1) fail("max_stage_iterations must be >= 1");
  if (!(stage_tolerance > 0.0)) fail("stage_tolerance must be > 0");
  if (!(max_norm_drift > 0.0)) fail("max_norm_drift must be > 0");
  if (threads < 0) fail("threads must be >= 0");
}

SampledField FieldGrid::row(std::size_t i) const {
  if (i >= n_rows()) throw ConfigError(fmt::format("field row {} out of range", i));
  SampledField f;
  f.tau0 = tau0;
  f.dt = dt;
  f.samples.assign(row_data(i), row_data(i) + n_samples);
  return f;
}

std::size_t FieldGrid::nearest_row(double alpha_z) const {
  if (z_values.empty()) throw ConfigError("empty field grid");
  std::size_t best = 0;
  for (std::size_t i = 1; i < z_values.size(); ++i) {
    if (std::abs(z_values[i] - alpha_z) < std::abs(z_values[best] - alpha_z)) best = i;
  }
  return best;
}

void detuning_channels(const MediumConfig& medium, int n, std::vector<double>& detunings,
                       std::vector<double>& weights) {
  const double hw = medium.detuning_halfwidth;
  detunings.resize(n);
  weights.resize(n);
  if (medium.quadrature == Quadrature::Trapezoid) {
    const double h = 2.0 * hw / (n - 1);
    for (int i = 0; i < n; ++i) {
      detunings[i] = -hw + h * i;
      weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
    return;
  }
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n);
  if (table == nullptr) throw NumericalError("Gauss-Legendre table allocation failed");
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(-hw, hw, i, &detunings[i], &weights[i], table);
  }
  gsl_integration_glfixed_table_free(table);
  // GSL's large-n nodes are good to ~1e-10; two Newton steps on P_n bring
  // nodes and weights to rounding level.
  for (int i = 0; i < n; ++i) {
    double x = detunings[i] / hw;
    double dp = 1.0;
    for (int it = 0; it < 2; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      x -= p1 / dp;
    }
    detunings[i] = hw * x;
    weights[i] = hw * 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // GSL returns the nodes grouped by sign; put them in ascending order.
  std::vector<std::size_t> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return detunings[a] < detunings[b]; });
  std::vector<double> d(n), w(n);
  for (int i = 0; i < n; ++i) {
    d[i] = detunings[order[i]];
    w[i] = weights[order[i]];
  }
  detunings = std::move(d);
  weights = std::move(w);
}

int auto_channel_count(const MediumConfig& medium, double window) {
  const double hw = medium.detuning_halfwidth;
  if (medium.quadrature == Quadrature::Trapezoid) {
    // spacing 2 hw / (n - 1) <= pi / window
    return std::max(3, static_cast<int>(std::ceil(1.05 * 2.0 * hw * window / std::numbers::pi)) + 1);
  }
  // Central Gauss-Legendre spacing is about pi hw / n.
  return std::max(400, static_cast<int>(std::ceil(1.05 * hw * window)));
}

double spectral_halfwidth(const SampledField& field) {
  field.validate();
  const std::size_t n = field.size();
  const std::size_t pad = 4 * n;
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(pad) * field.dt);
  const auto k_max = static_cast<long>(pad / 2);
  std::vector<double> power(2 * k_max + 1);
  for (long k = -k_max; k <= k_max; ++k) {
    const double w = dw * static_cast<double>(k);
    const cplx step = std::polar(1.0, -w * field.dt);
    cplx e{1.0, 0.0};
    cplx sum{};
    for (std::size_t j = 0; j < n; ++j) {
      if (j % 256 == 0) e = std::polar(1.0, -w * field.dt * static_cast<double>(j));
      sum += field.samples[j] * e;
      e *= step;
    }
    power[k + k_max] = std::norm(sum);
  }
  const double peak = *std::max_element(power.begin(), power.end());
  if (peak == 0.0) return 0.0;
  // Outermost half-maximum crossing on either side, interpolated between bins.
  const double half = 0.5 * peak;
  double hwhm = 0.0;
  for (long k = -k_max; k < k_max; ++k) {
    const double p0 = power[k + k_max], p1 = power[k + k_max + 1];
    if ((p0 >= half) == (p1 >= half)) continue;
    const double w = dw * (static_cast<double>(k) + (half - p0) / (p1 - p0));
    hwhm = std::max(hwhm, std::abs(w));
  }
  return hwhm;
}

double fluence(const FieldGrid& grid, std::size_t z_index) {
  if (z_index >= grid.n_rows()) throw ConfigError(fmt::format("fluence: row {} out of range", z_index));
  const cplx* r = grid.row_data(z_index);
  const std::size_t n = grid.n_samples;
  if (n < 2) return 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::norm(r[j]);
  s -= 0.5 * (std::norm(r[0]) + std::norm(r[n - 1]));
  return s * grid.dt;
}

namespace {

// sum_i b_i sum_m w_m |beta|^2 over the stage states of one step.
double stage_excitation(const EnsembleStates& states, std::size_t step) {
  double excited = 0.0;
  for (std::size_t i = 0; i < states.n_stages(); ++i) {
    double e = 0.0;
    for (std::size_t m = 0; m < states.n_channels(); ++m) {
      e += states.weights[m] * std::norm(states.at(step, i, m).beta);
    }
    excited += states.stage_weights[i] * e;
  }
  return excited;
}

}  // namespace

std::vector<double> energy_balance(const FieldGrid& grid, const EnsembleStates& states,
                                   double absorption) {
  const std::size_t steps = grid.n_rows() == 0 ? 0 : grid.n_rows() - 1;
  if (states.n_steps() != steps) {
    throw ConfigError("energy_balance: state and field grids do not match");
  }
  std::vector<double> residual(steps);
  double f0 = fluence(grid, 0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double f1 = fluence(grid, k + 1);
    const double h = grid.z_values[k + 1] - grid.z_values[k];
    const double created = 2.0 * absorption / std::numbers::pi * h * stage_excitation(states, k);
    const double r = std::abs(f1 - f0 + created);
    residual[k] = f0 > 0.0 ? r / f0 : r;
    f0 = f1;
  }
  return residual;
}

PropagationResult propagate(const CompositePulseSpec& spec, const MediumConfig& medium) {
  spec.validate();
  medium.validate();
  // Train duration first, then the buffer as a fraction of it.
  const PulseTrain probe = build_train(spec, medium.max_dt, 0.0);
  const double buffer = std::max(medium.tail_buffer_fraction * probe.train_duration,
                                 medium.min_window - probe.train_duration);
  const PulseTrain train = build_train(spec, medium.max_dt, buffer);
  return propagate_field(train.field, medium);
}

PropagationResult propagate_field(const SampledField& incident, const MediumConfig& medium_in) {
  medium_in.validate();
  incident.validate();
  PropagationResult result;
  MediumConfig& medium = result.medium;
  medium = medium_in;
  RunDiagnostics& diag = result.diagnostics;

  const std::size_t n = incident.size();
  const double window = incident.window();
  const bool automatic = medium.n_detuning_channels == 0;
  if (automatic) medium.n_detuning_channels = auto_channel_count(medium, window);
  const int n_ch = medium.n_detuning_channels;

  EnsembleStates& states = result.states;
  detuning_channels(medium, n_ch, states.detunings, states.weights);
  const double spacing = max_spacing(states.detunings);
  if (2.0 * std::numbers::pi / spacing < 2.0 * window) {
    throw ConfigError(fmt::format(
        "medium: channel spacing {:.4g} gives recurrence time {:.4g} < 2 x window {:.4g}; "
        "use at least {} channels or set n_detuning_channels = 0",
        spacing, 2.0 * std::numbers::pi / spacing, window, auto_channel_count(medium, window)));
  }
  diag.n_channels = n_ch;
  diag.spectral_halfwidth = spectral_halfwidth(incident);
  if (medium.detuning_halfwidth < 4.0 * diag.spectral_halfwidth) {
    throw ConfigError(fmt::format(
        "medium: detuning_halfwidth {:.4g} is below 4 x the incident spectral half width {:.4g}",
        medium.detuning_halfwidth, diag.spectral_halfwidth));
  }

  const int steps = medium.n_z_steps;
  const double h = medium.depth_max / steps;
  const unsigned threads = resolve_threads(medium.threads);
  const cplx coupling{0.0, medium.absorption / std::numbers::pi};

  FieldGrid& grid = result.grid;
  grid.tau0 = incident.tau0;
  grid.dt = incident.dt;
  grid.n_samples = n;
  grid.z_values.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) grid.z_values[k] = k == steps ? medium.depth_max : h * k;
  grid.field.resize(static_cast<std::size_t>(steps + 1) * n);
  std::copy(incident.samples.begin(), incident.samples.end(), grid.field.begin());

  // Butcher tableau of the depth scheme.
  std::vector<double> c, b;
  std::vector<std::vector<double>> a;
  if (medium.depth_scheme == DepthScheme::Midpoint) {
    c = {0.5};
    b = {1.0};
    a = {{0.5}};
  } else {
    const double r = std::sqrt(3.0) / 6.0;
    c = {0.5 - r, 0.5 + r};
    b = {0.5, 0.5};
    a = {{0.25, 0.25 - r}, {0.25 + r, 0.25}};
  }
  const std::size_t s = b.size();
  states.stage_weights = b;
  states.z_stage.resize(static_cast<std::size_t>(steps) * s);
  states.final.resize(static_cast<std::size_t>(steps) * s * n_ch);
  diag.stage_iterations.assign(steps, 0);

  EnsemblePass pass(states.detunings, states.weights, medium);
  std::vector<SampledField> stage(s, incident);
  std::vector<std::vector<cplx>> slope(s);  // coupling * polarization at each stage
  std::vector<std::vector<AtomState>> stage_states(s, std::vector<AtomState>(n_ch));
  std::vector<cplx> polarization;
  std::vector<cplx> next(n);

  // Stage predictor: the previous step's collocation polynomial through
  // (0, y_k-1) and (c_i, Y_i), extrapolated to 1 + c_i.
  std::vector<std::vector<double>> extrapolate(s, std::vector<double>(s + 1));
  {
    std::vector<double> nodes{0.0};
    nodes.insert(nodes.end(), c.begin(), c.end());
    for (std::size_t i = 0; i < s; ++i) {
      const double x = 1.0 + c[i];
      for (std::size_t p = 0; p <= s; ++p) {
        double l = 1.0;
        for (std::size_t q = 0; q <= s; ++q) {
          if (q != p) l *= (x - nodes[q]) / (nodes[p] - nodes[q]);
        }
        extrapolate[i][p] = l;
      }
    }
  }
  std::vector<cplx> previous;  // row k - 1
  std::vector<std::vector<cplx>> previous_stage(s);

  for (int k = 0; k < steps; ++k) {
    const cplx* cur = grid.row_data(k);
    const double scale = std::max(max_abs(std::vector<cplx>(cur, cur + n)), 1e-300);
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        cplx y = cur[j];
        if (!previous.empty()) {
          y = extrapolate[i][0] * previous[j];
          for (std::size_t p = 0; p < s; ++p) y += extrapolate[i][p + 1] * previous_stage[p][j];
        }
        stage[i].samples[j] = y;
      }
    }
    int it = 0;
    for (;;) {
      ++it;
      for (std::size_t i = 0; i < s; ++i) {
        const double drift = pass.run(stage[i], polarization, stage_states[i], threads);
        diag.max_norm_drift = std::max(diag.max_norm_drift, drift);
        if (!(drift <= medium.max_norm_drift)) {
          throw NumericalError(fmt::format(
              "propagate: channel norm drift {:.3e} at alpha z = {:.4f}; reduce max_dt or "
              "raise substeps",
              drift, h * (k + c[i])));
        }
        slope[i].resize(n);
        for (std::size_t j = 0; j < n; ++j) slope[i][j] = coupling * polarization[j];
      }
      double change = 0.0;
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          cplx y = cur[j];
          for (std::size_t p = 0; p < s; ++p) y += h * a[i][p] * slope[p][j];
          change = std::max(change, std::abs(y - stage[i].samples[j]));
          stage[i].samples[j] = y;
        }
      }
      if (change <= medium.stage_tolerance * scale || it >= medium.max_stage_iterations) break;
    }
    diag.stage_iterations[k] = it;

    for (std::size_t j = 0; j < n; ++j) {
      cplx y = cur[j];
      for (std::size_t i = 0; i < s; ++i) y += h * b[i] * slope[i][j];
      next[j] = y;
    }

    previous.assign(cur, cur + n);
    for (std::size_t i = 0; i < s; ++i) previous_stage[i] = stage[i].samples;
    cplx* out = grid.field.data() + static_cast<std::size_t>(k + 1) * n;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = next[j];
      if (!std::isfinite(out[j].real()) || !std::isfinite(out[j].imag())) {
        throw NumericalError(fmt::format("propagate: non-finite field at alpha z = {:.4f}, tau = {:.4f}",
                                         grid.z_values[k + 1], grid.tau0 + grid.dt * j));
      }
    }
    for (std::size_t i = 0; i < s; ++i) {
      states.z_stage[k * s + i] = h * (k + c[i]);
      std::copy(stage_states[i].begin(), stage_states[i].end(),
                states.final.begin() + static_cast<std::ptrdiff_t>((k * s + i) * n_ch));
    }
    spdlog::debug("propagate: step {}/{} alpha z = {:.3f}, {} stage iterations", k + 1, steps,
                  grid.z_values[k + 1], it);
  }

  diag.fluence_per_z.resize(grid.n_rows());
  for (std::size_t i = 0; i < grid.n_rows(); ++i) diag.fluence_per_z[i] = fluence(grid, i);
  diag.excitation_created_per_z.resize(steps);
  for (int k = 0; k < steps; ++k) {
    diag.excitation_created_per_z[k] =
        2.0 * medium.absorption / std::numbers::pi * h * stage_excitation(states, k);
  }
  diag.energy_residual_per_z = energy_balance(grid, states, medium.absorption);
  const double f_in = diag.fluence_per_z.front();
  double signed_sum = 0.0;
  for (int k = 0; k < steps; ++k) {
    signed_sum += diag.fluence_per_z[k + 1] - diag.fluence_per_z[k] + diag.excitation_created_per_z[k];
  }
  diag.accumulated_energy_residual = f_in > 0.0 ? std::abs(signed_sum) / f_in : std::abs(signed_sum);

  // A tail still ringing at the window end means the atoms never see part
  // of the pulse and every map row from there on is suspect.
  {
    const cplx* deepest = grid.row_data(grid.n_rows() - 1);
    const std::size_t edge = n - std::max<std::size_t>(1, n / 20);
    double tail = 0.0;
    for (std::size_t j = edge; j < n; ++j) tail = std::max(tail, std::abs(deepest[j]));
    const double peak = max_abs(incident.samples);
    diag.window_edge_fraction = peak > 0.0 ? tail / peak : 0.0;
    if (diag.window_edge_fraction > 1e-3) {
      diag.warnings.push_back(fmt::format(
          "field at alpha z = {:.4g} is still {:.2e} of the incident peak in the last 5% of the "
          "window; raise min_window",
          grid.z_values.back(), diag.window_edge_fraction));
      spdlog::warn("propagate: {}", diag.warnings.back());
    }
  }

  const SampledField last = grid.row(grid.n_rows() - 1);
  const double hw_out = spectral_halfwidth(last);
  if (medium.detuning_halfwidth < 4.0 * hw_out) {
    diag.warnings.push_back(fmt::format(
        "output spectral half width {:.4g} approaches the detuning cutoff {:.4g}", hw_out,
        medium.detuning_halfwidth));
    spdlog::warn("propagate: {}", diag.warnings.back());
  }
  return result;
}

}  // namespace cpprop
