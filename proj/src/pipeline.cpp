#include "cpprop/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "cpprop/analysis.hpp"
#include "cpprop/errors.hpp"
#include "cpprop/field_io.hpp"
#include "cpprop/phase_tables.hpp"

#ifndef CPPROP_VERSION
#define CPPROP_VERSION "0.0.0"
#endif

namespace cpprop {

namespace fs = std::filesystem;

namespace {

constexpr const char* kField = "field.bin";
constexpr const char* kMap = "map.tsv";
constexpr const char* kManifest = "manifest.json";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir, ec.message()));
}

// Adds (or refreshes) one output in the manifest.
void record(const CommandContext& ctx, const std::string& command, const std::string& file) {
  const fs::path path = fs::path(ctx.output_dir) / kManifest;
  const std::string id = run_id(ctx.config);
  nlohmann::json m = nlohmann::json::object();
  if (fs::exists(path)) {
    try {
      m = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception&) {
      m = nlohmann::json::object();
    }
    if (m.value("run_id", "") != id) m = nlohmann::json::object();
  }
  m["run_id"] = id;
  m["code_version"] = code_version();
  m["config_hash"] = fnv1a_hex(ctx.config.text);
  m["config_source"] = ctx.config.source;
  const MediumConfig& med = ctx.config.medium;
  m["medium"] = {{"depth_max", med.depth_max},
                 {"n_z_steps", med.n_z_steps},
                 {"detuning_halfwidth", med.detuning_halfwidth},
                 {"n_detuning_channels", med.n_detuning_channels},
                 {"quadrature", std::string(to_string(med.quadrature))},
                 {"max_dt", med.max_dt},
                 {"tail_buffer_fraction", med.tail_buffer_fraction},
                 {"min_window", med.min_window}};
  if (!file.empty()) {
    m["files"][file] = {{"command", command},
                        {"fnv1a", fnv1a_hex(read_file(fs::path(ctx.output_dir) / file))}};
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << m.dump(2) << '\n';
}

std::string header(const CommandContext& ctx) {
  return fmt::format("# cpprop {} run {}\n", code_version(), run_id(ctx.config));
}

void write_text(const CommandContext& ctx, const std::string& command, const std::string& name,
                const std::string& body) {
  ensure_dir(ctx.output_dir);
  const fs::path path = fs::path(ctx.output_dir) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << header(ctx) << body;
  out.close();
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
  record(ctx, command, name);
}

FieldGrid load_field(const CommandContext& ctx) {
  const fs::path path = fs::path(ctx.output_dir) / kField;
  if (!fs::exists(path)) {
    throw IoError(fmt::format("{} not found; run 'propagate' with this config first", path.string()));
  }
  FieldFile f = read_field_grid(path.string());
  const std::string id = f.header.value("meta", nlohmann::json::object()).value("run_id", "");
  if (id != run_id(ctx.config)) {
    spdlog::warn("{} was written by run {}, not {}", path.string(), id, run_id(ctx.config));
  }
  return std::move(f.grid);
}

ErrorMap compute_map(const CommandContext& ctx, const FieldGrid& grid) {
  const AnalysisConfig& a = ctx.config.analysis;
  MapOptions opt;
  opt.stepper = a.stepper;
  opt.substeps = a.substeps;
  opt.threads = ctx.threads;
  return perr_map(grid, sinh_spaced_deltas(a.delta_halfwidth, a.delta_points, a.delta_scale), opt);
}

ErrorMap load_or_compute_map(const CommandContext& ctx) {
  const fs::path path = fs::path(ctx.output_dir) / kMap;
  if (fs::exists(path)) {
    std::ifstream in(path);
    return read_map(in);
  }
  spdlog::info("{} missing; computing the map", path.string());
  return compute_map(ctx, load_field(ctx));
}

std::string level_tag(double level) { return fmt::format("{:.0e}", level); }

}  // namespace

std::string code_version() { return CPPROP_VERSION; }

std::string run_id(const RunConfig& config) {
  return fnv1a_hex(code_version() + "\n" + config.text);
}

int resolve_thread_count(int flag, int config_value) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("CPPROP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) {
      throw ConfigError(fmt::format("CPPROP_THREADS must be a non-negative integer, got '{}'", env));
    }
    if (v > 0) return static_cast<int>(v);
  }
  return config_value;
}

std::string format_pi(double radians) {
  double x = radians / std::numbers::pi;
  for (int q = 1; q <= 12; ++q) {
    const double p = std::round(x * q);
    if (std::abs(x * q - p) < 1e-7) {
      const long pi = static_cast<long>(p);
      if (q == 1) return fmt::format("{}", pi);
      // Reduce only when q is the smallest denominator, which the loop ensures.
      return fmt::format("{}/{}", pi, q);
    }
  }
  return fmt::format("{:.6f}", x);
}

bool derive_phases(const DeriveConfig& derive, std::ostream& out) {
  const int order = derive.max_order > 0 ? derive.max_order
                                         : default_max_order(derive.comp_class, derive.n_pulses);
  const SolveReport rep = solve(derive.n_pulses, derive.comp_class, order, derive.solve);
  fmt::print(out, "# N = {}, class {}, order {}: {} sequence(s)", derive.n_pulses,
             to_string(derive.comp_class), order, rep.sequences.size());
  if (rep.expected_count >= 0) fmt::print(out, " (published: {})", rep.expected_count);
  fmt::print(out, "\n# seeds {}, polished {}, converged {}\n", rep.seeds, rep.polished, rep.converged);
  if (rep.seed_density_warning) out << "# warning: seed density may be too low for this N\n";
  for (std::size_t k = 0; k < rep.sequences.size(); ++k) {
    const PhaseSequence& s = rep.sequences[k];
    std::string phases;
    for (double p : s.free_phases) phases += (phases.empty() ? "" : "  ") + format_pi(p);
    fmt::print(out, "{}\tphases/pi: {}\tresidual {:.2e}\n", k + 1, phases, s.residual_norm);
  }
  return rep.expected_count < 0 || static_cast<int>(rep.sequences.size()) == rep.expected_count;
}

bool verify_phases(const std::vector<std::string>& entries, std::ostream& out) {
  bool all = true;
  for (const std::string& name : entries) {
    const TableVerification v = verify_table(name);
    all = all && v.pass;
    if (v.exact) {
      fmt::print(out, "{:<7} {}  exact    residual {:.2e} (order {})\n", v.name,
                 v.pass ? "PASS" : "FAIL", v.root_residual, v.max_order);
    } else {
      fmt::print(out, "{:<7} {}  decimal  root residual {:.2e}, printed-vs-root {:.2e} rad (allowed {:.2e})\n",
                 v.name, v.pass ? "PASS" : "FAIL", v.root_residual, v.max_phase_deviation,
                 v.allowed_phase_deviation);
    }
  }
  return all;
}

void run_propagate(const CommandContext& ctx) {
  MediumConfig medium = ctx.config.medium;
  medium.threads = ctx.threads;
  const PropagationResult r = propagate(ctx.config.pulse, medium);
  ensure_dir(ctx.output_dir);

  nlohmann::json meta;
  meta["run_id"] = run_id(ctx.config);
  meta["config_hash"] = fnv1a_hex(ctx.config.text);
  meta["code_version"] = code_version();
  meta["n_detuning_channels"] = r.diagnostics.n_channels;
  meta["quadrature"] = std::string(to_string(r.medium.quadrature));
  meta["detuning_halfwidth"] = r.medium.detuning_halfwidth;
  write_field_grid((fs::path(ctx.output_dir) / kField).string(), r.grid, meta);
  record(ctx, "propagate", kField);

  const RunDiagnostics& d = r.diagnostics;
  std::string body = fmt::format(
      "# channels {}\tspectral_halfwidth {}\tmax_norm_drift {}\taccumulated_energy_residual {}\t"
      "window_edge_fraction {}\n",
      d.n_channels, d.spectral_halfwidth, d.max_norm_drift, d.accumulated_energy_residual,
      d.window_edge_fraction);
  for (const std::string& w : d.warnings) body += "# warning: " + w + "\n";
  body += "# alpha_z\tfluence\texcitation_created\tenergy_residual\tstage_iterations\n";
  for (std::size_t i = 0; i < r.grid.n_rows(); ++i) {
    if (i == 0) {
      body += fmt::format("{}\t{}\t0\t0\t0\n", r.grid.z_values[0], d.fluence_per_z[0]);
    } else {
      body += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.grid.z_values[i], d.fluence_per_z[i],
                          d.excitation_created_per_z[i - 1], d.energy_residual_per_z[i - 1],
                          d.stage_iterations[i - 1]);
    }
  }
  write_text(ctx, "propagate", "diagnostics.tsv", body);
  if (ctx.log) {
    double worst = 0.0;
    for (double x : d.energy_residual_per_z) worst = std::max(worst, x);
    fmt::print(*ctx.log,
               "propagated {} rows x {} samples with {} channels; energy residual max {:.2e} per "
               "step, {:.2e} accumulated\n",
               r.grid.n_rows(), r.grid.n_samples, d.n_channels, worst, d.accumulated_energy_residual);
  }
}

void run_perr_map(const CommandContext& ctx) {
  const ErrorMap map = compute_map(ctx, load_field(ctx));
  std::ostringstream ss;
  write_map(ss, map);
  write_text(ctx, "perr-map", kMap, ss.str());
  if (ctx.log) fmt::print(*ctx.log, "wrote {} x {} error map\n", map.n_z(), map.n_delta());
}

void run_contours(const CommandContext& ctx, const std::vector<double>& levels) {
  const ErrorMap map = load_or_compute_map(ctx);
  for (double level : levels) {
    const ContourSet c = extract_contours(map, level);
    std::ostringstream ss;
    write_contours(ss, c);
    const std::string name = "contours_" + level_tag(level) + ".tsv";
    write_text(ctx, "contours", name, ss.str());
    if (ctx.log) {
      fmt::print(*ctx.log, "level {:.0e}: {} polyline(s), width at alpha z = 0: {:.5g}\n", level,
                 c.polylines.size(), width_at_depth(c, map.alpha_z_values.front()));
    }
  }
}

void run_area_theorem(const CommandContext& ctx) {
  const FieldGrid grid = load_field(ctx);
  const auto points = area_vs_depth(grid, ctx.config.medium.absorption);
  std::string body = "# alpha_z\tarea\tarea_theorem\n";
  for (const AreaPoint& p : points) body += fmt::format("{}\t{}\t{}\n", p.alpha_z, p.area, p.oracle);
  write_text(ctx, "area-theorem", "area.tsv", body);
}

void run_tail(const CommandContext& ctx, double threshold) {
  const FieldGrid grid = load_field(ctx);
  std::string body = fmt::format("# threshold_fraction {}\n# alpha_z\ttail_window\n", threshold);
  for (std::size_t i = 0; i < grid.n_rows(); ++i) {
    body += fmt::format("{}\t{}\n", grid.z_values[i], tail_window(grid, i, threshold));
  }
  write_text(ctx, "tail", "tail.tsv", body);
}

void run_report(const CommandContext& ctx) {
  const FieldGrid grid = load_field(ctx);
  const ErrorMap map = load_or_compute_map(ctx);
  const AnalysisConfig& a = ctx.config.analysis;
  std::string body;
  body += fmt::format("pulse: {} x {}", ctx.config.pulse.n_pulses, to_string(ctx.config.pulse.shape.kind));
  if (!ctx.config.entry.empty()) body += fmt::format(" ({})", ctx.config.entry);
  std::string phases;
  for (double p : ctx.config.pulse.free_phases) phases += (phases.empty() ? "" : ", ") + format_pi(p);
  body += fmt::format("; free phases/pi: [{}]\n", phases);
  body += fmt::format("grid: {} depth rows to alpha z = {}, {} samples, dt = {}, window = {}\n",
                      grid.n_rows(), grid.z_values.back(), grid.n_samples, grid.dt,
                      grid.dt * static_cast<double>(grid.n_samples - 1));
  for (double level : a.levels) {
    const ContourSet c = extract_contours(map, level);
    body += fmt::format("level {:.0e}:\n", level);
    for (double z : a.report_depths) {
      body += fmt::format("  width at alpha z = {:<5} {:.6g}\n", z, width_at_depth(c, z));
    }
    body += fmt::format("  region area over [0, {}]: {:.6g}\n", a.area_depth,
                        region_area(map, level, 0.0, a.area_depth));
    body += fmt::format("  reaches alpha z = {} at Delta = 0: {}\n", a.area_depth,
                        region_reaches(map, level, 0.0, a.area_depth) ? "yes" : "no");
  }
  body += fmt::format("tail window (threshold {}):\n", a.tail_threshold);
  for (double z : a.report_depths) {
    if (z > grid.z_values.back()) continue;
    const std::size_t i = grid.nearest_row(z);
    body += fmt::format("  alpha z = {:<7.4g} {:.6g}\n", grid.z_values[i], tail_window(grid, i, a.tail_threshold));
  }
  write_text(ctx, "report", "report.txt", body);
  if (ctx.log) *ctx.log << body;
}

}  // namespace cpprop
