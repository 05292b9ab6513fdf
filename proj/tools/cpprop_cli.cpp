// cpprop: composite-pulse phase tables and Maxwell-Bloch propagation runs.
//
// Exit codes: 0 success, 1 a verification reported FAIL, 2 configuration
// error, 3 numerical failure, 4 I/O failure.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cpprop/errors.hpp"
#include "cpprop/phase_tables.hpp"
#include "cpprop/pipeline.hpp"
#include "cpprop/run_config.hpp"

namespace {

struct RunOptions {
  std::string config;
  std::string out;
  int threads = 0;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("-c,--config", o.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out, "output directory (overrides output.directory)");
  cmd->add_option("-j,--threads", o.threads, "worker threads (overrides CPPROP_THREADS and the config)")
      ->check(CLI::NonNegativeNumber);
}

cpprop::CommandContext make_context(const RunOptions& o) {
  cpprop::CommandContext ctx;
  ctx.config = cpprop::load_config(o.config);
  ctx.output_dir = o.out.empty() ? ctx.config.output_dir : o.out;
  ctx.threads = cpprop::resolve_thread_count(o.threads, ctx.config.medium.threads);
  ctx.log = &std::cout;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite pulses for population inversion in optically thick media"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cpprop::code_version());
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  // derive-phases
  auto* derive = app.add_subcommand("derive-phases", "solve the phase equations for an N-pulse anagram");
  int n = 5;
  std::string cls = "alternating";
  int order = -1;
  int density = 24;
  double tolerance = 1e-9;
  std::string derive_config;
  auto* n_opt = derive->add_option("-n,--n", n, "number of pulses (odd, >= 3)");
  auto* cls_opt = derive->add_option("--class", cls, "alternating | combined | detuning | uniform");
  auto* order_opt =
      derive->add_option("--order", order, "highest derivative order to cancel (default: all the free phases allow)");
  auto* density_opt =
      derive->add_option("--seed-density", density, "seed lattice points per phase")->check(CLI::PositiveNumber);
  auto* tol_opt =
      derive->add_option("--tolerance", tolerance, "residual acceptance threshold")->check(CLI::PositiveNumber);
  derive->add_option("-c,--config", derive_config, "take defaults from the config's derive section")
      ->check(CLI::ExistingFile);

  // verify-phases
  auto* verify = app.add_subcommand("verify-phases", "check shipped phase-table entries");
  std::vector<std::string> entries;
  bool all = false;
  verify->add_option("-e,--entry", entries, "entry name, e.g. U5c_2 (repeatable)");
  verify->add_flag("--all", all, "every shipped entry");

  RunOptions prop_opt, map_opt, cont_opt, area_opt, tail_opt, rep_opt;
  auto* propagate = app.add_subcommand("propagate", "Maxwell-Bloch propagation; writes field.bin");
  add_run_options(propagate, prop_opt);
  auto* perr = app.add_subcommand("perr-map", "error-probability map over (alpha z, Delta); writes map.tsv");
  add_run_options(perr, map_opt);
  auto* contours = app.add_subcommand("contours", "iso-contours of the error map");
  add_run_options(contours, cont_opt);
  std::vector<double> levels;
  contours->add_option("-l,--level", levels, "contour level (repeatable; default: analysis.levels)")
      ->check(CLI::PositiveNumber);
  auto* area = app.add_subcommand("area-theorem", "pulse area versus depth against the area theorem");
  add_run_options(area, area_opt);
  auto* tail = app.add_subcommand("tail", "duration of the transmitted tail versus depth");
  add_run_options(tail, tail_opt);
  double threshold = -1.0;
  tail->add_option("--threshold", threshold, "fraction of the incident peak (default: analysis.tail_threshold)")
      ->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "plain-text summary of widths, areas and tails");
  add_run_options(report, rep_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*derive) {
      cpprop::DeriveConfig d;
      if (!derive_config.empty()) {
        d = cpprop::load_config(derive_config).derive;
      } else if (n_opt->count() == 0) {
        throw cpprop::ConfigError("derive-phases needs --n or --config");
      }
      if (n_opt->count() > 0) d.n_pulses = n;
      if (cls_opt->count() > 0 || derive_config.empty()) d.comp_class = cpprop::parse_comp_class(cls);
      if (order_opt->count() > 0 || derive_config.empty()) d.max_order = order;
      if (density_opt->count() > 0 || derive_config.empty()) d.solve.seed_grid_density = density;
      if (tol_opt->count() > 0 || derive_config.empty()) d.solve.tolerance = tolerance;
      return cpprop::derive_phases(d, std::cout) ? 0 : 1;
    }
    if (*verify) {
      if (all) {
        entries.clear();
        for (const auto& e : cpprop::phase_table()) entries.push_back(e.name);
      }
      if (entries.empty()) throw cpprop::ConfigError("verify-phases: give --entry NAME or --all");
      return cpprop::verify_phases(entries, std::cout) ? 0 : 1;
    }
    if (*propagate) cpprop::run_propagate(make_context(prop_opt));
    if (*perr) cpprop::run_perr_map(make_context(map_opt));
    if (*contours) {
      const auto ctx = make_context(cont_opt);
      cpprop::run_contours(ctx, levels.empty() ? ctx.config.analysis.levels : levels);
    }
    if (*area) cpprop::run_area_theorem(make_context(area_opt));
    if (*tail) {
      const auto ctx = make_context(tail_opt);
      cpprop::run_tail(ctx, threshold > 0.0 ? threshold : ctx.config.analysis.tail_threshold);
    }
    if (*report) cpprop::run_report(make_context(rep_opt));
    return 0;
  } catch (const cpprop::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const cpprop::NumericalError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const cpprop::IoError& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 4;
  }
}
