#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cpprop/run_config.hpp"

namespace cpprop {

std::string code_version();

/// Identifies a run: FNV-1a over the code version and the raw config text.
std::string run_id(const RunConfig& config);

/// Worker count: the flag if positive, else CPPROP_THREADS if set, else the
/// config value (0 = hardware concurrency).
int resolve_thread_count(int flag, int config_value);

/// Phase in units of pi, as a small fraction when it is one ("5/3"),
/// otherwise with six decimals.
std::string format_pi(double radians);

/// Each command reads and writes inside output_dir and records what it wrote
/// in output_dir/manifest.json.
struct CommandContext {
  RunConfig config;
  std::string output_dir;
  int threads = 0;
  std::ostream* log = nullptr;  // human-readable summary, may be null
};

/// Returns true when the solver found the published number of roots (or
/// when no published count exists).
bool derive_phases(const DeriveConfig& derive, std::ostream& out);

/// Returns true when every named entry passes.
bool verify_phases(const std::vector<std::string>& entries, std::ostream& out);

void run_propagate(const CommandContext& ctx);
void run_perr_map(const CommandContext& ctx);
void run_contours(const CommandContext& ctx, const std::vector<double>& levels);
void run_area_theorem(const CommandContext& ctx);
void run_tail(const CommandContext& ctx, double threshold);
void run_report(const CommandContext& ctx);

}  // namespace cpprop
