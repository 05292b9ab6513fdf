#pragma once

#include <string>
#include <vector>

#include "cpprop/bloch.hpp"
#include "cpprop/mb_engine.hpp"
#include "cpprop/phase_solver.hpp"
#include "cpprop/pulses.hpp"

namespace cpprop {

struct AnalysisConfig {
  double delta_halfwidth = 4.0;
  int delta_points = 801;  // odd
  double delta_scale = 1e-3;
  std::vector<double> levels{1e-2, 1e-4};
  double tail_threshold = 1e-2;
  std::vector<double> report_depths{0.0, 5.0, 10.0};
  double area_depth = 10.0;  // region areas integrate over [0, area_depth]
  Stepper stepper = Stepper::Magnus4;
  int substeps = 1;
};

struct DeriveConfig {
  int n_pulses = 5;
  CompClass comp_class = CompClass::AlternatingAmplitude;
  int max_order = -1;  // -1: class default
  SolveOptions solve;
};

/// Everything a CLI run needs. Loaded from a YAML mapping with the sections
/// pulse, medium, analysis, derive and output; see configs/README.md.
struct RunConfig {
  std::string source;  // file name, for diagnostics
  std::string text;    // raw file contents; hashed into the manifest
  std::string entry;   // table entry the pulse phases came from, if any
  CompositePulseSpec pulse;
  MediumConfig medium;
  AnalysisConfig analysis;
  DeriveConfig derive;
  std::string output_dir = "out";
};

/// Parses and validates; errors are ConfigError "source:line: message".
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Default configuration (canonical cos^2 pi pulse, default medium).
RunConfig default_config();

}  // namespace cpprop
