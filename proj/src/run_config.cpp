#include "cpprop/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "cpprop/errors.hpp"
#include "cpprop/phase_tables.hpp"

namespace cpprop {

namespace {

[[noreturn]] void fail_at(const std::string& source, const YAML::Node& node, const std::string& msg) {
  const int line = node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
  throw ConfigError(fmt::format("{}:{}: {}", source, line, msg));
}

template <class T>
T scalar(const std::string& source, const std::string& key, const YAML::Node& node) {
  if (!node.IsScalar()) fail_at(source, node, fmt::format("'{}' must be a scalar", key));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(source, node, fmt::format("'{}': cannot read '{}'", key, node.Scalar()));
  }
}

// Phase given in units of pi: "1/6", 0.847, -0.647.
double phase_pi(const std::string& source, const YAML::Node& node) {
  if (!node.IsScalar()) fail_at(source, node, "phases must be scalars (units of pi)");
  try {
    return parse_pi_multiple(node.Scalar()) * std::numbers::pi;
  } catch (const ConfigError& e) {
    fail_at(source, node, e.what());
  }
}

using Handler = std::function<void(const YAML::Node&)>;

void walk(const std::string& source, const YAML::Node& section, const std::string& name,
          const std::map<std::string, Handler>& handlers) {
  if (!section.IsMap()) fail_at(source, section, fmt::format("section '{}' must be a mapping", name));
  for (const auto& kv : section) {
    const std::string key = kv.first.as<std::string>();
    const auto it = handlers.find(key);
    if (it == handlers.end()) {
      fail_at(source, kv.first, fmt::format("unknown key '{}' in section '{}'", key, name));
    }
    it->second(kv.second);
  }
}

std::vector<double> number_list(const std::string& source, const std::string& key,
                                const YAML::Node& node) {
  std::vector<double> out;
  if (node.IsScalar()) {
    out.push_back(scalar<double>(source, key, node));
  } else if (node.IsSequence()) {
    for (const auto& v : node) out.push_back(scalar<double>(source, key, v));
  } else {
    fail_at(source, node, fmt::format("'{}' must be a number or a list", key));
  }
  return out;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.pulse.shape = PulseShape::canonical(ShapeKind::CosineSquared);
  cfg.pulse.n_pulses = 1;
  return cfg;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg = default_config();
  cfg.source = source;
  cfg.text = text;

  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) fail_at(source, root, "top level must be a mapping of sections");

  // Pulse shape first: the canonical time constant depends on kind and peak.
  ShapeKind kind = ShapeKind::CosineSquared;
  double peak = 1.0;
  std::optional<double> time_constant, truncation;
  std::optional<std::vector<double>> phases;
  std::optional<int> n_pulses;
  std::optional<std::string> entry;
  std::map<std::string, YAML::Node> sections;
  double gap = 0.0;

  for (const auto& kv : root) {
    const std::string section = kv.first.as<std::string>();
    const YAML::Node& node = kv.second;
    sections[section] = node;
    if (section == "pulse") {
      walk(source, node, section, {
          {"shape", [&](const YAML::Node& v) {
             try {
               kind = parse_shape_kind(scalar<std::string>(source, "shape", v));
             } catch (const ConfigError& e) {
               fail_at(source, v, e.what());
             }
           }},
          {"peak_rabi", [&](const YAML::Node& v) { peak = scalar<double>(source, "peak_rabi", v); }},
          {"time_constant", [&](const YAML::Node& v) { time_constant = scalar<double>(source, "time_constant", v); }},
          {"truncation_halfwidth", [&](const YAML::Node& v) {
             truncation = scalar<double>(source, "truncation_halfwidth", v);
           }},
          {"n_pulses", [&](const YAML::Node& v) { n_pulses = scalar<int>(source, "n_pulses", v); }},
          {"phases_pi", [&](const YAML::Node& v) {
             if (!v.IsSequence()) fail_at(source, v, "'phases_pi' must be a list");
             phases.emplace();
             for (const auto& p : v) phases->push_back(phase_pi(source, p));
           }},
          {"entry", [&](const YAML::Node& v) { entry = scalar<std::string>(source, "entry", v); }},
          {"gap", [&](const YAML::Node& v) { gap = scalar<double>(source, "gap", v); }},
      });
    } else if (section == "medium") {
      MediumConfig& m = cfg.medium;
      walk(source, node, section, {
          {"depth_max", [&](const YAML::Node& v) { m.depth_max = scalar<double>(source, "depth_max", v); }},
          {"n_z_steps", [&](const YAML::Node& v) { m.n_z_steps = scalar<int>(source, "n_z_steps", v); }},
          {"detuning_halfwidth", [&](const YAML::Node& v) {
             m.detuning_halfwidth = scalar<double>(source, "detuning_halfwidth", v);
           }},
          {"n_detuning_channels", [&](const YAML::Node& v) {
             m.n_detuning_channels = scalar<int>(source, "n_detuning_channels", v);
           }},
          {"quadrature", [&](const YAML::Node& v) {
             try {
               m.quadrature = parse_quadrature(scalar<std::string>(source, "quadrature", v));
             } catch (const ConfigError& e) {
               fail_at(source, v, e.what());
             }
           }},
          {"absorption", [&](const YAML::Node& v) { m.absorption = scalar<double>(source, "absorption", v); }},
          {"max_dt", [&](const YAML::Node& v) { m.max_dt = scalar<double>(source, "max_dt", v); }},
          {"tail_buffer_fraction", [&](const YAML::Node& v) {
             m.tail_buffer_fraction = scalar<double>(source, "tail_buffer_fraction", v);
           }},
          {"min_window", [&](const YAML::Node& v) { m.min_window = scalar<double>(source, "min_window", v); }},
          {"depth_scheme", [&](const YAML::Node& v) {
             try {
               m.depth_scheme = parse_depth_scheme(scalar<std::string>(source, "depth_scheme", v));
             } catch (const ConfigError& e) {
               fail_at(source, v, e.what());
             }
           }},
          {"stepper", [&](const YAML::Node& v) {
             const auto s = scalar<std::string>(source, "stepper", v);
             if (s == "magnus4") m.stepper = Stepper::Magnus4;
             else if (s == "rk4") m.stepper = Stepper::RK4;
             else fail_at(source, v, fmt::format("unknown stepper '{}' (magnus4, rk4)", s));
           }},
          {"substeps", [&](const YAML::Node& v) { m.substeps = scalar<int>(source, "substeps", v); }},
          {"max_stage_iterations", [&](const YAML::Node& v) {
             m.max_stage_iterations = scalar<int>(source, "max_stage_iterations", v);
           }},
          {"stage_tolerance", [&](const YAML::Node& v) {
             m.stage_tolerance = scalar<double>(source, "stage_tolerance", v);
           }},
          {"threads", [&](const YAML::Node& v) { m.threads = scalar<int>(source, "threads", v); }},
      });
    } else if (section == "analysis") {
      AnalysisConfig& a = cfg.analysis;
      walk(source, node, section, {
          {"delta_halfwidth", [&](const YAML::Node& v) { a.delta_halfwidth = scalar<double>(source, "delta_halfwidth", v); }},
          {"delta_points", [&](const YAML::Node& v) { a.delta_points = scalar<int>(source, "delta_points", v); }},
          {"delta_scale", [&](const YAML::Node& v) { a.delta_scale = scalar<double>(source, "delta_scale", v); }},
          {"levels", [&](const YAML::Node& v) { a.levels = number_list(source, "levels", v); }},
          {"tail_threshold", [&](const YAML::Node& v) { a.tail_threshold = scalar<double>(source, "tail_threshold", v); }},
          {"report_depths", [&](const YAML::Node& v) { a.report_depths = number_list(source, "report_depths", v); }},
          {"area_depth", [&](const YAML::Node& v) { a.area_depth = scalar<double>(source, "area_depth", v); }},
      });
    } else if (section == "derive") {
      DeriveConfig& d = cfg.derive;
      walk(source, node, section, {
          {"n_pulses", [&](const YAML::Node& v) { d.n_pulses = scalar<int>(source, "n_pulses", v); }},
          {"class", [&](const YAML::Node& v) {
             try {
               d.comp_class = parse_comp_class(scalar<std::string>(source, "class", v));
             } catch (const ConfigError& e) {
               fail_at(source, v, e.what());
             }
           }},
          {"order", [&](const YAML::Node& v) { d.max_order = scalar<int>(source, "order", v); }},
          {"seed_density", [&](const YAML::Node& v) {
             d.solve.seed_grid_density = scalar<int>(source, "seed_density", v);
           }},
          {"tolerance", [&](const YAML::Node& v) { d.solve.tolerance = scalar<double>(source, "tolerance", v); }},
      });
    } else if (section == "output") {
      walk(source, node, section, {
          {"directory", [&](const YAML::Node& v) { cfg.output_dir = scalar<std::string>(source, "directory", v); }},
      });
    } else {
      fail_at(source, kv.first, fmt::format("unknown section '{}'", section));
    }
  }

  // Assemble and validate the pulse spec.
  auto section_node = [&](const std::string& name) {
    const auto it = sections.find(name);
    return it == sections.end() ? root : it->second;
  };
  const YAML::Node where = section_node("pulse");
  try {
    PulseShape shape = PulseShape::canonical(kind, peak);
    if (time_constant) shape.time_constant = *time_constant;
    if (truncation) shape.truncation_halfwidth = *truncation;
    cfg.pulse.shape = shape;
    cfg.pulse.inter_pulse_gap = gap;
    if (entry) {
      if (phases) fail_at(source, where, "give either 'entry' or 'phases_pi', not both");
      const TableEntry& e = find_entry(*entry);
      cfg.entry = e.name;
      cfg.pulse.n_pulses = e.n_pulses();
      cfg.pulse.free_phases = e.free_phases();
      if (n_pulses && *n_pulses != e.n_pulses()) {
        fail_at(source, where, fmt::format("n_pulses = {} contradicts entry {} (N = {})", *n_pulses,
                                           e.name, e.n_pulses()));
      }
    } else {
      cfg.pulse.free_phases = phases.value_or(std::vector<double>{});
      cfg.pulse.n_pulses = n_pulses.value_or(2 * static_cast<int>(cfg.pulse.free_phases.size()) + 1);
    }
    cfg.pulse.validate();
    try {
      cfg.medium.validate();
    } catch (const ConfigError& e) {
      fail_at(source, section_node("medium"), e.what());
    }
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(source + ":", 0) == 0) throw;
    fail_at(source, where, msg);
  }

  const AnalysisConfig& a = cfg.analysis;
  const YAML::Node an = section_node("analysis");
  if (a.delta_points < 3 || a.delta_points % 2 == 0) {
    fail_at(source, an, "analysis.delta_points must be odd and >= 3");
  }
  if (!(a.delta_halfwidth > 0.0) || !(a.delta_scale > 0.0)) {
    fail_at(source, an, "analysis.delta_halfwidth and delta_scale must be > 0");
  }
  if (a.delta_halfwidth > cfg.medium.detuning_halfwidth) {
    fail_at(source, an, "analysis.delta_halfwidth exceeds the medium's detuning window");
  }
  for (double level : a.levels) {
    if (!(level > 0.0 && level < 1.0)) fail_at(source, an, "analysis.levels must lie in (0, 1)");
  }
  if (!(a.tail_threshold > 0.0 && a.tail_threshold < 1.0)) {
    fail_at(source, an, "analysis.tail_threshold must lie in (0, 1)");
  }
  if (cfg.derive.n_pulses < 3 || cfg.derive.n_pulses % 2 == 0) {
    fail_at(source, section_node("derive"), "derive.n_pulses must be odd and >= 3");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open config {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace cpprop
