#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "cpprop/errors.hpp"
#include "cpprop/field_io.hpp"
#include "cpprop/pipeline.hpp"
#include "cpprop/run_config.hpp"

using namespace cpprop;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cpprop_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "t.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

constexpr const char* kTiny = R"(pulse:
  shape: cos2
  entry: U3c
medium:
  depth_max: 0.5
  n_z_steps: 4
  tail_buffer_fraction: 0.5
analysis:
  delta_points: 21
  levels: [1.0e-2]
  report_depths: [0, 0.5]
  area_depth: 0.5
)";

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(FieldIo, RoundTripIsExact) {
  FieldGrid g;
  g.z_values = {0.0, 0.25};
  g.tau0 = -1.5;
  g.dt = 0.125;
  g.n_samples = 3;
  g.field = {{1, 2}, {3, 4}, {5, 6}, {-1e-300, 7}, {0.1, -0.2}, {1e300, 0}};
  const fs::path dir = scratch_dir("field");
  const std::string path = (dir / "f.bin").string();
  write_field_grid(path, g, {{"run_id", "abc"}});
  const FieldFile f = read_field_grid(path);
  EXPECT_EQ(f.grid.z_values, g.z_values);
  EXPECT_EQ(f.grid.tau0, g.tau0);
  EXPECT_EQ(f.grid.dt, g.dt);
  EXPECT_EQ(f.grid.field, g.field);
  EXPECT_EQ(f.header["meta"]["run_id"], "abc");
  EXPECT_EQ(slurp(path).substr(0, 8), "CPPROPFG");
}

TEST(FieldIo, RejectsCorruptFiles) {
  const fs::path dir = scratch_dir("corrupt");
  std::ofstream(dir / "bad.bin") << "NOTAFIELDFILE";
  EXPECT_THROW(read_field_grid((dir / "bad.bin").string()), IoError);
  EXPECT_THROW(read_field_grid((dir / "missing.bin").string()), IoError);
  FieldGrid g;
  g.z_values = {0.0};
  g.dt = 1.0;
  g.n_samples = 2;
  g.field = {{1, 0}, {2, 0}};
  write_field_grid((dir / "ok.bin").string(), g);
  std::string bytes = slurp(dir / "ok.bin");
  bytes.resize(bytes.size() - 8);
  std::ofstream(dir / "short.bin", std::ios::binary) << bytes;
  EXPECT_THROW(read_field_grid((dir / "short.bin").string()), IoError);
}

TEST(RunConfig, ParsesFullSchema) {
  const RunConfig c = parse_config(R"(pulse:
  shape: gaussian
  peak_rabi: 2.0
  n_pulses: 5
  phases_pi: ["1/6", 1.6666666666666667]
  gap: 0.5
medium:
  depth_max: 3
  n_z_steps: 30
  quadrature: trapezoid
  stepper: rk4
  substeps: 2
  min_window: 40
analysis:
  levels: [1.0e-3]
derive:
  n_pulses: 7
  class: combined
output:
  directory: somewhere
)", "x.yaml");
  EXPECT_EQ(c.pulse.shape.kind, ShapeKind::Gaussian);
  EXPECT_EQ(c.pulse.n_pulses, 5);
  ASSERT_EQ(c.pulse.free_phases.size(), 2u);
  EXPECT_NEAR(c.pulse.free_phases[0], std::numbers::pi / 6, 1e-15);
  EXPECT_NEAR(c.pulse.free_phases[1], 5 * std::numbers::pi / 3, 1e-14);
  EXPECT_EQ(c.pulse.inter_pulse_gap, 0.5);
  EXPECT_EQ(c.medium.quadrature, Quadrature::Trapezoid);
  EXPECT_EQ(c.medium.stepper, Stepper::RK4);
  EXPECT_EQ(c.medium.min_window, 40.0);
  EXPECT_EQ(c.analysis.levels, std::vector<double>{1e-3});
  EXPECT_EQ(c.derive.comp_class, CompClass::CombinedSech);
  EXPECT_EQ(c.output_dir, "somewhere");
}

TEST(RunConfig, EntryResolvesFromTables) {
  const RunConfig c = parse_config("pulse:\n  entry: U9c_1\n");
  EXPECT_EQ(c.entry, "U9c_1");
  EXPECT_EQ(c.pulse.n_pulses, 9);
  EXPECT_EQ(c.pulse.free_phases.size(), 4u);
}

TEST(RunConfig, DiagnosticsCarryLineNumbers) {
  EXPECT_EQ(config_error("pulse:\n  shape: cos2\n  colour: red\n").rfind("t.yaml:3:", 0), 0u)
      << config_error("pulse:\n  shape: cos2\n  colour: red\n");
  EXPECT_NE(config_error("medium:\n  n_z_steps: many\n").find("t.yaml:2:"), std::string::npos);
  EXPECT_NE(config_error("pulse:\n  entry: U5c_2\n  phases_pi: [0.1, 0.2]\n").find("either"),
            std::string::npos);
  EXPECT_NE(config_error("pulse:\n  n_pulses: 4\n").find("t.yaml:"), std::string::npos);
  EXPECT_NE(config_error("plot:\n  colour: red\n").find("unknown section"), std::string::npos);
  EXPECT_NE(config_error("pulse: [1, 2\n").find("t.yaml"), std::string::npos);
  EXPECT_NE(config_error("analysis:\n  delta_points: 10\n").find("odd"), std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/x.yaml"), IoError);
}

TEST(Pipeline, FormatsPhasesAsFractionsOfPi) {
  EXPECT_EQ(format_pi(std::numbers::pi / 3), "1/3");
  EXPECT_EQ(format_pi(8 * std::numbers::pi / 5), "8/5");
  EXPECT_EQ(format_pi(0.0), "0");
  EXPECT_EQ(format_pi(0.2708 * std::numbers::pi), "0.270800");
}

TEST(Pipeline, ThreadPrecedence) {
  ::unsetenv("CPPROP_THREADS");
  EXPECT_EQ(resolve_thread_count(0, 3), 3);
  ::setenv("CPPROP_THREADS", "2", 1);
  EXPECT_EQ(resolve_thread_count(0, 3), 2);
  EXPECT_EQ(resolve_thread_count(5, 3), 5);
  ::setenv("CPPROP_THREADS", "two", 1);
  EXPECT_THROW(resolve_thread_count(0, 3), ConfigError);
  ::unsetenv("CPPROP_THREADS");
}

TEST(Pipeline, DerivesAndVerifies) {
  std::ostringstream out;
  DeriveConfig d;
  d.n_pulses = 5;
  d.max_order = 3;
  EXPECT_TRUE(derive_phases(d, out));
  EXPECT_NE(out.str().find("3/5  4/5"), std::string::npos) << out.str();
  EXPECT_NE(out.str().find("1/5  8/5"), std::string::npos);
  std::ostringstream v;
  EXPECT_TRUE(verify_phases({"U5c_2", "U3a"}, v));
  EXPECT_NE(v.str().find("PASS"), std::string::npos);
}

TEST(Pipeline, RunsAreReproducibleAndCrossReferenced) {
  const fs::path dir = scratch_dir("pipeline");
  CommandContext ctx;
  ctx.config = parse_config(kTiny, "tiny.yaml");
  ctx.output_dir = dir.string();
  ctx.threads = 1;
  auto run_all = [&] {
    run_propagate(ctx);
    run_perr_map(ctx);
    run_contours(ctx, {1e-2});
    run_area_theorem(ctx);
    run_tail(ctx, 1e-2);
    run_report(ctx);
  };
  run_all();
  const std::vector<std::string> text_files{"diagnostics.tsv", "map.tsv", "contours_1e-02.tsv",
                                            "area.tsv", "tail.tsv", "report.txt"};
  std::map<std::string, std::string> first;
  const std::string id = run_id(ctx.config);
  for (const auto& f : text_files) {
    first[f] = slurp(dir / f);
    EXPECT_EQ(first[f].rfind("# cpprop " + code_version() + " run " + id + "\n", 0), 0u) << f;
  }
  first["field.bin"] = slurp(dir / "field.bin");
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["run_id"], id);
  EXPECT_EQ(manifest["config_hash"], fnv1a_hex(kTiny));
  for (const auto& [name, bytes] : first) {
    EXPECT_EQ(manifest["files"][name]["fnv1a"], fnv1a_hex(bytes)) << name;
  }
  EXPECT_EQ(read_field_grid((dir / "field.bin").string()).header["meta"]["run_id"], id);

  ctx.threads = 2;
  run_all();
  for (const auto& [name, bytes] : first) EXPECT_EQ(slurp(dir / name), bytes) << name;
}

TEST(Pipeline, MissingFieldIsAnIoError) {
  CommandContext ctx;
  ctx.config = parse_config(kTiny);
  ctx.output_dir = scratch_dir("nofield").string();
  EXPECT_THROW(run_perr_map(ctx), IoError);
}
