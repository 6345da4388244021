#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sunivr/scenario.hpp"

using namespace sunivr;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# small linear case
[scenario]
name = small

[model]
modes = 2
particles = 8
tunneling = -1
collision = 0

[initial]
w = 0.4

[grid]
half_width = 0.7
points = 5

[filter]
lambda = inf

[time]
horizon = 1
outputs = 11

[outputs]
qgrid_times = 0, 0.5
sphere_theta_points = 20
sphere_phi_points = 40

[acceptance]
max_deviation = 0.5
no_filtering = true
)";

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sunivr_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunOptions quiet(const fs::path& out) {
  RunOptions o;
  o.out = out;
  o.progress = false;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("parses a complete scenario") {
  const ScenarioConfig cfg = parse(kSmall);
  CHECK(cfg.name == "small");
  CHECK(cfg.params.particles == 8);
  CHECK(cfg.params.collision == 0.0);
  CHECK(cfg.w_initial(0) == Complex(0.4, 0.0));
  CHECK(cfg.grid.center(0) == Complex(0.4, 0.0));
  CHECK(std::isinf(cfg.filter.lambda));
  CHECK(cfg.times().size() == 11);
  CHECK(cfg.times().back() == 1.0);
  CHECK(cfg.qgrid_times == std::vector<double>{0.0, 0.5});
  CHECK(cfg.max_deviation.value() == 0.5);
  CHECK(cfg.require_no_filtering);
}

TEST_CASE("complex lists") {
  const ScenarioConfig cfg = parse(
      "[model]\nmodes = 3\nparticles = 4\n[initial]\nw = 0.1+0.2i, -0.3i\n");
  CHECK(cfg.w_initial(0) == Complex(0.1, 0.2));
  CHECK(cfg.w_initial(1) == Complex(0.0, -0.3));
}

TEST_CASE("configuration errors carry line numbers") {
  CHECK(error_of("[model]\nmodes = 2\nfoo = 1\n").rfind("test.cfg:3:", 0) == 0);
  CHECK(error_of("[nonsense]\n").find("unknown section") != std::string::npos);
  CHECK(error_of("[model]\nmodes = 2\nmodes = 3\n").find("test.cfg:3: duplicate") !=
        std::string::npos);
  CHECK(error_of("[model]\nparticles = many\n").find("test.cfg:2:") != std::string::npos);
  CHECK(error_of("modes = 2\n").find("outside of any section") != std::string::npos);
  CHECK(error_of("[model]\nmodes = 2\n[grid]\npoints = 4\n[initial]\nw = 0.4\n").find("odd") !=
        std::string::npos);
  CHECK(error_of("[model]\nmodes = 2\n[initial]\nw = 0.1, 0.2\n").find("entries") != std::string::npos);
  CHECK(error_of("[model]\nmodes = 2\n[initial]\nw = 0.4\n[outputs]\nqgrid_times = 0.33\n")
            .find("not an output time") != std::string::npos);
  CHECK(error_of(kSmall).empty());
}

TEST_CASE("resolved configuration round-trips") {
  const ScenarioConfig cfg = parse(kSmall);
  const std::string echo = format_config(cfg);
  const ScenarioConfig again = parse(echo);
  CHECK(format_config(again) == echo);
  CHECK(again.grid.points_per_axis == 5);
  CHECK(again.qgrid_times == cfg.qgrid_times);
}

TEST_CASE("shipped configurations") {
  const fs::path dir = SUNIVR_CONFIG_DIR;
  const auto files = list_configs(dir);
  REQUIRE(files.size() == 7);
  const ScenarioConfig fig1 = load_config(dir / "fig1.cfg");
  CHECK(fig1.params.modes == 2);
  CHECK(fig1.params.particles == 30);
  CHECK(fig1.params.tunneling == -1.0);
  CHECK(fig1.params.collision == -1.0);
  CHECK(fig1.filter.lambda == 10.0);
  CHECK(fig1.w_initial(0).real() == doctest::Approx(std::tan(3.14159265358979 / 8)));
  const ScenarioConfig fig4 = load_config(dir / "fig4.cfg");
  CHECK(fig4.params.collision == -8.0);
  CHECK(fig4.filter.lambda == 18.0);
  const ScenarioConfig fig6 = load_config(dir / "fig6.cfg");
  CHECK(fig6.params.modes == 3);
  CHECK(fig6.filter.lambda == 10.0);
  CHECK(fig6.w_initial(0) == fig6.w_initial(1));
  CHECK(fig6.w_initial(0).real() ==
        doctest::Approx(std::tan(3.14159265358979 / 8) / std::sqrt(2.0)));
  for (int n : {30, 60, 150})
    CHECK(load_config(dir / ("fig2_n" + std::to_string(n) + ".cfg")).params.particles == n);
}

TEST_CASE("scenario run writes its artifacts") {
  const fs::path out = scratch("run");
  const ScenarioReport r = run_scenario(parse(kSmall), quiet(out));
  CHECK(r.completed);
  CHECK(r.passed);
  const fs::path d = out / "small";
  for (const char* f : {"config.cfg", "szbar_exact.csv", "szbar_semiclassical.csv",
                        "szbar_classical.csv", "survival.csv", "summary.txt",
                        "qgrid_t0.5_semiclassical.csv", "qgrid_t0.5_exact.csv"})
    CHECK_MESSAGE(fs::exists(d / f), f);
  CHECK(slurp(d / "config.cfg") == format_config(parse(kSmall)));

  const fs::path out2 = scratch("rerun");
  run_scenario(parse(kSmall), quiet(out2));
  CHECK(slurp(d / "szbar_semiclassical.csv") ==
        slurp(out2 / "small" / "szbar_semiclassical.csv"));
  CHECK(slurp(d / "survival.csv") == slurp(out2 / "small" / "survival.csv"));
}

TEST_CASE("suite isolates failing scenarios") {
  const fs::path dir = scratch("suite_cfg");
  std::ofstream(dir / "a_bad.cfg") << "[model]\nwhatever = 1\n";
  std::string strict = kSmall;
  strict.replace(strict.find("max_deviation = 0.5"), 19, "max_deviation = 0");
  std::ofstream(dir / "b_strict.cfg") << strict;
  std::ofstream(dir / "c_good.cfg") << kSmall;
  const SuiteReport report = run_suite(list_configs(dir), quiet(scratch("suite_out")));
  REQUIRE(report.scenarios.size() == 3);
  CHECK_FALSE(report.scenarios[0].completed);
  CHECK(report.scenarios[0].error.find("unknown key") != std::string::npos);
  CHECK(report.scenarios[1].completed);
  CHECK_FALSE(report.scenarios[1].passed);
  CHECK(report.scenarios[2].passed);
  CHECK_FALSE(report.ok());

  CHECK(run_suite({}, quiet(scratch("empty"))).ok());
  CHECK(run_suite({}, quiet(scratch("empty"))).scenarios.empty());
}
