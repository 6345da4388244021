#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sunivr/scenario.hpp"

namespace {

void print_report(const sunivr::ScenarioReport& r) {
  std::cout << r.name << ": ";
  if (!r.completed) {
    std::cout << "ERROR " << r.error << '\n';
    return;
  }
  std::cout << (r.passed ? "ok" : "FAILED") << " (" << r.wall_seconds << " s, "
            << r.directory.string() << ")\n";
  for (const auto& c : r.checks) std::cout << "  " << c << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SU(n) coherent-state semiclassical propagator runner"};
  app.require_subcommand(1);

  sunivr::RunOptions opts;
  double tol = 0.0;
  std::string out = "out";
  app.add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "override integrator relative tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");
  app.add_flag("!--quiet", opts.progress, "suppress progress on stderr");

  std::string config;
  auto* run = app.add_subcommand("run", "run one scenario config");
  run->add_option("config", config, "scenario file")->required();

  std::string dir;
  auto* suite = app.add_subcommand("suite", "run every *.cfg in a directory");
  suite->add_option("dir", dir, "config directory")->required();

  CLI11_PARSE(app, argc, argv);
  opts.out = out;
  if (tol > 0.0) opts.rtol = tol;

  try {
    if (*run) {
      const auto rep = sunivr::run_scenario(sunivr::load_config(config), opts);
      print_report(rep);
      return rep.completed && rep.passed ? 0 : 1;
    }
    const auto rep = sunivr::run_suite(sunivr::list_configs(dir), opts);
    for (const auto& r : rep.scenarios) print_report(r);
    std::cout << rep.scenarios.size() << " scenario(s), "
              << (rep.ok() ? "all passed" : "failures present") << '\n';
    return rep.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
