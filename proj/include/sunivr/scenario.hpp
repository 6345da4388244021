#ifndef SUNIVR_SCENARIO_HPP
#define SUNIVR_SCENARIO_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sunivr/coherent.hpp"
#include "sunivr/ivr.hpp"
#include "sunivr/observables.hpp"

namespace sunivr {

/// Parse or validation failure; the message starts with "source:line: ".
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ScenarioConfig {
  std::string name = "scenario";
  ModelParams params;
  CVector w_initial;
  GridSpec grid;  ///< center defaults to w_initial^*
  FilterConfig filter;
  double horizon = 6.0;
  int outputs = 241;
  IntegratorOptions integrator;

  bool exact = true;
  bool exact_full = false;  ///< n = 2 only: also run the three-mode model
  std::size_t dimension_cap = kDefaultDimensionCap;

  bool survival = true;
  bool integral_table = false;
  std::vector<double> qgrid_times;
  QGridKind qgrid_kind = QGridKind::Sphere;
  SphereGridSpec sphere;
  double box_half_width = 2.0;
  int box_points = 41;
  bool sphere_embedding = false;

  std::optional<double> max_deviation;  ///< semiclassical vs exact, max
  std::optional<double> rms_ratio;      ///< rms(sc - exact) / rms(cl - exact)
  bool require_no_filtering = false;

  std::vector<double> times() const;
};

ScenarioConfig parse_config(std::istream& in, const std::string& source);
ScenarioConfig load_config(const std::filesystem::path& path);

/// The fully resolved configuration in the input format.
std::string format_config(const ScenarioConfig& cfg);

struct RunOptions {
  int workers = 1;
  std::optional<double> rtol;
  std::filesystem::path out = "out";
  bool progress = true;
};

struct ScenarioReport {
  std::string name;
  std::filesystem::path directory;
  bool completed = false;
  bool passed = false;
  std::string error;
  std::vector<std::string> checks;  ///< "PASS ..." / "FAIL ..." lines
  std::string summary;
  double wall_seconds = 0.0;
};

/// Runs one scenario and writes its artifacts into out/<name>/.
ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts);

struct SuiteReport {
  std::vector<ScenarioReport> scenarios;
  bool ok() const;
};

/// Runs each config in order; a failing scenario does not stop the rest.
SuiteReport run_suite(const std::vector<std::filesystem::path>& configs,
                      const RunOptions& opts);

/// *.cfg files of a directory in lexicographic order.
std::vector<std::filesystem::path> list_configs(const std::filesystem::path& dir);

}  // namespace sunivr

#endif  // SUNIVR_SCENARIO_HPP
