#include "sunivr/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace sunivr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

bool parse_real(std::string_view s, double& out) {
  if (s == "inf" || s == "+inf") {
    out = std::numeric_limits<double>::infinity();
    return true;
  }
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

// Accepts "a", "bi", "a+bi", "a-bi".
bool parse_complex(std::string_view s, Complex& out) {
  if (s.empty()) return false;
  if (s.back() != 'i') {
    double re;
    if (!parse_real(s, re)) return false;
    out = re;
    return true;
  }
  s.remove_suffix(1);
  std::size_t split = std::string_view::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  double re = 0.0, im = 0.0;
  std::string_view im_part = s;
  if (split != std::string_view::npos) {
    if (!parse_real(s.substr(0, split), re)) return false;
    im_part = s.substr(split);
  }
  if (im_part == "+" || im_part == "" ) im = 1.0;
  else if (im_part == "-") im = -1.0;
  else if (!parse_real(im_part, im)) return false;
  out = {re, im};
  return true;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_complex(Complex z) {
  if (z.imag() == 0.0) return format_real(z.real());
  std::string im = format_real(z.imag());
  if (im.front() != '-') im = "+" + im;
  return format_real(z.real()) + im + "i";
}

std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

class Parser {
 public:
  using Setter = std::function<void(const std::string&)>;

  Parser(ScenarioConfig& cfg, std::string source) : cfg_(cfg), source_(std::move(source)) {
    define("scenario", "name", [this](const std::string& v) { cfg_.name = v; });

    define("model", "modes", integer(cfg_.params.modes));
    define("model", "particles", integer(cfg_.params.particles));
    define("model", "tunneling", real(cfg_.params.tunneling));
    define("model", "collision", real(cfg_.params.collision));

    define("initial", "w", [this](const std::string& v) {
      cfg_.w_initial = complex_list(v);
    });

    define("grid", "center", [this](const std::string& v) {
      cfg_.grid.center = complex_list(v);
    });
    define("grid", "half_width", real(cfg_.grid.half_width));
    define("grid", "points", integer(cfg_.grid.points_per_axis));

    define("filter", "lambda", real(cfg_.filter.lambda));

    define("time", "horizon", real(cfg_.horizon));
    define("time", "outputs", integer(cfg_.outputs));

    define("integrator", "rtol", real(cfg_.integrator.rtol));
    define("integrator", "atol", real(cfg_.integrator.atol));
    define("integrator", "initial_step", real(cfg_.integrator.initial_step));
    define("integrator", "max_step", real(cfg_.integrator.max_step));

    define("exact", "enabled", boolean(cfg_.exact));
    define("exact", "three_mode_reference", boolean(cfg_.exact_full));
    define("exact", "dimension_cap", [this](const std::string& v) {
      int cap = 0;
      integer(cap)(v);
      if (cap < 1) fail("dimension_cap must be positive");
      cfg_.dimension_cap = static_cast<std::size_t>(cap);
    });

    define("outputs", "survival", boolean(cfg_.survival));
    define("outputs", "integral_table", boolean(cfg_.integral_table));
    define("outputs", "qgrid_times", [this](const std::string& v) {
      cfg_.qgrid_times.clear();
      for (const auto& item : split_list(v)) {
        double t;
        if (!parse_real(item, t)) fail("bad time '" + item + "'");
        cfg_.qgrid_times.push_back(t);
      }
    });
    define("outputs", "qgrid_kind", [this](const std::string& v) {
      if (v == "sphere") cfg_.qgrid_kind = QGridKind::Sphere;
      else if (v == "box") cfg_.qgrid_kind = QGridKind::Box;
      else fail("qgrid_kind must be 'sphere' or 'box'");
    });
    define("outputs", "sphere_theta_points", integer(cfg_.sphere.theta_points));
    define("outputs", "sphere_phi_points", integer(cfg_.sphere.phi_points));
    define("outputs", "box_half_width", real(cfg_.box_half_width));
    define("outputs", "box_points", integer(cfg_.box_points));
    define("outputs", "sphere_embedding", boolean(cfg_.sphere_embedding));

    define("acceptance", "max_deviation", optional_real(cfg_.max_deviation));
    define("acceptance", "rms_ratio", optional_real(cfg_.rms_ratio));
    define("acceptance", "no_filtering", boolean(cfg_.require_no_filtering));
  }

  void parse(std::istream& in) {
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    while (std::getline(in, raw)) {
      ++line_;
      const auto hash = raw.find('#');
      const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') fail("unterminated section header");
        section = trim(std::string_view(text).substr(1, text.size() - 2));
        if (!sections_.count(section)) fail("unknown section [" + section + "]");
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      if (section.empty()) fail("key outside of any section");
      const std::string key = trim(std::string_view(text).substr(0, eq));
      const std::string value = trim(std::string_view(text).substr(eq + 1));
      const std::string full = section + "." + key;
      auto it = setters_.find(full);
      if (it == setters_.end()) fail("unknown key '" + key + "' in [" + section + "]");
      if (!seen.insert(full).second) fail("duplicate key '" + key + "'");
      if (value.empty()) fail("empty value for '" + key + "'");
      it->second(value);
    }
    line_ = 0;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    if (line_ > 0) throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + msg);
    throw ConfigError(source_ + ": " + msg);
  }

 private:
  void define(const std::string& section, const std::string& key, Setter s) {
    sections_.insert(section);
    setters_[section + "." + key] = std::move(s);
  }

  Setter integer(int& target) {
    return [this, &target](const std::string& v) {
      const auto r = std::from_chars(v.data(), v.data() + v.size(), target);
      if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        fail("expected an integer, got '" + v + "'");
    };
  }
  Setter real(double& target) {
    return [this, &target](const std::string& v) {
      if (!parse_real(v, target)) fail("expected a number, got '" + v + "'");
    };
  }
  Setter optional_real(std::optional<double>& target) {
    return [this, &target](const std::string& v) {
      double x;
      if (!parse_real(v, x)) fail("expected a number, got '" + v + "'");
      target = x;
    };
  }
  Setter boolean(bool& target) {
    return [this, &target](const std::string& v) {
      if (v == "true") target = true;
      else if (v == "false") target = false;
      else fail("expected true or false, got '" + v + "'");
    };
  }
  CVector complex_list(const std::string& v) {
    const auto items = split_list(v);
    if (items.empty()) fail("expected a complex list");
    CVector out(static_cast<Eigen::Index>(items.size()));
    for (std::size_t k = 0; k < items.size(); ++k) {
      Complex z;
      if (!parse_complex(items[k], z)) fail("bad complex number '" + items[k] + "'");
      out(static_cast<Eigen::Index>(k)) = z;
    }
    return out;
  }

  ScenarioConfig& cfg_;
  std::string source_;
  int line_ = 0;
  std::set<std::string> sections_;
  std::map<std::string, Setter> setters_;
};

void validate(ScenarioConfig& cfg, const Parser& p) {
  const auto& m = cfg.params;
  if (m.modes != 2 && m.modes != 3) p.fail("model.modes must be 2 or 3");
  if (m.particles < 1) p.fail("model.particles must be positive");
  if (m.collision != 0.0 && m.particles < 2) p.fail("collision needs particles >= 2");
  if (!std::isfinite(m.tunneling) || !std::isfinite(m.collision))
    p.fail("model rates must be finite");
  if (cfg.w_initial.size() != m.modes - 1)
    p.fail("initial.w needs " + std::to_string(m.modes - 1) + " entries");
  if (!cfg.w_initial.allFinite()) p.fail("initial.w must be finite");
  if (cfg.grid.center.size() == 0) cfg.grid.center = cfg.w_initial.conjugate();
  if (cfg.grid.center.size() != m.modes - 1) p.fail("grid.center has wrong length");
  if (!cfg.grid.center.allFinite()) p.fail("grid.center must be finite");
  if (cfg.grid.points_per_axis < 1 || cfg.grid.points_per_axis % 2 == 0)
    p.fail("grid.points must be odd and positive");
  if (!(cfg.grid.half_width > 0.0) || !std::isfinite(cfg.grid.half_width))
    p.fail("grid.half_width must be positive");
  if (!(cfg.filter.lambda > 0.0)) p.fail("filter.lambda must be positive");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
    p.fail("time.horizon must be positive");
  if (cfg.outputs < 2) p.fail("time.outputs must be at least 2");
  const auto& in = cfg.integrator;
  if (!(in.rtol > 0.0) || !(in.atol > 0.0) || !(in.initial_step > 0.0) ||
      !(in.max_step > 0.0))
    p.fail("integrator settings must be positive");
  if (cfg.exact_full && m.modes != 2)
    p.fail("exact.three_mode_reference applies to two-mode scenarios");
  if (cfg.max_deviation && !cfg.exact) p.fail("acceptance.max_deviation needs exact");
  if (cfg.rms_ratio && !cfg.exact) p.fail("acceptance.rms_ratio needs exact");
  if (!cfg.qgrid_times.empty()) {
    if (cfg.qgrid_kind == QGridKind::Sphere && m.modes != 2)
      p.fail("sphere Q grids need a two-mode scenario");
    if (cfg.sphere_embedding && cfg.qgrid_kind != QGridKind::Sphere)
      p.fail("sphere_embedding needs qgrid_kind = sphere");
    if (cfg.sphere.theta_points < 2 || cfg.sphere.phi_points < 3)
      p.fail("sphere grid too coarse");
    if (cfg.box_points < 1 || !(cfg.box_half_width > 0.0)) p.fail("bad box grid");
    const auto ts = cfg.times();
    for (double t : cfg.qgrid_times) {
      const bool hit = std::any_of(ts.begin(), ts.end(),
                                   [t](double s) { return std::abs(s - t) < 1e-9; });
      if (!hit) p.fail("qgrid time " + format_real(t) + " is not an output time");
    }
  }
}

std::size_t time_index(const std::vector<double>& ts, double t) {
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (std::abs(ts[k] - t) < 1e-9) return k;
  throw DomainError("time " + format_real(t) + " not on the output grid");
}

void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& fn) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  fn(os);
  if (!os) throw Error("write failed for " + p.string());
}

}  // namespace

std::vector<double> ScenarioConfig::times() const {
  std::vector<double> ts(static_cast<std::size_t>(outputs));
  for (int k = 0; k < outputs; ++k) ts[k] = horizon * k / (outputs - 1);
  return ts;
}

ScenarioConfig parse_config(std::istream& in, const std::string& source) {
  ScenarioConfig cfg;
  Parser p(cfg, source);
  p.parse(in);
  validate(cfg, p);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  return parse_config(in, path.string());
}

std::string format_config(const ScenarioConfig& c) {
  std::ostringstream os;
  auto list = [](const CVector& v) {
    std::string s;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      s += (j ? ", " : "") + format_complex(v(j));
    return s;
  };
  auto flag = [](bool b) { return b ? "true" : "false"; };
  os << "[scenario]\nname = " << c.name << "\n\n";
  os << "[model]\nmodes = " << c.params.modes << "\nparticles = " << c.params.particles
     << "\ntunneling = " << format_real(c.params.tunneling)
     << "\ncollision = " << format_real(c.params.collision) << "\n\n";
  os << "[initial]\nw = " << list(c.w_initial) << "\n\n";
  os << "[grid]\ncenter = " << list(c.grid.center)
     << "\nhalf_width = " << format_real(c.grid.half_width)
     << "\npoints = " << c.grid.points_per_axis << "\n\n";
  os << "[filter]\nlambda = " << format_real(c.filter.lambda) << "\n\n";
  os << "[time]\nhorizon = " << format_real(c.horizon) << "\noutputs = " << c.outputs
     << "\n\n";
  os << "[integrator]\nrtol = " << format_real(c.integrator.rtol)
     << "\natol = " << format_real(c.integrator.atol)
     << "\ninitial_step = " << format_real(c.integrator.initial_step)
     << "\nmax_step = " << format_real(c.integrator.max_step) << "\n\n";
  os << "[exact]\nenabled = " << flag(c.exact)
     << "\nthree_mode_reference = " << flag(c.exact_full)
     << "\ndimension_cap = " << c.dimension_cap << "\n\n";
  os << "[outputs]\nsurvival = " << flag(c.survival)
     << "\nintegral_table = " << flag(c.integral_table);
  if (!c.qgrid_times.empty()) {
    os << "\nqgrid_times = ";
    for (std::size_t k = 0; k < c.qgrid_times.size(); ++k)
      os << (k ? ", " : "") << format_real(c.qgrid_times[k]);
    os << "\nqgrid_kind = " << (c.qgrid_kind == QGridKind::Sphere ? "sphere" : "box")
       << "\nsphere_theta_points = " << c.sphere.theta_points
       << "\nsphere_phi_points = " << c.sphere.phi_points
       << "\nbox_half_width = " << format_real(c.box_half_width)
       << "\nbox_points = " << c.box_points
       << "\nsphere_embedding = " << flag(c.sphere_embedding);
  }
  os << "\n\n[acceptance]\nno_filtering = " << flag(c.require_no_filtering);
  if (c.max_deviation) os << "\nmax_deviation = " << format_real(*c.max_deviation);
  if (c.rms_ratio) os << "\nrms_ratio = " << format_real(*c.rms_ratio);
  os << '\n';
  return os.str();
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  ScenarioReport rep;
  rep.name = cfg.name;
  rep.directory = opts.out / cfg.name;
  const auto start = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(rep.directory);
    ScenarioConfig resolved = cfg;
    if (opts.rtol) resolved.integrator.rtol = *opts.rtol;
    write_file(rep.directory / "config.cfg",
               [&](std::ostream& os) { os << format_config(resolved); });

    SimulationSpec spec;
    spec.params = resolved.params;
    spec.w_initial = resolved.w_initial;
    spec.times = resolved.times();
    spec.ensemble.grid = resolved.grid;
    spec.ensemble.filter = resolved.filter;
    spec.ensemble.integrator = resolved.integrator;
    spec.ensemble.workers = opts.workers;
    if (opts.progress) {
      const std::string name = resolved.name;
      spec.ensemble.progress = [name](std::size_t done, std::size_t total) {
        std::cerr << "[" << name << "] trajectories " << done << "/" << total << '\n';
      };
    }
    spec.classical_integrator = resolved.integrator;
    spec.dimension_cap = resolved.dimension_cap;
    Simulation sim(spec);
    const auto& ts = spec.times;
    const bool three = resolved.params.modes == 3;

    auto emit = [&](const std::string& stem, const TimeSeries& s) {
      write_file(rep.directory / (stem + "_" + s.label + ".csv"),
                 [&](std::ostream& os) { write_series_csv(os, s); });
    };

    const TimeSeries cl = series_szbar(Approach::Classical, sim);
    emit("szbar", cl);
    const TimeSeries sc = series_szbar(Approach::Semiclassical, sim);
    emit("szbar", sc);
    std::optional<TimeSeries> ex, ex_full;
    if (resolved.exact) {
      ex = series_szbar(Approach::Exact, sim);
      emit("szbar", *ex);
    }
    if (resolved.exact_full) {
      ex_full = series_szbar(Approach::ExactFull, sim);
      emit("szbar", *ex_full);
    }
    if (three) {
      emit("b3", series_b3_occupation(Approach::Classical, sim));
      emit("b3", series_b3_occupation(Approach::Semiclassical, sim));
      if (resolved.exact) emit("b3", series_b3_occupation(Approach::Exact, sim));
    }

    const EnsembleResult& ens = sim.ensemble();
    if (resolved.survival) {
      const auto diagram = survival_diagram(ens);
      write_file(rep.directory / "survival.csv",
                 [&](std::ostream& os) { write_survival_csv(os, diagram); });
    }
    if (resolved.integral_table) {
      write_file(rep.directory / "integral_table.csv", [&](std::ostream& os) {
        write_integral_table_csv(os, ens.table, sim.basis());
      });
    }

    for (double t : resolved.qgrid_times) {
      const std::size_t k = time_index(ts, t);
      std::vector<std::pair<std::string, const FockVector*>> states = {
          {"semiclassical", &sim.semiclassical_states()[k]}};
      if (resolved.exact) states.emplace_back("exact", &sim.exact_states()[k]);
      for (const auto& [label, psi] : states) {
        QGrid q;
        if (resolved.qgrid_kind == QGridKind::Sphere) {
          q = q_function(*psi, sim.basis(), resolved.sphere);
        } else {
          BoxGridSpec box{CVector::Zero(resolved.params.modes - 1),
                          resolved.box_half_width, resolved.box_points};
          q = q_function(*psi, sim.basis(), box);
        }
        const std::string tag = "t" + time_tag(t) + "_" + label + ".csv";
        write_file(rep.directory / ("qgrid_" + tag),
                   [&](std::ostream& os) { write_qgrid_csv(os, q); });
        if (resolved.sphere_embedding)
          write_file(rep.directory / ("sphere_" + tag),
                     [&](std::ostream& os) { write_sphere_csv(os, q); });
      }
    }

    // Checks embedded in the config.
    rep.passed = true;
    auto check = [&](bool ok, const std::string& text) {
      rep.checks.push_back(std::string(ok ? "PASS " : "FAIL ") + text);
      rep.passed = rep.passed && ok;
    };
    const std::size_t filtered = ens.count(TrajectoryStatus::Filtered);
    if (resolved.require_no_filtering)
      check(filtered == 0, "no_filtering: filtered = " + std::to_string(filtered));
    double sc_max = 0, sc_rms = 0, cl_rms = 0;
    if (ex) {
      sc_max = compare(sc, *ex, Metric::Max);
      sc_rms = compare(sc, *ex, Metric::Rms);
      cl_rms = compare(cl, *ex, Metric::Rms);
      if (resolved.max_deviation)
        check(sc_max <= *resolved.max_deviation,
              "max_deviation: " + format_real(sc_max) + " <= " +
                  format_real(*resolved.max_deviation));
      if (resolved.rms_ratio)
        check(sc_rms <= *resolved.rms_ratio * cl_rms,
              "rms_ratio: " + format_real(sc_rms / cl_rms) + " <= " +
                  format_real(*resolved.rms_ratio));
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream sum;
    sum.precision(17);
    sum << "scenario " << resolved.name << '\n'
        << "modes " << resolved.params.modes << '\n'
        << "particles " << resolved.params.particles << '\n'
        << "trajectories " << ens.grid.size() << '\n'
        << "contributing " << ens.contributing() << '\n'
        << "alive " << ens.count(TrajectoryStatus::Alive) << '\n'
        << "filtered " << filtered << '\n'
        << "singular " << ens.count(TrajectoryStatus::Singular) << '\n'
        << "alive_at_horizon " << ens.table.alive.back() << '\n'
        << "l2_semiclassical_classical " << compare(sc, cl, Metric::L2) << '\n';
    if (ex) {
      sum << "max_semiclassical_exact " << sc_max << '\n'
          << "rms_semiclassical_exact " << sc_rms << '\n'
          << "max_classical_exact " << compare(cl, *ex, Metric::Max) << '\n'
          << "rms_classical_exact " << cl_rms << '\n';
    }
    if (ex_full) {
      sum << "max_semiclassical_exact_full " << compare(sc, *ex_full, Metric::Max) << '\n'
          << "max_exact_exact_full " << compare(*ex, *ex_full, Metric::Max) << '\n';
    }
    for (const auto& c : rep.checks) sum << "check " << c << '\n';
    sum << "wall_seconds " << wall << '\n';
    rep.summary = sum.str();
    rep.wall_seconds = wall;
    write_file(rep.directory / "summary.txt", [&](std::ostream& os) { os << rep.summary; });
    rep.completed = true;
  } catch (const std::exception& e) {
    rep.completed = false;
    rep.passed = false;
    rep.error = e.what();
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rep;
}

bool SuiteReport::ok() const {
  return std::all_of(scenarios.begin(), scenarios.end(),
                     [](const ScenarioReport& r) { return r.completed && r.passed; });
}

SuiteReport run_suite(const std::vector<std::filesystem::path>& configs,
                      const RunOptions& opts) {
  SuiteReport suite;
  for (const auto& path : configs) {
    try {
      suite.scenarios.push_back(run_scenario(load_config(path), opts));
    } catch (const std::exception& e) {
      ScenarioReport rep;
      rep.name = path.stem().string();
      rep.error = e.what();
      suite.scenarios.push_back(std::move(rep));
    }
  }
  return suite;
}

std::vector<std::filesystem::path> list_configs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".cfg") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sunivr
