#ifndef SUNIVR_OBSERVABLES_HPP
#define SUNIVR_OBSERVABLES_HPP

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sunivr/coherent.hpp"
#include "sunivr/fock.hpp"
#include "sunivr/ivr.hpp"
#include "sunivr/model.hpp"

namespace sunivr {

/// ExactFull is the three-mode calculation; for n = 3 it equals Exact,
/// for n = 2 Exact uses the projected two-mode Hamiltonian.
enum class Approach { Exact, ExactFull, Semiclassical, Classical };

std::string approach_label(Approach a);

struct TimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::string label;

  std::size_t size() const { return times.size(); }
};

/// Validates equal lengths and strictly increasing times.
TimeSeries make_series(std::vector<double> times, std::vector<double> values,
                       std::string label);

enum class Metric { Max, Rms, L2 };

/// Deviation between two series on the same time grid. L2 is the
/// trapezoidal sqrt(int (a - b)^2 dt).
double compare(const TimeSeries& a, const TimeSeries& b, Metric metric);

/// Restriction to t in [t0, t1].
TimeSeries window(const TimeSeries& s, double t0, double t1);

/// Half the peak-to-peak range of `s` over [t - width/2, t + width/2],
/// clipped to the series.
double local_amplitude(const TimeSeries& s, double t, double width);

/// local_amplitude at each sample time.
TimeSeries envelope(const TimeSeries& s, double width);

/// Columns t, value, label.
void write_series_csv(std::ostream& os, const TimeSeries& s);

struct SimulationSpec {
  ModelParams params;
  CVector w_initial;
  std::vector<double> times;
  EnsembleConfig ensemble;
  IntegratorOptions classical_integrator;
  std::size_t dimension_cap = kDefaultDimensionCap;
};

/// Computes the exact, semiclassical and classical pieces of a scenario
/// on first use and caches them. Not thread-safe.
class Simulation {
 public:
  explicit Simulation(SimulationSpec spec);

  const SimulationSpec& spec() const { return spec_; }
  const FockBasis& basis() const { return basis_; }
  const ClassicalHamiltonianModel& model() const { return *model_; }

  FockVector initial_state() const;

  /// States of the reference calculation for `which` (Exact or ExactFull).
  const std::vector<FockVector>& exact_states(Approach which = Approach::Exact);
  const FockBasis& exact_basis(Approach which);

  const EnsembleResult& ensemble();
  const std::vector<FockVector>& semiclassical_states();
  const ClassicalSeries& classical(Observable obs);

 private:
  SimulationSpec spec_;
  FockBasis basis_;
  std::unique_ptr<ClassicalHamiltonianModel> model_;
  std::optional<FockBasis> full_basis_;
  std::optional<std::vector<FockVector>> exact_;
  std::optional<std::vector<FockVector>> exact_full_;
  std::optional<EnsembleResult> ensemble_;
  std::optional<std::vector<FockVector>> semiclassical_;
  std::map<Observable, ClassicalSeries> classical_;
};

TimeSeries series(Approach approach, Observable obs, Simulation& sim);

/// <S_z>/S with S = N/2.
TimeSeries series_szbar(Approach approach, Simulation& sim);

/// <b3^+ b3>/N; needs a three-mode scenario.
TimeSeries series_b3_occupation(Approach approach, Simulation& sim);

/// <S_z>/S as the quadrature of Q against the antinormal symbol of S_z/S
/// on an SU(2) sphere grid, ((N + 2)/N) (|v|^2 - 1)/(|v|^2 + 1).
double q_mean_imbalance(const QGrid& q);

}  // namespace sunivr

#endif  // SUNIVR_OBSERVABLES_HPP
