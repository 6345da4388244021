#include "sunivr/observables.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace sunivr {

std::string approach_label(Approach a) {
  switch (a) {
    case Approach::Exact: return "exact";
    case Approach::ExactFull: return "exact_full";
    case Approach::Semiclassical: return "semiclassical";
    case Approach::Classical: return "classical";
  }
  return "?";
}

TimeSeries make_series(std::vector<double> times, std::vector<double> values,
                       std::string label) {
  if (times.size() != values.size())
    throw DomainError("time series lengths differ");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw DomainError("time series times must increase strictly");
  return {std::move(times), std::move(values), std::move(label)};
}

double compare(const TimeSeries& a, const TimeSeries& b, Metric metric) {
  if (a.times.size() != b.times.size())
    throw DomainError("compare: series lengths differ");
  for (std::size_t k = 0; k < a.times.size(); ++k)
    if (a.times[k] != b.times[k])
      throw DomainError("compare: time grids differ");
  if (a.times.empty()) return 0.0;
  const std::size_t n = a.times.size();
  switch (metric) {
    case Metric::Max: {
      double m = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        m = std::max(m, std::abs(a.values[k] - b.values[k]));
      return m;
    }
    case Metric::Rms: {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = a.values[k] - b.values[k];
        s += d * d;
      }
      return std::sqrt(s / static_cast<double>(n));
    }
    case Metric::L2: {
      double s = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        const double d0 = a.values[k - 1] - b.values[k - 1];
        const double d1 = a.values[k] - b.values[k];
        s += 0.5 * (d0 * d0 + d1 * d1) * (a.times[k] - a.times[k - 1]);
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

TimeSeries window(const TimeSeries& s, double t0, double t1) {
  TimeSeries out;
  out.label = s.label;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.times[k] >= t0 && s.times[k] <= t1) {
      out.times.push_back(s.times[k]);
      out.values.push_back(s.values[k]);
    }
  }
  return out;
}

double local_amplitude(const TimeSeries& s, double t, double width) {
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (std::abs(s.times[k] - t) > 0.5 * width + 1e-12) continue;
    if (!any) {
      lo = hi = s.values[k];
      any = true;
    }
    lo = std::min(lo, s.values[k]);
    hi = std::max(hi, s.values[k]);
  }
  if (!any) throw DomainError("local_amplitude: window contains no samples");
  return 0.5 * (hi - lo);
}

TimeSeries envelope(const TimeSeries& s, double width) {
  TimeSeries out;
  out.times = s.times;
  out.label = s.label + "_envelope";
  out.values.reserve(s.size());
  for (double t : s.times) out.values.push_back(local_amplitude(s, t, width));
  return out;
}

void write_series_csv(std::ostream& os, const TimeSeries& s) {
  os << "t,value,label\n";
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < s.size(); ++k)
    os << s.times[k] << ',' << s.values[k] << ',' << s.label << '\n';
  os.precision(old);
}

Simulation::Simulation(SimulationSpec spec)
    : spec_(std::move(spec)),
      basis_(spec_.params.modes, spec_.params.particles, spec_.dimension_cap),
      model_(make_model(spec_.params)) {
  if (spec_.w_initial.size() != model_->dimension())
    throw DomainError("initial label has wrong dimension");
  if (spec_.times.empty()) throw DomainError("scenario has no output times");
  for (std::size_t k = 1; k < spec_.times.size(); ++k)
    if (!(spec_.times[k] > spec_.times[k - 1]))
      throw DomainError("output times must increase strictly");
}

FockVector Simulation::initial_state() const {
  return coherent_amplitudes(spec_.w_initial, basis_);
}

const FockBasis& Simulation::exact_basis(Approach which) {
  if (which == Approach::Exact || spec_.params.modes == 3) return basis_;
  if (which != Approach::ExactFull)
    throw DomainError("exact_basis needs an exact approach");
  if (!full_basis_) full_basis_.emplace(3, spec_.params.particles, spec_.dimension_cap);
  return *full_basis_;
}

const std::vector<FockVector>& Simulation::exact_states(Approach which) {
  const bool native = which == Approach::Exact || spec_.params.modes == 3;
  if (!native && which != Approach::ExactFull)
    throw DomainError("exact_states needs an exact approach");
  auto& slot = native ? exact_ : exact_full_;
  if (slot) return *slot;
  if (native) {
    const HamiltonianMatrix h = spec_.params.modes == 3
                                    ? build_hamiltonian(spec_.params, basis_)
                                    : build_reduced_hamiltonian(spec_.params, basis_);
    slot = evolve_exact(initial_state(), h, spec_.times);
  } else {
    // Reduced scenario seen from the full model: w_1 = w_2 = v / sqrt2.
    const FockBasis& full = exact_basis(Approach::ExactFull);
    ModelParams p = spec_.params;
    p.modes = 3;
    CVector w(2);
    w.setConstant(spec_.w_initial(0) / std::sqrt(2.0));
    slot = evolve_exact(coherent_amplitudes(w, full), build_hamiltonian(p, full),
                        spec_.times);
  }
  return *slot;
}

const EnsembleResult& Simulation::ensemble() {
  if (!ensemble_)
    ensemble_ = run_ensemble(*model_, spec_.w_initial, spec_.times, basis_,
                             spec_.ensemble);
  return *ensemble_;
}

const std::vector<FockVector>& Simulation::semiclassical_states() {
  if (!semiclassical_) {
    const EnsembleResult& ens = ensemble();
    std::vector<FockVector> states;
    states.reserve(spec_.times.size());
    for (std::size_t k = 0; k < spec_.times.size(); ++k)
      states.push_back(reconstruct_state(ens.table, k));
    semiclassical_ = std::move(states);
  }
  return *semiclassical_;
}

const ClassicalSeries& Simulation::classical(Observable obs) {
  auto it = classical_.find(obs);
  if (it == classical_.end())
    it = classical_
             .emplace(obs, classical_approximation(*model_, spec_.w_initial, obs,
                                                   spec_.times,
                                                   spec_.classical_integrator))
             .first;
  return it->second;
}

TimeSeries series(Approach approach, Observable obs, Simulation& sim) {
  std::vector<double> values;
  const auto& times = sim.spec().times;
  values.reserve(times.size());
  switch (approach) {
    case Approach::Exact:
    case Approach::ExactFull: {
      const auto& states = sim.exact_states(approach);
      const FockBasis& b = sim.exact_basis(approach);
      for (const auto& psi : states) values.push_back(expectation(psi, b, obs));
      break;
    }
    case Approach::Semiclassical:
      for (const auto& psi : sim.semiclassical_states())
        values.push_back(expectation(psi, sim.basis(), obs));
      break;
    case Approach::Classical:
      values = sim.classical(obs).values;
      break;
  }
  return make_series(times, std::move(values), approach_label(approach));
}

TimeSeries series_szbar(Approach approach, Simulation& sim) {
  return series(approach, Observable::Imbalance, sim);
}

TimeSeries series_b3_occupation(Approach approach, Simulation& sim) {
  if (sim.spec().params.modes != 3)
    throw DomainError("b3 occupation series needs a three-mode scenario");
  return series(approach, Observable::ThirdModeFraction, sim);
}

double q_mean_imbalance(const QGrid& q) {
  if (q.kind != QGridKind::Sphere || q.modes != 2)
    throw DomainError("q_mean_imbalance needs an SU(2) sphere grid");
  double sum = 0.0;
  for (std::size_t k = 0; k < q.labels.size(); ++k) {
    const double r = std::norm(q.labels[k](0));
    sum += q.weights(k) * q.values(k) * (r - 1.0) / (r + 1.0);
  }
  return (q.particles + 2.0) / q.particles * sum;
}

}  // namespace sunivr
