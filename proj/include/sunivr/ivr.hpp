#ifndef SUNIVR_IVR_HPP
#define SUNIVR_IVR_HPP

#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "sunivr/dynamics.hpp"
#include "sunivr/fock.hpp"
#include "sunivr/model.hpp"
#include "sunivr/types.hpp"

namespace sunivr {

/// Square lattice of initial labels wbar_i around `center`.
struct GridSpec {
  CVector center;
  double half_width = 0.5;
  int points_per_axis = 21;  ///< odd, so the center is a lattice point

  /// Lattice spacing 2 half_width / (points - 1); 2 half_width for one point.
  double spacing() const;
  /// spacing^{2(n-1)}, the area element of one cell.
  double cell_volume() const;
};

/// Row-major lattice: axes Re wbar_1, Im wbar_1, Re wbar_2, ... with the
/// first axis varying slowest.
std::vector<CVector> build_grid(const GridSpec& spec);

/// Discrete rate test on ln|K|^2. A lambda of +infinity disables it.
struct FilterConfig {
  double lambda = 10.0;
};

struct FilterDecision {
  bool filtered = false;
  double t_cut = 0.0;
};

/// Applies the rate condition to a recorded history of (t, ln K) at
/// consecutive accepted steps. The first failing interval [t_{k-1}, t_k]
/// cuts the trajectory at t_{k-1}.
FilterDecision apply_filter(std::span<const double> t,
                            std::span<const Complex> log_amp,
                            const FilterConfig& cfg);

/// Same test applied online during integration.
class HeuristicFilter final : public StepMonitor {
 public:
  explicit HeuristicFilter(const FilterConfig& cfg);
  bool on_step(double t0, Complex log_amp0, double t1, Complex log_amp1) override;

 private:
  FilterConfig cfg_;
};

/// Contribution of one trajectory at each output time it reached:
/// psi_sc(t) += coefficient * |label> with label = wbar(t)^*.
struct TrajectoryContribution {
  std::size_t outputs = 0;
  std::vector<Complex> coefficient;
  std::vector<Complex> label;  ///< outputs x (n-1), row-major

  Eigen::Map<const CVector> label_at(std::size_t k, Eigen::Index m) const {
    return {label.data() + k * static_cast<std::size_t>(m), m};
  }
};

/// Per output time, the semiclassical state sum_k c_k |u_k>. The integrals
/// I_m are these amplitudes divided by sqrt(N!/m!).
struct IvrIntegralTable {
  int modes = 2;
  int particles = 1;
  std::vector<double> times;
  std::vector<CVector> amplitudes;
  std::vector<std::size_t> alive;

  bool degenerate(std::size_t k) const;
  /// I_{m_1...m_n}(t_k) in basis order.
  CVector integrals(std::size_t k, const FockBasis& basis) const;
};

IvrIntegralTable make_integral_table(const FockBasis& basis,
                                     std::span<const double> times);

/// Adds the contributions of `block` into `table`, summing each time slot
/// in the order of `block`. Parallel over time slots.
void accumulate_integrals(std::span<const TrajectoryContribution> block,
                          const FockBasis& basis, IvrIntegralTable& table,
                          int workers = 1);

/// sum_m N!/m! (1 + |w_f|^2)^{-N/2} prod_j (w_f,j^*)^{m_j} I_m at t_k.
Complex assemble_propagator(const IvrIntegralTable& table, std::size_t k,
                            const CVector& w_final, const FockBasis& basis);

/// Normalized semiclassical state at t_k.
FockVector reconstruct_state(const IvrIntegralTable& table, std::size_t k);

struct EnsembleConfig {
  GridSpec grid;
  FilterConfig filter;
  IntegratorOptions integrator;
  int workers = 1;
  std::size_t block_size = 2048;
  bool keep_contributions = false;
  /// Called with (done, total) after each block.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct EnsembleResult {
  int modes = 2;
  int particles = 1;
  CVector w_initial;
  std::vector<double> times;
  double cell_volume = 0.0;
  std::vector<CVector> grid;
  std::vector<TrajectoryOutcome> outcomes;
  IvrIntegralTable table;
  /// Only filled when EnsembleConfig::keep_contributions is set.
  std::vector<TrajectoryContribution> contributions;

  std::size_t count(TrajectoryStatus s) const;
  /// Trajectories that did not fail singularly before the horizon.
  std::size_t contributing() const;
};

/// Integrates every grid point and sums the IVR integrals. Results do not
/// depend on the worker count.
EnsembleResult run_ensemble(const ClassicalHamiltonianModel& model,
                            const CVector& w_initial,
                            std::span<const double> times,
                            const FockBasis& basis, const EnsembleConfig& cfg);

/// sum_k c_k <w_f|u_k> over the kept contributions at t_k.
Complex direct_propagator(const EnsembleResult& ens, std::size_t k,
                          const CVector& w_final);

struct ClassicalSeries {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<CVector> path;  ///< w_p(t)
  TrajectoryOutcome outcome;
};

/// Mean of `obs` in the coherent state |w_p(t)> along the principal
/// trajectory wbar(0) = w_i^*.
ClassicalSeries classical_approximation(const ClassicalHamiltonianModel& model,
                                        const CVector& w_initial,
                                        Observable obs,
                                        std::span<const double> times,
                                        const IntegratorOptions& opts = {});

/// Coherent-state mean of `obs` at label w, for n-1 = w.size() modes.
double coherent_expectation(const CVector& w, Observable obs);

struct SurvivalEntry {
  CVector wbar_initial;
  TrajectoryStatus status = TrajectoryStatus::Alive;
  double survival = 0.0;  ///< t_cut, t_fail, or the horizon
};

std::vector<SurvivalEntry> survival_diagram(const EnsembleResult& ens);

/// Columns re_wbar1, im_wbar1, ..., status, survival.
void write_survival_csv(std::ostream& os, std::span<const SurvivalEntry> s);

/// Columns t, alive, then re/im of I_m for each basis state.
void write_integral_table_csv(std::ostream& os, const IvrIntegralTable& table,
                              const FockBasis& basis);

}  // namespace sunivr

#endif  // SUNIVR_IVR_HPP
