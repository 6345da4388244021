#ifndef SUNIVR_DYNAMICS_HPP
#define SUNIVR_DYNAMICS_HPP

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sunivr/model.hpp"
#include "sunivr/types.hpp"

namespace sunivr {

struct IntegratorOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_step = 1e-3;
  double max_step = 0.05;
  double min_step = 1e-12;
  std::size_t max_steps = 2'000'000;
  double eps_sing = kDefaultSingularityEps;
  double overflow = 1e8;  ///< bound on |w| and |wbar|
};

enum class TrajectoryStatus { Alive, Filtered, Singular };

const char* status_name(TrajectoryStatus s);

/// State of one ensemble member at an output time.
struct TrajectorySnapshot {
  double t = 0.0;
  DoubledState state;
  CMatrix m12;
  CMatrix m22;
  Complex action;          ///< integral of the Lagrangian
  Complex correction;      ///< integral of the correction term
  Complex log_denominator; ///< ln(1 + wbar(t).w(t)), unwrapped from t = 0
  Complex log_det_m22;     ///< ln det M22(t), unwrapped from t = 0
  Complex log_amplitude;   ///< ln K_sc(wbar(t), w_i; t), unwrapped
};

/// Called after every trial step passes error control. Returning false
/// removes the trajectory with cut time t0.
class StepMonitor {
 public:
  virtual ~StepMonitor() = default;
  virtual bool on_step(double t0, Complex log_amp0, double t1,
                       Complex log_amp1) = 0;
};

/// Receives snapshots at each output time the trajectory reaches alive.
class SnapshotSink {
 public:
  virtual ~SnapshotSink() = default;
  virtual void on_output(std::size_t index, const TrajectorySnapshot& snap) = 0;
};

struct TrajectoryOutcome {
  TrajectoryStatus status = TrajectoryStatus::Alive;
  /// Cut time when filtered, failure time when singular, final time otherwise.
  double t_stop = 0.0;
  std::size_t outputs = 0;  ///< number of output times delivered
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

struct TrajectoryRecord {
  CVector w_initial;
  CVector wbar_initial;
  std::vector<TrajectorySnapshot> snapshots;
  TrajectoryOutcome outcome;
};

/// Integrates (w, wbar, M12, M22, S, I) with an adaptive Dormand-Prince
/// 5(4) pair, landing exactly on every entry of `times` (increasing, >= 0).
TrajectoryOutcome integrate_trajectory(const ClassicalHamiltonianModel& model,
                                       const CVector& w_initial,
                                       const CVector& wbar_initial,
                                       std::span<const double> times,
                                       const IntegratorOptions& opts,
                                       SnapshotSink& sink,
                                       StepMonitor* monitor = nullptr);

TrajectoryRecord integrate_trajectory(const ClassicalHamiltonianModel& model,
                                      const CVector& w_initial,
                                      const CVector& wbar_initial,
                                      std::span<const double> times,
                                      const IntegratorOptions& opts = {},
                                      StepMonitor* monitor = nullptr);

/// log z on the branch nearest to `reference`.
Complex unwrap_log(Complex z, Complex reference);

/// Gamma = -i (N/2) [Ln(1 + wbar_tau.w_tau) + Ln(1 + wbar_0.w_i)]. The first
/// logarithm takes the branch nearest `log_reference`; pass the previous
/// value when stepping along a path.
Complex boundary_term(const CVector& w_initial, const CVector& wbar_0,
                      const CVector& wbar_tau, const CVector& w_tau,
                      int particles, Complex log_reference = 0.0);

/// ln K_sc from a snapshot. Empty at a focal point (det M22 = 0).
std::optional<Complex> propagator_log_amplitude(const TrajectorySnapshot& snap,
                                                const CVector& w_initial,
                                                const CVector& wbar_initial,
                                                int particles, int modes);

/// Debug dump: t, Re/Im w_j, Re/Im wbar_j, Re/Im S, Re/Im I, ln|K|, phase,
/// Re/Im det M22.
void write_snapshots_csv(std::ostream& os, const TrajectoryRecord& rec);

}  // namespace sunivr

#endif  // SUNIVR_DYNAMICS_HPP
