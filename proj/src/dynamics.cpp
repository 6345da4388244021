#include "sunivr/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>

namespace sunivr {

namespace {

// Dormand-Prince 5(4) tableau; the flow is autonomous so the nodes c_i
// are not needed.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kPhaseGuard = kPi / 2;

// Augmented state layout: w, wbar, M12, M22 (column-major), S, I.
class AugmentedSystem {
 public:
  AugmentedSystem(const ClassicalHamiltonianModel& model, double eps)
      : model_(model), m_(model.dimension()), eps_(eps) {}

  Eigen::Index size() const { return 2 * m_ + 2 * m_ * m_ + 2; }
  Eigen::Index m() const { return m_; }

  DoubledState state(const CVector& y) const {
    return {y.segment(0, m_), y.segment(m_, m_)};
  }
  Eigen::Map<const CMatrix> m12(const CVector& y) const {
    return {y.data() + 2 * m_, m_, m_};
  }
  Eigen::Map<const CMatrix> m22(const CVector& y) const {
    return {y.data() + 2 * m_ + m_ * m_, m_, m_};
  }
  Complex action(const CVector& y) const { return y(size() - 2); }
  Complex correction(const CVector& y) const { return y(size() - 1); }

  CVector initial(const CVector& w, const CVector& wbar) const {
    CVector y = CVector::Zero(size());
    y.segment(0, m_) = w;
    y.segment(m_, m_) = wbar;
    Eigen::Map<CMatrix>(y.data() + 2 * m_ + m_ * m_, m_, m_).setIdentity();
    return y;
  }

  void rhs(const CVector& y, CVector& dy) const {
    const FlowEvaluation f = evaluate_flow(model_, state(y), eps_);
    dy.resize(size());
    dy.segment(0, m_) = f.w_dot;
    dy.segment(m_, m_) = f.wbar_dot;
    CMatrix blocks(2 * m_, m_);
    blocks << m12(y), m22(y);
    const CMatrix d = f.linearization * blocks;
    Eigen::Map<CMatrix>(dy.data() + 2 * m_, m_, m_) = d.topRows(m_);
    Eigen::Map<CMatrix>(dy.data() + 2 * m_ + m_ * m_, m_, m_) = d.bottomRows(m_);
    dy(size() - 2) = f.lagrangian;
    dy(size() - 1) = f.correction;
  }

 private:
  const ClassicalHamiltonianModel& model_;
  Eigen::Index m_;
  double eps_;
};

Complex log_amplitude_from(Complex action, Complex correction, Complex l1,
                           Complex l0, Complex log_det, const CVector& wbar_t,
                           const CVector& w_initial, int particles, int modes) {
  const double half_n = 0.5 * particles;
  return kI * (action + correction) + half_n * (l1 + l0) -
         half_n * (std::log1p(wbar_t.squaredNorm()) +
                   std::log1p(w_initial.squaredNorm())) +
         0.25 * modes * (l1 - l0) - 0.5 * log_det;
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

class CollectingSink final : public SnapshotSink {
 public:
  explicit CollectingSink(std::vector<TrajectorySnapshot>& out) : out_(out) {}
  void on_output(std::size_t, const TrajectorySnapshot& snap) override {
    out_.push_back(snap);
  }

 private:
  std::vector<TrajectorySnapshot>& out_;
};

}  // namespace

const char* status_name(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Alive: return "alive";
    case TrajectoryStatus::Filtered: return "filtered";
    case TrajectoryStatus::Singular: return "singular";
  }
  return "unknown";
}

Complex unwrap_log(Complex z, Complex reference) {
  Complex l = std::log(z);
  const double turns = std::round((reference.imag() - l.imag()) / (2 * kPi));
  return {l.real(), l.imag() + 2 * kPi * turns};
}

Complex boundary_term(const CVector& w_initial, const CVector& wbar_0,
                      const CVector& wbar_tau, const CVector& w_tau,
                      int particles, Complex log_reference) {
  const Complex end = 1.0 + wbar_tau.cwiseProduct(w_tau).sum();
  const Complex start = 1.0 + wbar_0.cwiseProduct(w_initial).sum();
  if (end == Complex(0.0) || start == Complex(0.0))
    throw SingularityError("boundary term logarithm at zero");
  return -kI * (0.5 * particles) * (unwrap_log(end, log_reference) + std::log(start));
}

std::optional<Complex> propagator_log_amplitude(const TrajectorySnapshot& snap,
                                                const CVector& w_initial,
                                                const CVector& wbar_initial,
                                                int particles, int modes) {
  if (snap.m22.determinant() == Complex(0.0)) return std::nullopt;
  const Complex l0 = std::log(1.0 + wbar_initial.cwiseProduct(w_initial).sum());
  return log_amplitude_from(snap.action, snap.correction, snap.log_denominator,
                            l0, snap.log_det_m22, snap.state.wbar, w_initial,
                            particles, modes);
}

TrajectoryOutcome integrate_trajectory(const ClassicalHamiltonianModel& model,
                                       const CVector& w_initial,
                                       const CVector& wbar_initial,
                                       std::span<const double> times,
                                       const IntegratorOptions& opts,
                                       SnapshotSink& sink,
                                       StepMonitor* monitor) {
  const int m = model.dimension();
  if (w_initial.size() != m || wbar_initial.size() != m)
    throw DomainError("initial condition has wrong dimension");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && !(times[k] > times[k - 1])))
      throw DomainError("output times must be increasing and non-negative");
  }
  const int n_particles = model.particles();
  const int n_modes = model.modes();

  AugmentedSystem sys(model, opts.eps_sing);
  const Eigen::Index dim = sys.size();
  CVector y = sys.initial(w_initial, wbar_initial);

  TrajectoryOutcome out;
  const Complex l0 = std::log(1.0 + wbar_initial.cwiseProduct(w_initial).sum());
  Complex l1 = l0;
  Complex log_det = 0.0;
  Complex det = 1.0;
  Complex log_amp = log_amplitude_from(0.0, 0.0, l1, l0, log_det, wbar_initial,
                                       w_initial, n_particles, n_modes);
  double t = 0.0;

  auto emit = [&](std::size_t index) {
    TrajectorySnapshot s;
    s.t = times[index];
    s.state = sys.state(y);
    s.m12 = sys.m12(y);
    s.m22 = sys.m22(y);
    s.action = sys.action(y);
    s.correction = sys.correction(y);
    s.log_denominator = l1;
    s.log_det_m22 = log_det;
    s.log_amplitude = log_amp;
    sink.on_output(index, s);
    ++out.outputs;
  };

  std::size_t next = 0;
  if (!times.empty() && times[0] == 0.0) emit(next++);
  if (next == times.size()) {
    out.t_stop = t;
    return out;
  }

  auto fail = [&](double when) {
    out.status = TrajectoryStatus::Singular;
    out.t_stop = when;
    return out;
  };

  std::array<CVector, 7> k;
  for (auto& v : k) v.resize(dim);
  CVector ytmp(dim), ynew(dim);
  try {
    sys.rhs(y, k[0]);
  } catch (const SingularityError&) {
    return fail(0.0);
  }

  double h = std::min(opts.initial_step, opts.max_step);
  Complex d_old = 1.0 + wbar_initial.cwiseProduct(w_initial).sum();

  while (next < times.size()) {
    if (out.accepted_steps + out.rejected_steps >= opts.max_steps) return fail(t);
    const double target = times[next];
    double step = std::min(h, opts.max_step);
    bool landing = false;
    if (t + step >= target - 1e-12 * std::max(1.0, target)) {
      step = target - t;
      landing = true;
    }
    if (step < opts.min_step && !landing) return fail(t);

    auto shrink = [&](double factor) {
      ++out.rejected_steps;
      h = step * factor;
    };

    try {
      ytmp = y + step * a21 * k[0];
      sys.rhs(ytmp, k[1]);
      ytmp = y + step * (a31 * k[0] + a32 * k[1]);
      sys.rhs(ytmp, k[2]);
      ytmp = y + step * (a41 * k[0] + a42 * k[1] + a43 * k[2]);
      sys.rhs(ytmp, k[3]);
      ytmp = y + step * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]);
      sys.rhs(ytmp, k[4]);
      ytmp = y + step * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] +
                         a65 * k[4]);
      sys.rhs(ytmp, k[5]);
      ynew = y + step * (a71 * k[0] + a73 * k[2] + a74 * k[3] + a75 * k[4] +
                         a76 * k[5]);
      sys.rhs(ynew, k[6]);
    } catch (const SingularityError&) {
      if (step <= opts.min_step) return fail(t);
      shrink(0.5);
      continue;
    }

    double err = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const Complex e = step * (e1 * k[0](i) + e3 * k[2](i) + e4 * k[3](i) +
                                e5 * k[4](i) + e6 * k[5](i) + e7 * k[6](i));
      const double scale =
          opts.atol + opts.rtol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      const double r = std::abs(e) / scale;
      err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(dim));
    if (!std::isfinite(err)) {
      if (step <= opts.min_step) return fail(t);
      shrink(0.5);
      continue;
    }
    if (err > 1.0) {
      if (step <= opts.min_step) return fail(t);
      shrink(std::max(0.2, 0.9 * std::pow(err, -0.2)));
      continue;
    }

    // Branch tracking: the log increments must be small enough to be
    // unambiguous, otherwise retry with a shorter step.
    const DoubledState s_new = sys.state(ynew);
    const Complex d_new = 1.0 + s_new.wbar.cwiseProduct(s_new.w).sum();
    const Complex det_new = sys.m22(ynew).determinant();
    if (det_new == Complex(0.0) || !finite(det_new) || d_new == Complex(0.0)) {
      if (step <= opts.min_step) return fail(t);
      shrink(0.5);
      continue;
    }
    const Complex dl1 = std::log(d_new / d_old);
    const Complex dlog_det = std::log(det_new / det);
    const Complex l1_new = l1 + dl1;
    const Complex log_det_new = log_det + dlog_det;
    const Complex log_amp_new =
        log_amplitude_from(sys.action(ynew), sys.correction(ynew), l1_new, l0,
                           log_det_new, s_new.wbar, w_initial, n_particles,
                           n_modes);
    if (std::abs(dl1.imag()) >= kPhaseGuard ||
        std::abs(dlog_det.imag()) >= kPhaseGuard ||
        !finite(log_amp_new) ||
        std::abs(log_amp_new.imag() - log_amp.imag()) >= kPhaseGuard) {
      if (step <= opts.min_step) return fail(t);
      shrink(0.5);
      continue;
    }

    const double t_new = landing ? target : t + step;
    ++out.accepted_steps;
    if (std::abs(d_new) < opts.eps_sing ||
        s_new.w.cwiseAbs().maxCoeff() > opts.overflow ||
        s_new.wbar.cwiseAbs().maxCoeff() > opts.overflow || !ynew.allFinite())
      return fail(t_new);
    if (monitor && !monitor->on_step(t, log_amp, t_new, log_amp_new)) {
      out.status = TrajectoryStatus::Filtered;
      out.t_stop = t;
      return out;
    }

    y.swap(ynew);
    k[0].swap(k[6]);
    t = t_new;
    d_old = d_new;
    det = det_new;
    l1 = l1_new;
    log_det = log_det_new;
    log_amp = log_amp_new;
    if (landing) emit(next++);

    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h = std::max(step * factor, landing ? h : 0.0);
  }
  out.t_stop = t;
  return out;
}

TrajectoryRecord integrate_trajectory(const ClassicalHamiltonianModel& model,
                                      const CVector& w_initial,
                                      const CVector& wbar_initial,
                                      std::span<const double> times,
                                      const IntegratorOptions& opts,
                                      StepMonitor* monitor) {
  TrajectoryRecord rec;
  rec.w_initial = w_initial;
  rec.wbar_initial = wbar_initial;
  rec.snapshots.reserve(times.size());
  CollectingSink sink(rec.snapshots);
  rec.outcome = integrate_trajectory(model, w_initial, wbar_initial, times,
                                     opts, sink, monitor);
  return rec;
}

void write_snapshots_csv(std::ostream& os, const TrajectoryRecord& rec) {
  const Eigen::Index m = rec.w_initial.size();
  os << "t";
  for (Eigen::Index j = 1; j <= m; ++j) os << ",re_w" << j << ",im_w" << j;
  for (Eigen::Index j = 1; j <= m; ++j) os << ",re_wbar" << j << ",im_wbar" << j;
  os << ",re_S,im_S,re_I,im_I,ln_abs_K,phase_K,re_det_M22,im_det_M22\n";
  const auto old = os.precision(17);
  for (const auto& s : rec.snapshots) {
    os << s.t;
    for (Eigen::Index j = 0; j < m; ++j)
      os << ',' << s.state.w(j).real() << ',' << s.state.w(j).imag();
    for (Eigen::Index j = 0; j < m; ++j)
      os << ',' << s.state.wbar(j).real() << ',' << s.state.wbar(j).imag();
    const Complex det = s.m22.determinant();
    os << ',' << s.action.real() << ',' << s.action.imag() << ','
       << s.correction.real() << ',' << s.correction.imag() << ','
       << s.log_amplitude.real() << ',' << s.log_amplitude.imag() << ','
       << det.real() << ',' << det.imag() << '\n';
  }
  os.precision(old);
}

}  // namespace sunivr
