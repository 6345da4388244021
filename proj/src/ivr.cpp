#include "sunivr/ivr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "sunivr/coherent.hpp"

namespace sunivr {

namespace {

// Runs fn(i) for i in [0, count) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(body);
  body();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

class ContributionSink final : public SnapshotSink {
 public:
  ContributionSink(TrajectoryContribution& out, double log_prefactor, int modes)
      : out_(out), log_prefactor_(log_prefactor), modes_(modes) {}

  void on_output(std::size_t index, const TrajectorySnapshot& snap) override {
    if (index != out_.outputs)
      throw Error("contribution sink received output times out of order");
    const CVector u = snap.state.wbar.conjugate();
    const Complex log_c = log_prefactor_ + 2.0 * snap.log_det_m22.real() -
                          modes_ * std::log1p(u.squaredNorm()) +
                          snap.log_amplitude;
    out_.coefficient.push_back(std::exp(log_c));
    for (Eigen::Index j = 0; j < u.size(); ++j) out_.label.push_back(u(j));
    ++out_.outputs;
  }

 private:
  TrajectoryContribution& out_;
  double log_prefactor_;
  int modes_;
};

std::string time_label(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", t);
  return buf;
}

}  // namespace

double GridSpec::spacing() const {
  if (points_per_axis <= 1) return 2.0 * half_width;
  return 2.0 * half_width / (points_per_axis - 1);
}

double GridSpec::cell_volume() const {
  return std::pow(spacing(), 2.0 * static_cast<double>(center.size()));
}

std::vector<CVector> build_grid(const GridSpec& spec) {
  if (spec.points_per_axis < 1 || spec.points_per_axis % 2 == 0)
    throw DomainError("grid points per axis must be odd");
  if (!(spec.half_width > 0.0) || !std::isfinite(spec.half_width))
    throw DomainError("grid half width must be positive");
  const Eigen::Index m = spec.center.size();
  if (m < 1) throw DomainError("grid center is empty");
  const int p = spec.points_per_axis;
  const int axes = 2 * static_cast<int>(m);
  const double h = spec.spacing();
  const int mid = p / 2;
  std::size_t count = 1;
  for (int a = 0; a < axes; ++a) count *= static_cast<std::size_t>(p);

  std::vector<CVector> grid;
  grid.reserve(count);
  std::vector<int> idx(axes);
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    for (int a = axes - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rest % p);
      rest /= p;
    }
    CVector w = spec.center;
    for (Eigen::Index j = 0; j < m; ++j)
      w(j) += Complex((idx[2 * j] - mid) * h, (idx[2 * j + 1] - mid) * h);
    grid.push_back(std::move(w));
  }
  return grid;
}

FilterDecision apply_filter(std::span<const double> t,
                            std::span<const Complex> log_amp,
                            const FilterConfig& cfg) {
  if (t.size() != log_amp.size())
    throw DomainError("filter history lengths differ");
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double rate =
        2.0 * (log_amp[k].real() - log_amp[k - 1].real()) / (t[k] - t[k - 1]);
    if (!(rate < cfg.lambda)) return {true, t[k - 1]};
  }
  return {};
}

HeuristicFilter::HeuristicFilter(const FilterConfig& cfg) : cfg_(cfg) {
  if (!(cfg.lambda > 0.0)) throw DomainError("filter lambda must be positive");
}

bool HeuristicFilter::on_step(double t0, Complex log_amp0, double t1,
                              Complex log_amp1) {
  const double rate = 2.0 * (log_amp1.real() - log_amp0.real()) / (t1 - t0);
  return rate < cfg_.lambda;
}

bool IvrIntegralTable::degenerate(std::size_t k) const {
  return alive.at(k) == 0 || !(amplitudes.at(k).squaredNorm() > 0.0) ||
         !amplitudes.at(k).allFinite();
}

CVector IvrIntegralTable::integrals(std::size_t k, const FockBasis& basis) const {
  const CVector& a = amplitudes.at(k);
  CVector out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i)
    out(i) = a(i) * std::exp(-0.5 * basis.log_multinomial(i));
  return out;
}

IvrIntegralTable make_integral_table(const FockBasis& basis,
                                     std::span<const double> times) {
  IvrIntegralTable table;
  table.modes = basis.modes();
  table.particles = basis.particles();
  table.times.assign(times.begin(), times.end());
  table.amplitudes.assign(times.size(),
                          CVector::Zero(static_cast<Eigen::Index>(basis.size())));
  table.alive.assign(times.size(), 0);
  return table;
}

void accumulate_integrals(std::span<const TrajectoryContribution> block,
                          const FockBasis& basis, IvrIntegralTable& table,
                          int workers) {
  const Eigen::Index m = basis.modes() - 1;
  parallel_for(table.times.size(), workers, [&](std::size_t k) {
    CVector amps;
    CVector& acc = table.amplitudes[k];
    for (const auto& c : block) {
      if (c.outputs <= k) continue;
      coherent_amplitudes_into(c.label_at(k, m), basis, amps);
      acc += c.coefficient[k] * amps;
      ++table.alive[k];
    }
  });
}

Complex assemble_propagator(const IvrIntegralTable& table, std::size_t k,
                            const CVector& w_final, const FockBasis& basis) {
  if (table.degenerate(k))
    throw DomainError("degenerate IVR table at t = " + time_label(table.times[k]));
  const CVector integrals = table.integrals(k, basis);
  const int n = basis.modes();
  const double log_norm = -0.5 * basis.particles() * std::log1p(w_final.squaredNorm());
  Complex sum = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const Occupation& occ = basis[i];
    Complex term = std::exp(basis.log_multinomial(i) + log_norm);
    for (int j = 0; j + 1 < n; ++j)
      if (occ[j] > 0) term *= std::pow(std::conj(w_final(j)), occ[j]);
    sum += term * integrals(static_cast<Eigen::Index>(i));
  }
  return sum;
}

FockVector reconstruct_state(const IvrIntegralTable& table, std::size_t k) {
  if (table.degenerate(k))
    throw DomainError("degenerate IVR table at t = " + time_label(table.times[k]));
  return normalized(FockVector{table.amplitudes[k], ModeBasis::Raw});
}

std::size_t EnsembleResult::count(TrajectoryStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(outcomes.begin(), outcomes.end(),
                    [s](const TrajectoryOutcome& o) { return o.status == s; }));
}

std::size_t EnsembleResult::contributing() const {
  return outcomes.size() - count(TrajectoryStatus::Singular);
}

EnsembleResult run_ensemble(const ClassicalHamiltonianModel& model,
                            const CVector& w_initial,
                            std::span<const double> times,
                            const FockBasis& basis, const EnsembleConfig& cfg) {
  if (basis.modes() != model.modes() || basis.particles() != model.particles())
    throw DomainError("basis does not match the model");
  if (w_initial.size() != model.dimension())
    throw DomainError("initial label has wrong dimension");

  EnsembleResult res;
  res.modes = model.modes();
  res.particles = model.particles();
  res.w_initial = w_initial;
  res.times.assign(times.begin(), times.end());
  res.grid = build_grid(cfg.grid);
  res.cell_volume = cfg.grid.cell_volume();
  res.outcomes.resize(res.grid.size());
  res.table = make_integral_table(basis, times);

  const double log_prefactor = std::log(res.cell_volume) +
                               std::log(sigma_factor(model.modes())) +
                               std::log(static_cast<double>(basis.size()));
  const std::size_t total = res.grid.size();
  const std::size_t block = std::max<std::size_t>(1, cfg.block_size);

  for (std::size_t start = 0; start < total; start += block) {
    const std::size_t stop = std::min(total, start + block);
    std::vector<TrajectoryContribution> contrib(stop - start);
    parallel_for(stop - start, cfg.workers, [&](std::size_t i) {
      const std::size_t g = start + i;
      ContributionSink sink(contrib[i], log_prefactor, model.modes());
      contrib[i].coefficient.reserve(times.size());
      contrib[i].label.reserve(times.size() * static_cast<std::size_t>(w_initial.size()));
      HeuristicFilter filter(cfg.filter);
      res.outcomes[g] = integrate_trajectory(model, w_initial, res.grid[g], times,
                                             cfg.integrator, sink, &filter);
    });
    accumulate_integrals(contrib, basis, res.table, cfg.workers);
    if (cfg.keep_contributions)
      for (auto& c : contrib) res.contributions.push_back(std::move(c));
    if (cfg.progress) cfg.progress(stop, total);
  }
  return res;
}

Complex direct_propagator(const EnsembleResult& ens, std::size_t k,
                          const CVector& w_final) {
  if (ens.contributions.size() != ens.grid.size())
    throw DomainError("ensemble was run without keeping contributions");
  const Eigen::Index m = ens.modes - 1;
  Complex sum = 0.0;
  for (const auto& c : ens.contributions) {
    if (c.outputs <= k) continue;
    sum += c.coefficient[k] * overlap(w_final, CVector(c.label_at(k, m)), ens.particles);
  }
  return sum;
}

double coherent_expectation(const CVector& w, Observable obs) {
  const double denom = 1.0 + w.squaredNorm();
  const Eigen::Index m = w.size();
  switch (obs) {
    case Observable::Imbalance:
      if (m == 1) return (std::norm(w(0)) - 1.0) / denom;
      if (m == 2) return (0.5 * std::norm(w(0) + w(1)) - 1.0) / denom;
      break;
    case Observable::ThirdModeFraction:
      if (m == 2) return 0.5 * std::norm(w(0) - w(1)) / denom;
      break;
    case Observable::Occupation1:
    case Observable::Occupation2:
    case Observable::Occupation3: {
      const Eigen::Index j = obs == Observable::Occupation1   ? 0
                             : obs == Observable::Occupation2 ? 1
                                                              : 2;
      if (j < m) return std::norm(w(j)) / denom;
      if (j == m) return 1.0 / denom;
      break;
    }
  }
  throw DomainError("observable not defined for this mode count");
}

ClassicalSeries classical_approximation(const ClassicalHamiltonianModel& model,
                                        const CVector& w_initial,
                                        Observable obs,
                                        std::span<const double> times,
                                        const IntegratorOptions& opts) {
  const TrajectoryRecord rec =
      integrate_trajectory(model, w_initial, CVector(w_initial.conjugate()), times, opts);
  if (rec.snapshots.size() != times.size())
    throw DomainError("principal trajectory failed at t = " +
                      time_label(rec.outcome.t_stop));
  ClassicalSeries out;
  out.times.assign(times.begin(), times.end());
  out.outcome = rec.outcome;
  for (const auto& s : rec.snapshots) {
    out.values.push_back(coherent_expectation(s.state.w, obs));
    out.path.push_back(s.state.w);
  }
  return out;
}

std::vector<SurvivalEntry> survival_diagram(const EnsembleResult& ens) {
  const double horizon = ens.times.empty() ? 0.0 : ens.times.back();
  std::vector<SurvivalEntry> out;
  out.reserve(ens.grid.size());
  for (std::size_t g = 0; g < ens.grid.size(); ++g) {
    const auto& o = ens.outcomes[g];
    out.push_back({ens.grid[g], o.status,
                   o.status == TrajectoryStatus::Alive ? horizon : o.t_stop});
  }
  return out;
}

void write_survival_csv(std::ostream& os, std::span<const SurvivalEntry> s) {
  const Eigen::Index m = s.empty() ? 0 : s.front().wbar_initial.size();
  for (Eigen::Index j = 1; j <= m; ++j)
    os << (j > 1 ? "," : "") << "re_wbar" << j << ",im_wbar" << j;
  os << ",status,survival\n";
  const auto old = os.precision(17);
  for (const auto& e : s) {
    for (Eigen::Index j = 0; j < m; ++j)
      os << (j > 0 ? "," : "") << e.wbar_initial(j).real() << ','
         << e.wbar_initial(j).imag();
    os << ',' << status_name(e.status) << ',' << e.survival << '\n';
  }
  os.precision(old);
}

void write_integral_table_csv(std::ostream& os, const IvrIntegralTable& table,
                              const FockBasis& basis) {
  os << "t,alive";
  for (std::size_t i = 0; i < basis.size(); ++i) {
    std::string tag;
    for (int v : basis[i]) tag += (tag.empty() ? "" : "_") + std::to_string(v);
    os << ",re_I_" << tag << ",im_I_" << tag;
  }
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < table.times.size(); ++k) {
    os << table.times[k] << ',' << table.alive[k];
    const CVector integrals = table.integrals(k, basis);
    for (Eigen::Index i = 0; i < integrals.size(); ++i)
      os << ',' << integrals(i).real() << ',' << integrals(i).imag();
    os << '\n';
  }
  os.precision(old);
}

}  // namespace sunivr
