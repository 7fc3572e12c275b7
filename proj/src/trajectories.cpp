#include "prf/trajectories.hpp"

#include <algorithm>
#include <cmath>

#include "prf/sweep.hpp"

namespace prf {

namespace {

std::uint64_t splitmix_fin(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t run_seed, std::uint64_t stream)
    : state_(splitmix_fin(run_seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)))) {}

std::uint64_t CounterRng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double CounterRng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

namespace {

// Shared immutable pieces of the effective (non-Hermitian) evolution.
struct McSystem {
  CMat h_eff_static;  // H_static - (i/2) sum_c r_c c^dag c
  CMat h_drive;
  std::vector<CMat> jump_ops;  // lowering operator per channel
  std::vector<double> rates;
  const PulseEnvelope* pulse;

  explicit McSystem(const JointModel& m) : pulse(&m.pulse()) {
    h_eff_static = m.hamiltonian_static();
    h_drive = m.hamiltonian_drive();
    for (int k = 0; k < m.n_modes(); ++k) {
      jump_ops.push_back(m.lowering(k));
      rates.push_back(m.decay_rate(k));
      h_eff_static -= Complex(0, 0.5) * m.decay_rate(k) *
                      (m.lowering(k).adjoint() * m.lowering(k));
    }
  }

  void operator()(double t, const CVec& y, CVec& dy) const {
    dy.noalias() = Complex(0, -1) * (h_eff_static * y);
    double w = (*pulse)(t);
    if (w != 0.0) dy.noalias() += Complex(0, -w) * (h_drive * y);
  }
};

TrajectoryRecord run_one(const JointModel& model, const McSystem& sys,
                         std::uint64_t run_seed, std::uint64_t index,
                         const McOptions& opt) {
  TrajectoryRecord rec;
  rec.run_seed = run_seed;
  rec.index = index;
  CounterRng rng(run_seed, index);

  const double horizon = model.horizon();
  OdeOptions ode;
  ode.rtol = opt.rtol;
  ode.atol = opt.atol;
  ode.max_steps = opt.max_steps;

  CVec psi = CVec::Zero(model.dim());
  psi[0] = 1.0;  // joint ground state
  double t = 0.0;
  double threshold = rng.uniform();

  CVec buf(psi.size());
  while (t < horizon) {
    Dopri5<const McSystem&> stepper(sys, ode);
    stepper.start(t, psi, horizon);
    bool jumped = false;
    while (stepper.advance()) {
      if (stepper.y().squaredNorm() > threshold) continue;
      // norm crossed within this step; bisect on the dense output
      double lo = stepper.t_prev(), hi = stepper.t();
      for (int it = 0; hi - lo > opt.bisect_rel_tol * std::max(1.0, std::abs(hi));
           ++it) {
        if (it > 200)
          throw IntegratorError("jump-time bisection failed to converge", lo);
        double mid = 0.5 * (lo + hi);
        stepper.eval(mid, buf);
        (buf.squaredNorm() > threshold ? lo : hi) = mid;
      }
      double t_jump = 0.5 * (lo + hi);
      stepper.eval(t_jump, buf);

      // channel choice proportional to r_c <c^dag c>
      std::vector<double> weights(sys.jump_ops.size());
      double total = 0;
      for (std::size_t c = 0; c < sys.jump_ops.size(); ++c) {
        weights[c] = sys.rates[c] * (sys.jump_ops[c] * buf).squaredNorm();
        total += weights[c];
      }
      if (total <= 0)
        throw IntegratorError("norm plateau: no decay channel active at crossing",
                              t_jump);
      double pick = rng.uniform() * total;
      std::size_t channel = 0;
      for (; channel + 1 < weights.size(); ++channel) {
        if (pick < weights[channel]) break;
        pick -= weights[channel];
      }

      if (static_cast<int>(rec.jumps.size()) >= opt.max_jumps) {
        rec.overflow = true;
        return rec;
      }
      rec.jumps.push_back({t_jump, static_cast<int>(channel)});
      psi = sys.jump_ops[channel] * buf;
      psi /= psi.norm();
      t = t_jump;
      threshold = rng.uniform();
      jumped = true;
      break;
    }
    if (!jumped) break;  // reached the horizon without another crossing
  }
  return rec;
}

}  // namespace

TrajectoryRecord run_trajectory(const JointModel& model, std::uint64_t run_seed,
                                std::uint64_t index, const McOptions& opt) {
  McSystem sys(model);
  return run_one(model, sys, run_seed, index, opt);
}

std::vector<TrajectoryRecord> run_ensemble(const JointModel& model,
                                           std::size_t count,
                                           std::uint64_t run_seed, int workers,
                                           const McOptions& opt) {
  McSystem sys(model);
  std::vector<TrajectoryRecord> out(count);
  parallel_for_indexed(count, workers, [&](std::size_t i) {
    out[i] = run_one(model, sys, run_seed, i, opt);
  });
  return out;
}

double CountingHistogram::p(int early, int late) const {
  if (n_traj == 0) return 0;
  auto it = counts.find({early, late});
  double k = it == counts.end() ? 0.0 : static_cast<double>(it->second);
  return k / static_cast<double>(n_traj);
}

double CountingHistogram::stderr_p(int early, int late) const {
  if (n_traj == 0) return 0;
  double q = p(early, late);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(n_traj));
}

double CountingHistogram::mean_total() const {
  if (n_traj == 0) return 0;
  double sum = 0;
  for (const auto& [k, f] : counts)
    sum += static_cast<double>(k.first + k.second) * static_cast<double>(f);
  return sum / static_cast<double>(n_traj);
}

std::pair<double, double> CountingHistogram::factorial_moment(int n) const {
  if (n_traj == 0) return {0, 0};
  double sum = 0, sumsq = 0;
  for (const auto& [k, f] : counts) {
    double x = 1;
    int total = k.first + k.second;
    for (int j = 0; j < n; ++j) x *= total - j;
    if (total < n) x = 0;
    sum += x * static_cast<double>(f);
    sumsq += x * x * static_cast<double>(f);
  }
  double nn = static_cast<double>(n_traj);
  double mean = sum / nn;
  double var = std::max(0.0, sumsq / nn - mean * mean);
  return {mean, std::sqrt(var / nn)};
}

CountingHistogram estimate_probabilities(std::span<const TrajectoryRecord> ensemble,
                                         double T, std::span<const int> channels) {
  CountingHistogram h;
  for (const auto& rec : ensemble) {
    if (rec.overflow) {
      ++h.n_overflow;
      continue;
    }
    int early = 0, late = 0;
    for (const auto& j : rec.jumps) {
      bool selected = channels.empty() ||
                      std::find(channels.begin(), channels.end(), j.channel) !=
                          channels.end();
      if (!selected) continue;
      (j.t <= T ? early : late) += 1;
    }
    ++h.counts[{early, late}];
    ++h.n_traj;
  }
  return h;
}

}  // namespace prf
