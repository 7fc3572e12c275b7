#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "prf/model.hpp"
#include "prf/ode.hpp"

namespace prf {

// Deterministic per-trajectory random stream; a splitmix64 counter keyed by
// (run seed, trajectory index). Trajectories can run in any order on any
// number of workers and still reproduce bit for bit.
class CounterRng {
 public:
  CounterRng(std::uint64_t run_seed, std::uint64_t stream);
  std::uint64_t next_u64();
  double uniform();  // in (0, 1)

 private:
  std::uint64_t state_;
};

struct JumpEvent {
  double t = 0;
  int channel = 0;  // mode index: 0 emitter, 1.. sensors
};

struct TrajectoryRecord {
  std::uint64_t run_seed = 0;
  std::uint64_t index = 0;
  std::vector<JumpEvent> jumps;
  bool overflow = false;  // hit the recorded-jump cap; statistics must skip it
};

struct McOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  int max_jumps = 32;
  double bisect_rel_tol = 1e-10;
  std::int64_t max_steps = 4'000'000;
};

// One quantum-jump unraveling of the master equation over [0, horizon]: the
// state evolves under H(t) - (i/2) sum_c r_c c^dag c, a channel fires when
// the squared norm crosses a pre-drawn uniform threshold (located by
// bisection on the continuous extension), and the state is re-normalized
// after the jump.
TrajectoryRecord run_trajectory(const JointModel& model, std::uint64_t run_seed,
                                std::uint64_t index, const McOptions& opt = {});

std::vector<TrajectoryRecord> run_ensemble(const JointModel& model,
                                           std::size_t count,
                                           std::uint64_t run_seed,
                                           int workers = 0,
                                           const McOptions& opt = {});

// Empirical Early/Late counting statistics of the selected channels.
struct CountingHistogram {
  std::map<std::pair<int, int>, std::size_t> counts;  // (early, late) -> freq
  std::size_t n_traj = 0;
  std::size_t n_overflow = 0;

  double p(int early, int late) const;
  double stderr_p(int early, int late) const;  // binomial standard error
  double mean_total() const;
  // n-th factorial moment E[k(k-1)...(k-n+1)] of the total count, with its
  // sample standard error.
  std::pair<double, double> factorial_moment(int n) const;
};

CountingHistogram estimate_probabilities(std::span<const TrajectoryRecord> ensemble,
                                         double T, std::span<const int> channels);

}  // namespace prf
