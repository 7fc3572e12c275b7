// Wall-clock comparison of the serial reference loops against the OpenMP
// kernels on representative workloads: a frequency-map row of normalized
// correlations and a quantum-jump ensemble.

#include <fmt/format.h>
#include <omp.h>

#include <vector>

#include "prf/correlators.hpp"
#include "prf/counting.hpp"
#include "prf/scenarios.hpp"
#include "prf/sweep.hpp"
#include "prf/trajectories.hpp"
#include "prf/util.hpp"

namespace {

template <class Fn>
double timed(Fn&& fn) {
  double t0 = omp_get_wtime();
  fn();
  return omp_get_wtime() - t0;
}

void bench_map_row(int workers) {
  prf::ScenarioConfig cfg;
  cfg.thetas = {3 * M_PI};
  auto freqs = prf::linspace(-20.0, 20.0, 16);
  std::vector<double> g2(freqs.size());
  prf::OdeOptions opt;
  opt.rtol = 1e-8;
  auto task = [&](std::size_t i) {
    auto sys = prf::MomentSystem::build(
        cfg.sensor_model(3 * M_PI, {{freqs[i], 2.0}, {freqs[i], 2.0}}, 1e-3));
    g2[i] = prf::normalized_g2_zero(sys, opt);
  };
  double serial = timed([&] { prf::serial_for_indexed(freqs.size(), task); });
  double par = timed([&] { prf::parallel_for_indexed(freqs.size(), workers, task); });
  fmt::print("g2 map row ({} tiles)    serial {:7.2f} s   omp[{}] {:7.2f} s   x{:.2f}\n",
             freqs.size(), serial, workers, par, serial / par);
}

void bench_ensemble(int workers) {
  prf::ScenarioConfig cfg;
  auto model = cfg.sensor_model(3 * M_PI, {{0.0, 2.0}}, 0.5 * std::sqrt(2.0));
  const std::size_t n = 2000;
  double serial = timed([&] { prf::run_ensemble(model, n, 7, 1); });
  std::vector<prf::TrajectoryRecord> recs;
  double par = timed([&] { recs = prf::run_ensemble(model, n, 7, workers); });
  auto h = prf::estimate_probabilities(recs, 1.0, std::vector<int>{1});
  fmt::print("jump ensemble ({} traj) serial {:7.2f} s   omp[{}] {:7.2f} s   x{:.2f}"
             "   <clicks> {:.3f}\n",
             n, serial, workers, par, serial / par, h.mean_total());
}

}  // namespace

int main(int argc, char** argv) {
  int workers = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  fmt::print("workers: {}\n", workers);
  bench_map_row(workers);
  bench_ensemble(workers);
  return 0;
}
