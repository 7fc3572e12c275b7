#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prf/config.hpp"
#include "prf/model.hpp"

namespace prf {

inline constexpr const char* kVersion = "0.1.0";

// Resolved inputs of one scenario run. All physics values are in
// gamma_sigma units; thetas are stored in radians.
struct ScenarioConfig {
  std::string scenario;

  std::vector<double> thetas{M_PI};
  double tau_d = 0.1;
  double t_center = -1;  // < 0: 5 * tau_d
  double detuning = 0;
  double gamma_sigma = 1.0;

  double epsilon = 1e-3;
  std::vector<double> linewidths{2.0};
  double freq_a = 0.0, freq_b = 0.0;
  // mc-validate: epsilon = sqrt(gamma_sigma * Gamma) / 2 unless overridden,
  // which makes the physical detection rate equal the sensor click rate.
  bool epsilon_explicit = false;

  std::vector<double> T_grid;        // empty: scenario default
  std::vector<double> omega_grid;    // empty: scenario default
  std::vector<double> omega_a_grid;  // empty: scenario default
  std::vector<double> omega_b_grid;

  int n_max = 0;  // 0: scenario default (4 bare, 2 filtered)
  double rtol = 1e-9, atol = 1e-12;
  std::size_t ensemble = 100000;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out_dir = "out";
  bool quiet = false;

  ConfigFile raw;  // echoed into the manifest

  static ScenarioConfig from_file(const std::string& path);

  double pulse_center() const { return t_center < 0 ? 5.0 * tau_d : t_center; }
  JointModel bare_model(double theta) const;
  JointModel sensor_model(double theta, const std::vector<SensorParams>& sensors,
                          double eps) const;
};

// Runs the scenario, writes one CSV per output quantity plus manifest.json
// into cfg.out_dir. Returns the process exit code: 0 success (possibly with
// warnings in the manifest), 2 validation failure, 3 solver failure.
int run_scenario(const ScenarioConfig& cfg);

}  // namespace prf
