#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace prf {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Everything is expressed in units of the emitter decay rate gamma_sigma:
// times in 1/gamma_sigma, rates and angular frequencies (detunings) in
// gamma_sigma. The rotating frame of the driving laser is used throughout,
// so a mode "frequency" is its detuning from the laser.

// Gaussian drive envelope with area `theta`, duration `tau_d` and center
// `t_center`. The closed-form time integral over the whole axis equals
// `theta`. A tabulated envelope (linear interpolation, zero outside the
// table) may be attached for non-Gaussian shapes.
struct PulseEnvelope {
  double theta = 0.0;
  double tau_d = 0.1;
  double t_center = 0.5;
  std::shared_ptr<const std::vector<std::pair<double, double>>> table;

  // Gaussian pulse with the center placed at 5*tau_d so that the simulation
  // origin t=0 precedes essentially all pulse amplitude (the envelope mass
  // before t=0 is below 3e-7 of theta).
  static PulseEnvelope gaussian(double theta, double tau_d);

  double operator()(double t) const;
};

struct TwoLevelParams {
  double detuning = 0.0;     // transition frequency minus laser frequency
  double gamma_sigma = 1.0;  // spontaneous decay rate (unit scale)
};

struct SensorParams {
  double detuning = 0.0;   // sensor frequency minus laser frequency
  double linewidth = 1.0;  // sensor decay rate Gamma
};

struct SensorBank {
  std::vector<SensorParams> sensors;  // at most two
  double epsilon = 1e-3;              // emitter-sensor coupling
};

// Driven two-level emitter, optionally coupled to one or two spectral
// sensor qubits. Mode 0 is the emitter, modes 1.. are sensors. The joint
// Hilbert space is the tensor product with mode 0 as the leftmost factor;
// dimension 2^n_modes.
//
// Instances are immutable after construction and safe to share across
// threads.
class JointModel {
 public:
  JointModel(TwoLevelParams tls, PulseEnvelope pulse, SensorBank bank = {});

  const TwoLevelParams& tls() const { return tls_; }
  const PulseEnvelope& pulse() const { return pulse_; }
  const SensorBank& sensor_bank() const { return bank_; }
  int n_modes() const { return 1 + static_cast<int>(bank_.sensors.size()); }
  int dim() const { return 1 << n_modes(); }

  // Lowering operator of a mode embedded in the joint space.
  const CMat& lowering(int mode) const { return lowering_[mode]; }
  CMat number_op(int mode) const;
  double decay_rate(int mode) const;  // gamma_sigma or Gamma_j
  double mode_detuning(int mode) const;

  // H(t) = H_static + pulse(t) * H_drive, Hermitian.
  CMat hamiltonian(double t) const;
  const CMat& hamiltonian_static() const { return h_static_; }
  const CMat& hamiltonian_drive() const { return h_drive_; }

  // Generator of d rho/dt = i[rho, H] + sum_c (r_c/2) L_c rho acting on
  // column-stacked density matrices: d vec(rho)/dt = L(t) vec(rho), with
  // vec() stacking columns (Eigen default) and L_c rho = 2 c rho c^dag
  // - c^dag c rho - rho c^dag c.
  CMat liouvillian(double t) const;
  const CMat& liouvillian_static() const { return l_static_; }
  const CMat& liouvillian_drive() const { return l_drive_; }

  CMat ground_state() const;  // all modes in their ground state

  // Default integration end for quantities that require a relaxed tail.
  // Covers the pulse, the emitter lifetime and the slowest sensor decay.
  double horizon() const;

  // Soft checks (returns human-readable warnings, empty when clean).
  std::vector<std::string> validate() const;

 private:
  TwoLevelParams tls_;
  PulseEnvelope pulse_;
  SensorBank bank_;
  std::vector<CMat> lowering_;
  CMat h_static_, h_drive_;
  CMat l_static_, l_drive_;
};

CMat kron(const CMat& a, const CMat& b);
// I (x) ... (x) local (x) ... (x) I with `local` acting on `mode`.
CMat embed(const CMat& local, int mode, int n_modes);

}  // namespace prf
