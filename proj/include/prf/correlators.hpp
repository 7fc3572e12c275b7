#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "prf/engine.hpp"

namespace prf {

// Ordered two-time intensity correlations G2_{a->b}(t, tau)
// = <a^dag(t) (b^dag b)(t+tau) a(t)> on a (t, tau) grid, computed by seeding
// the regression vector with the sandwich map and propagating in tau.
struct TwoTimeGrid {
  int mode_a = 0, mode_b = 0;
  std::vector<double> t, tau;
  Eigen::MatrixXd values;  // t.size() x tau.size()
  double max_imag = 0;     // largest imaginary residue seen (diagnostic)
};

TwoTimeGrid two_time_g2_grid(const MomentSystem& sys, int mode_a, int mode_b,
                             std::span<const double> t_grid,
                             std::span<const double> tau_grid,
                             const OdeOptions& opt = {}, int workers = 0);

// Symmetric-function assembly G(t1, t2) from the two ordered grids. Both
// grids must share the same uniform step with tau starting at 0.
Eigen::MatrixXd symmetric_two_time(const TwoTimeGrid& ab, const TwoTimeGrid& ba);

// Time-integrated second-order correlations over the square [0,T]^2,
// obtained from one forward solve of the coupled system
//   dG_{a->b}/dT = [V_a]_{i_b},  dV_a/dT = M(T) V_a + C_a <c>,
//   d<c>/dT = M(T) <c>
// (and the mirrored set), with snapshots kept for the two-bin extension.
struct IntegratedCorrelators {
  int mode_a = 0, mode_b = 0;
  std::vector<double> T;
  std::vector<double> ordered_ab;  // G_{a->b}[0,T]
  std::vector<double> ordered_ba;  // G_{b->a}[0,T]
  std::vector<double> symmetric;   // sum of the two
  std::vector<double> pop_a;       // [V_a]_0 = integrated population of a
  std::vector<double> pop_b;
  std::vector<CVec> c_snap, va_snap, vb_snap;

  double horizon = 0;
  bool tail_converged = false;
  double total_ab = 0, total_ba = 0, total_symmetric = 0;
  double pop_a_total = 0, pop_b_total = 0;
  CVec c_end, va_end, vb_end;
};

// horizon_override = 0 uses the model horizon and enforces a relaxed tail
// (with one automatic extension). A positive override integrates exactly to
// that time and leaves tail assessment to the caller.
IntegratedCorrelators integrated_g2(const MomentSystem& sys, int mode_a, int mode_b,
                                    std::span<const double> T_grid,
                                    const OdeOptions& opt = {},
                                    double horizon_override = 0);

// Same-mode correlator chain up to order n_max from one stacked solve:
//   dV_(a)^k/dT = M(T) V_(a)^k + k C_a V_(a)^(k-1),   V_(a)^0 = <c>,
// with G^(k)[0,T] read off the identity component of V_(a)^k and
//   dG^(n)/dT = n [V_(a)^(n-1)]_{i_a}
// closing the chain.
struct HigherCorrelators {
  int mode = 0;
  int n_max = 1;
  std::vector<double> T;
  Eigen::MatrixXd g;            // (n_max) x T.size(); row k-1 holds G^(k)[0,T]
  std::vector<double> g_total;  // G^(k)[0,horizon], k = 1..n_max
  double horizon = 0;
  bool tail_converged = false;
};

HigherCorrelators integrated_gn(const MomentSystem& sys, int mode, int n_max,
                                std::span<const double> T_grid,
                                const OdeOptions& opt = {},
                                double horizon_override = 0);

// Early/Late decomposition of the integrated correlation at bin split T.
// With mode a assigned to t1 and mode b to t2:
//   ee = integral over [0,T]x[0,T]        (= symmetric G[0,T])
//   el = integral over t_a in [0,T], t_b in (T, horizon]
//   le = integral over t_a in (T, horizon], t_b in [0,T]
//   ll = remainder of the full square (by subtraction)
// el comes from integrating d/dtau G_{a->b}[0,T;tau] = [U_a]_{i_b} with
// dU_a/dtau = M(T+tau) U_a and U_a(0) = V_a(T); le mirrors it.
struct TwoBinCorrelators {
  int mode_a = 0, mode_b = 0;
  double T = 0;
  double ee = 0, el = 0, le = 0, ll = 0, total = 0;
  std::vector<double> tau;       // sample offsets
  std::vector<double> g_ab_tau;  // G_{a->b}[0,T;tau]
  std::vector<double> g_ba_tau;  // G_{b->a}[0,T;tau]
};

TwoBinCorrelators two_bin_extension(const MomentSystem& sys,
                                    const IntegratedCorrelators& integ,
                                    std::size_t t_index, const OdeOptions& opt = {},
                                    std::span<const double> tau_samples = {});

TwoBinCorrelators two_bin_extension(const MomentSystem& sys, int mode_a, int mode_b,
                                    double T, const OdeOptions& opt = {});

// Emission spectrum S(w) = Re int dt int dtau G1(t,tau) exp(i w tau) with
// G1(t,tau) = <sigma^dag(t+tau) sigma(t)>, evaluated by trapezoid quadrature
// over a (t, tau) grid fine enough for the fastest requested frequency.
// `init` overrides the initial moment vector (default: ground state).
struct Spectrum {
  std::vector<double> omega;
  std::vector<double> values;
  double dt = 0, dtau = 0, t_max = 0, tau_max = 0;
};

Spectrum spectrum(const MomentSystem& sys, std::span<const double> omega_grid,
                  const OdeOptions& opt = {}, const CVec* init = nullptr,
                  int workers = 0);

// Integrated mode populations [V_k]_0 = int_0^horizon <n_k> dt for all modes.
std::vector<double> integrated_populations(const MomentSystem& sys,
                                           const OdeOptions& opt = {});

// g2[0,T] = G_sym[0,T] / ([V_a]_0 [V_b]_0) at grid index ti.
double normalized_integrated_g2(const IntegratedCorrelators& integ, std::size_t ti);

// Normalized time-integrated cross-correlation of the two sensors at the
// horizon: (G_{a->b} + G_{b->a})[0,inf] / (int n_a dt * int n_b dt).
double normalized_g2_zero(const MomentSystem& sys, const OdeOptions& opt = {});

}  // namespace prf
