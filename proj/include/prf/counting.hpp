#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "prf/correlators.hpp"

namespace prf {

// Rate attached to a sensor's time-integrated intensity operator.
//   physical: gamma_sigma * (Gamma / (2 epsilon))^2 -- counts the photons
//             passing the filter (epsilon-independent as epsilon -> 0).
//   click:    Gamma -- counts the sensor's own emission events, the process
//             a jump unraveling samples directly.
// The two coincide when epsilon = sqrt(gamma_sigma * Gamma) / 2.
enum class SensorRateConvention { physical, click };

double sensor_detection_rate(const JointModel& model, int sensor_mode,
                             SensorRateConvention conv);

// Normal-ordered moments of the time-integrated intensity operators with the
// timeline split at T into Early [0,T] and Late (T, inf) bins. Indices 0/1
// address the participating modes; wel[i][j] = <: O_{i,E} O_{j,L} :>.
struct IntensityMoments {
  double T = 0;
  int n_modes = 1;
  std::array<double, 2> rate{1.0, 1.0};
  std::array<double, 2> w_e{}, w_l{}, w_tot{};
  double wee[2][2]{};
  double wel[2][2]{};
  double wll[2][2]{};
  std::vector<double> w_pow;  // <: Omega^n :>, n = 1.., mode-0 totals
};

// One mode: auto-correlations of `auto_corr` and its two-bin split at the
// same T. Pure total moments for the photon-number distribution come from a
// same-mode correlator chain when provided.
IntensityMoments intensity_moments_one_mode(const IntegratedCorrelators& auto_corr,
                                            const TwoBinCorrelators& bins,
                                            std::size_t t_index, double rate,
                                            const HigherCorrelators* totals = nullptr);

// Two modes: the three pair splits (aa, bb, ab) at one common T plus the
// populations carried by the cross correlator.
IntensityMoments intensity_moments_two_mode(const IntegratedCorrelators& cross,
                                            std::size_t t_index,
                                            const TwoBinCorrelators& bins_aa,
                                            const TwoBinCorrelators& bins_bb,
                                            const TwoBinCorrelators& bins_ab,
                                            const IntegratedCorrelators& auto_a,
                                            const IntegratedCorrelators& auto_b,
                                            double rate_a, double rate_b);

struct BinProbabilities {
  int order = 2;  // truncation N
  std::map<std::pair<int, int>, double> p_mn;
  std::vector<double> p_n;  // totals, index n = 0..order
  double clamp_residual = 0;
  bool converged = true;

  double mn(int m, int n) const;
};

// Photon-number distribution P_0..P_N from the truncated Mandel series
//   P_n = (1/n!) sum_k (-1)^k / k! <: Omega^(n+k) :>
// with the vacuum closed as P_0 = 1 - sum_{n>=1} P_n.
BinProbabilities pn_from_moments(const IntensityMoments& m, int order);

// One mode, two bins, with events beyond two photons discarded.
BinProbabilities pmn_one_mode_2pa(const IntensityMoments& m);

// Two modes, two bins, two-photon truncation. Keys are (m_a, n_a, m_b, n_b).
struct TwoModeProbabilities {
  std::map<std::array<int, 4>, double> p;
  double clamp_residual = 0;

  // Collapse onto total Early count m = m_a + m_b and Late count n.
  BinProbabilities collapsed() const;
};

TwoModeProbabilities two_mode_2pa(const IntensityMoments& m);

struct Purities {
  std::map<std::pair<int, int>, double> pi;
  double mn(int m, int n) const;
};

// Vacuum-removed renormalization pi_mn = P_mn / sum_{m+n>0} P_mn.
Purities purities(const BinProbabilities& p);

// Fraction of the total emitter flux that a single filter captures,
// gamma_f * int <n_sensor> dt / (gamma_sigma * int <n_emitter> dt) with the
// physical rate normalization.
double filtered_flux_fraction(const MomentSystem& sys, int sensor_mode = 1,
                              const OdeOptions& opt = {});

}  // namespace prf
