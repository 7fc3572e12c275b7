#include "prf/counting.hpp"

#include <cmath>
#include <stdexcept>

namespace prf {

namespace {

double factorial(int n) {
  double f = 1;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

// Clamp tiny truncation negatives to zero, accumulating the residual.
void clamp(double& p, double& residual) {
  if (p < 0) {
    residual += p;
    p = 0;
  }
}

void check_residual(double residual) {
  if (std::abs(residual) > 1e-4)
    throw ConvergenceError(
        "photon-counting truncation produced probabilities below -1e-4; "
        "increase the truncation order");
}

}  // namespace

double sensor_detection_rate(const JointModel& model, int sensor_mode,
                             SensorRateConvention conv) {
  if (sensor_mode < 1 || sensor_mode >= model.n_modes())
    throw std::invalid_argument("sensor_detection_rate: not a sensor mode");
  const double gamma = model.tls().gamma_sigma;
  const double width = model.decay_rate(sensor_mode);
  if (conv == SensorRateConvention::click) return width;
  const double eps = model.sensor_bank().epsilon;
  double q = width / (2.0 * eps);
  return gamma * q * q;
}

IntensityMoments intensity_moments_one_mode(const IntegratedCorrelators& auto_corr,
                                            const TwoBinCorrelators& bins,
                                            std::size_t t_index, double rate,
                                            const HigherCorrelators* totals) {
  if (auto_corr.mode_a != auto_corr.mode_b)
    throw std::invalid_argument("one-mode moments need an autocorrelation");
  if (std::abs(bins.T - auto_corr.T.at(t_index)) > 1e-9 * (1 + bins.T))
    throw std::invalid_argument("bin split and correlator grid disagree");

  IntensityMoments m;
  m.T = bins.T;
  m.n_modes = 1;
  m.rate = {rate, 0.0};
  m.w_e[0] = rate * auto_corr.pop_a[t_index];
  m.w_tot[0] = rate * auto_corr.pop_a_total;
  m.w_l[0] = m.w_tot[0] - m.w_e[0];
  const double r2 = rate * rate;
  m.wee[0][0] = r2 * bins.ee;
  m.wel[0][0] = r2 * bins.el;
  m.wll[0][0] = r2 * bins.ll;
  if (totals) {
    m.w_pow.resize(totals->n_max);
    double rn = 1;
    for (int k = 1; k <= totals->n_max; ++k) {
      rn *= rate;
      m.w_pow[k - 1] = rn * totals->g_total[k - 1];
    }
  } else {
    m.w_pow = {m.w_tot[0], r2 * auto_corr.total_symmetric};
  }
  return m;
}

IntensityMoments intensity_moments_two_mode(const IntegratedCorrelators& cross,
                                            std::size_t t_index,
                                            const TwoBinCorrelators& bins_aa,
                                            const TwoBinCorrelators& bins_bb,
                                            const TwoBinCorrelators& bins_ab,
                                            const IntegratedCorrelators& auto_a,
                                            const IntegratedCorrelators& auto_b,
                                            double rate_a, double rate_b) {
  const double T = cross.T.at(t_index);
  for (const auto* bins : {&bins_aa, &bins_bb, &bins_ab})
    if (std::abs(bins->T - T) > 1e-9 * (1 + T))
      throw std::invalid_argument("bin splits disagree across mode pairs");

  IntensityMoments m;
  m.T = T;
  m.n_modes = 2;
  m.rate = {rate_a, rate_b};
  m.w_e = {rate_a * cross.pop_a[t_index], rate_b * cross.pop_b[t_index]};
  m.w_tot = {rate_a * cross.pop_a_total, rate_b * cross.pop_b_total};
  m.w_l = {m.w_tot[0] - m.w_e[0], m.w_tot[1] - m.w_e[1]};

  m.wee[0][0] = rate_a * rate_a * bins_aa.ee;
  m.wel[0][0] = rate_a * rate_a * bins_aa.el;
  m.wll[0][0] = rate_a * rate_a * bins_aa.ll;
  m.wee[1][1] = rate_b * rate_b * bins_bb.ee;
  m.wel[1][1] = rate_b * rate_b * bins_bb.el;
  m.wll[1][1] = rate_b * rate_b * bins_bb.ll;

  const double rab = rate_a * rate_b;
  m.wee[0][1] = m.wee[1][0] = rab * bins_ab.ee;
  m.wll[0][1] = m.wll[1][0] = rab * bins_ab.ll;
  m.wel[0][1] = rab * bins_ab.el;  // a Early, b Late
  m.wel[1][0] = rab * bins_ab.le;  // b Early, a Late
  return m;
}

double BinProbabilities::mn(int m, int n) const {
  auto it = p_mn.find({m, n});
  return it == p_mn.end() ? 0.0 : it->second;
}

BinProbabilities pn_from_moments(const IntensityMoments& m, int order) {
  if (order < 1) throw std::invalid_argument("order must be >= 1");
  if (static_cast<int>(m.w_pow.size()) < order)
    throw std::invalid_argument("moments available below the requested order");

  BinProbabilities out;
  out.order = order;
  out.p_n.assign(order + 1, 0.0);
  for (int n = 1; n <= order; ++n) {
    double p = 0;
    for (int k = 0; n + k <= order; ++k)
      p += ((k % 2) ? -1.0 : 1.0) / factorial(k) * m.w_pow[n + k - 1];
    p /= factorial(n);
    clamp(p, out.clamp_residual);
    out.p_n[n] = p;
  }
  double tail = 0;
  for (int n = 1; n <= order; ++n) tail += out.p_n[n];
  out.p_n[0] = 1.0 - tail;
  clamp(out.p_n[0], out.clamp_residual);
  check_residual(out.clamp_residual);
  if (out.p_n[order] > 1e-3) out.converged = false;
  return out;
}

BinProbabilities pmn_one_mode_2pa(const IntensityMoments& m) {
  BinProbabilities out;
  out.order = 2;
  double& res = out.clamp_residual;

  double p20 = 0.5 * m.wee[0][0];
  double p11 = m.wel[0][0];
  double p02 = 0.5 * m.wll[0][0];
  double p10 = m.w_e[0] - m.wee[0][0] - m.wel[0][0];
  double p01 = m.w_l[0] - m.wll[0][0] - m.wel[0][0];
  for (double* p : {&p20, &p11, &p02, &p10, &p01}) clamp(*p, res);
  double p00 = 1.0 - (p20 + p11 + p02 + p10 + p01);
  clamp(p00, res);
  check_residual(res);

  out.p_mn = {{{0, 0}, p00}, {{1, 0}, p10}, {{0, 1}, p01},
              {{2, 0}, p20}, {{1, 1}, p11}, {{0, 2}, p02}};
  out.p_n = {p00, p10 + p01, p20 + p11 + p02};
  return out;
}

TwoModeProbabilities two_mode_2pa(const IntensityMoments& m) {
  if (m.n_modes != 2)
    throw std::invalid_argument("two_mode_2pa needs two-mode moments");
  if (m.w_tot[0] <= 0 && m.w_tot[1] <= 0)
    throw DegenerateInputError("two_mode_2pa: no filtered flux");

  TwoModeProbabilities out;
  double& res = out.clamp_residual;
  auto put = [&](int ma, int na, int mb, int nb, double v) {
    clamp(v, res);
    out.p[{ma, na, mb, nb}] = v;
  };

  put(2, 0, 0, 0, 0.5 * m.wee[0][0]);
  put(0, 2, 0, 0, 0.5 * m.wll[0][0]);
  put(0, 0, 2, 0, 0.5 * m.wee[1][1]);
  put(0, 0, 0, 2, 0.5 * m.wll[1][1]);
  put(1, 1, 0, 0, m.wel[0][0]);
  put(1, 0, 1, 0, m.wee[0][1]);
  put(1, 0, 0, 1, m.wel[0][1]);
  put(0, 1, 1, 0, m.wel[1][0]);
  put(0, 1, 0, 1, m.wll[0][1]);
  put(0, 0, 1, 1, m.wel[1][1]);

  put(1, 0, 0, 0,
      m.w_e[0] - m.wee[0][0] - m.wel[0][0] - m.wee[0][1] - m.wel[0][1]);
  put(0, 1, 0, 0,
      m.w_l[0] - m.wll[0][0] - m.wel[0][0] - m.wel[1][0] - m.wll[0][1]);
  put(0, 0, 1, 0,
      m.w_e[1] - m.wee[1][1] - m.wee[0][1] - m.wel[1][0] - m.wel[1][1]);
  put(0, 0, 0, 1,
      m.w_l[1] - m.wll[1][1] - m.wel[0][1] - m.wll[0][1] - m.wel[1][1]);

  double sum = 0;
  for (const auto& [k, v] : out.p) sum += v;
  double p0 = 1.0 - sum;
  clamp(p0, res);
  out.p[{0, 0, 0, 0}] = p0;
  check_residual(res);
  return out;
}

BinProbabilities TwoModeProbabilities::collapsed() const {
  BinProbabilities out;
  out.order = 2;
  out.clamp_residual = clamp_residual;
  for (const auto& [k, v] : p) {
    int m = k[0] + k[2], n = k[1] + k[3];
    out.p_mn[{m, n}] += v;
  }
  out.p_n.assign(3, 0.0);
  for (const auto& [k, v] : out.p_mn)
    if (k.first + k.second <= 2) out.p_n[k.first + k.second] += v;
  return out;
}

double Purities::mn(int m, int n) const {
  auto it = pi.find({m, n});
  return it == pi.end() ? 0.0 : it->second;
}

Purities purities(const BinProbabilities& p) {
  double nonvac = 0;
  for (const auto& [k, v] : p.p_mn)
    if (k.first + k.second > 0) nonvac += v;
  if (nonvac <= 0)
    throw DegenerateInputError("purities: all probability in the vacuum outcome");
  Purities out;
  for (const auto& [k, v] : p.p_mn)
    if (k.first + k.second > 0) out.pi[k] = v / nonvac;
  return out;
}

double filtered_flux_fraction(const MomentSystem& sys, int sensor_mode,
                              const OdeOptions& opt) {
  auto pops = integrated_populations(sys, opt);
  const double bare =
      sys.model.tls().gamma_sigma * pops.at(0);
  if (bare <= 0)
    throw DegenerateInputError("filtered_flux_fraction: emitter never excited");
  const double filtered =
      sensor_detection_rate(sys.model, sensor_mode, SensorRateConvention::physical) *
      pops.at(sensor_mode);
  return filtered / bare;
}

}  // namespace prf
