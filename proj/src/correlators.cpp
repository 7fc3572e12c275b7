#include "prf/correlators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "prf/sweep.hpp"
#include "prf/util.hpp"

namespace prf {

namespace {

double slowest_rate(const JointModel& m) {
  double r = m.tls().gamma_sigma;
  for (const auto& s : m.sensor_bank().sensors) r = std::min(r, s.linewidth);
  return r;
}

// Sample plan: the requested grid merged with a coarse monitor grid used for
// tail assessment. tag[i] >= 0 marks the position of a requested point.
struct SamplePlan {
  std::vector<double> times;
  std::vector<long> tag;
};

SamplePlan make_plan(std::span<const double> requested, double horizon) {
  for (std::size_t i = 0; i + 1 < requested.size(); ++i)
    if (requested[i + 1] <= requested[i])
      throw std::invalid_argument("T grid must be strictly ascending");
  if (!requested.empty() && requested.back() > horizon + 1e-9 * (1 + horizon))
    throw std::invalid_argument("T grid extends beyond the horizon");

  std::vector<std::pair<double, long>> pts;
  pts.reserve(requested.size() + 33);
  for (std::size_t i = 0; i < requested.size(); ++i)
    pts.emplace_back(std::min(requested[i], horizon), static_cast<long>(i));
  for (int k = 0; k <= 32; ++k)
    pts.emplace_back(horizon * k / 32.0, -1);
  std::sort(pts.begin(), pts.end());
  SamplePlan plan;
  for (auto& [t, tag] : pts) {
    if (!plan.times.empty() && t - plan.times.back() < 1e-12 * (1 + horizon)) {
      if (tag >= 0 && plan.tag.back() < 0) plan.tag.back() = tag;
      else if (tag >= 0) { plan.times.push_back(t); plan.tag.push_back(tag); }
      continue;
    }
    plan.times.push_back(t);
    plan.tag.push_back(tag);
  }
  return plan;
}

// Relaxed-tail test: every mode population at the end must be below 1e-6 of
// its running peak (modes that were never excited pass trivially).
class TailMonitor {
 public:
  explicit TailMonitor(int n_modes) : peak_(n_modes, 0.0), last_(n_modes, 0.0) {}
  void observe(const ObservableBasis& basis, const CVec& c) {
    for (std::size_t k = 0; k < peak_.size(); ++k) {
      double n = std::real(c[basis.number_index(static_cast<int>(k))]);
      peak_[k] = std::max(peak_[k], n);
      last_[k] = n;
    }
  }
  bool converged() const {
    for (std::size_t k = 0; k < peak_.size(); ++k) {
      if (peak_[k] < 1e-30) continue;
      if (last_[k] > 1e-6 * peak_[k]) return false;
    }
    return true;
  }

 private:
  std::vector<double> peak_, last_;
};

// Stacked state for the integrated-G2 system.
//   distinct modes: [c, V_a, V_b, G_ab, G_ba]
//   same mode:      [c, V_a, G_aa(ordered)]
struct G2Layout {
  int n = 0;
  bool same = false;
  int size() const { return same ? 2 * n + 1 : 3 * n + 2; }
  int off_va() const { return n; }
  int off_vb() const { return same ? n : 2 * n; }
  int off_gab() const { return same ? 2 * n : 3 * n; }
  int off_gba() const { return same ? 2 * n : 3 * n + 1; }
};

struct G2Rhs {
  const MomentSystem* s;
  G2Layout lay;
  int ia, ib;

  void operator()(double t, const CVec& y, CVec& dy) const {
    const int n = lay.n;
    const double w = s->model.pulse()(t);
    auto apply = [&](int off) {
      dy.segment(off, n).noalias() = s->m_static * y.segment(off, n);
      if (w != 0.0) dy.segment(off, n).noalias() += w * (s->m_drive * y.segment(off, n));
    };
    apply(0);
    apply(lay.off_va());
    dy.segment(lay.off_va(), n).noalias() += s->sandwich[lay_mode_a] * y.segment(0, n);
    if (!lay.same) {
      apply(lay.off_vb());
      dy.segment(lay.off_vb(), n).noalias() += s->sandwich[lay_mode_b] * y.segment(0, n);
      dy[lay.off_gab()] = y[lay.off_va() + ib];
      dy[lay.off_gba()] = y[lay.off_vb() + ia];
    } else {
      dy[lay.off_gab()] = y[lay.off_va() + ia];
    }
  }

  int lay_mode_a = 0, lay_mode_b = 0;
};

}  // namespace

IntegratedCorrelators integrated_g2(const MomentSystem& sys, int mode_a, int mode_b,
                                    std::span<const double> T_grid,
                                    const OdeOptions& opt, double horizon_override) {
  const bool fixed_horizon = horizon_override > 0;
  double horizon = fixed_horizon ? horizon_override : sys.model.horizon();

  for (int attempt = 0;; ++attempt) {
    const G2Layout lay{sys.basis.size, mode_a == mode_b};
    G2Rhs rhs{&sys, lay, sys.basis.number_index(mode_a),
              sys.basis.number_index(mode_b), mode_a, mode_b};

    IntegratedCorrelators out;
    out.mode_a = mode_a;
    out.mode_b = mode_b;
    out.horizon = horizon;
    out.T.assign(T_grid.begin(), T_grid.end());
    const auto nT = T_grid.size();
    out.ordered_ab.resize(nT);
    out.ordered_ba.resize(nT);
    out.symmetric.resize(nT);
    out.pop_a.resize(nT);
    out.pop_b.resize(nT);
    out.c_snap.resize(nT);
    out.va_snap.resize(nT);
    out.vb_snap.resize(nT);

    auto plan = make_plan(T_grid, horizon);
    TailMonitor tail(sys.model.n_modes());

    CVec y0 = CVec::Zero(lay.size());
    y0.segment(0, lay.n) = sys.ground_moments();

    integrate_sampled(rhs, 0.0, y0, horizon, plan.times, opt,
                      [&](std::size_t i, double, const CVec& y) {
                        tail.observe(sys.basis, y.segment(0, lay.n));
                        long tag = plan.tag[i];
                        bool is_last = (i + 1 == plan.times.size());
                        if (tag < 0 && !is_last) return;
                        double gab = std::real(y[lay.off_gab()]);
                        double gba = std::real(y[lay.off_gba()]);
                        double pa = std::real(y[lay.off_va()]);
                        double pb = lay.same ? pa : std::real(y[lay.off_vb()]);
                        if (tag >= 0) {
                          auto j = static_cast<std::size_t>(tag);
                          out.ordered_ab[j] = gab;
                          out.ordered_ba[j] = gba;
                          out.symmetric[j] = gab + gba;
                          out.pop_a[j] = pa;
                          out.pop_b[j] = pb;
                          out.c_snap[j] = y.segment(0, lay.n);
                          out.va_snap[j] = y.segment(lay.off_va(), lay.n);
                          out.vb_snap[j] = y.segment(lay.off_vb(), lay.n);
                        }
                        if (is_last) {
                          out.total_ab = gab;
                          out.total_ba = gba;
                          out.total_symmetric = gab + gba;
                          out.pop_a_total = pa;
                          out.pop_b_total = pb;
                          out.c_end = y.segment(0, lay.n);
                          out.va_end = y.segment(lay.off_va(), lay.n);
                          out.vb_end = y.segment(lay.off_vb(), lay.n);
                        }
                      });

    out.tail_converged = tail.converged();
    if (fixed_horizon || out.tail_converged) return out;
    if (attempt == 0) {
      horizon += 16.0 / slowest_rate(sys.model);
      continue;
    }
    throw ConvergenceError(
        "integrated correlators: residual excitation at the extended horizon");
  }
}

namespace {

// Stacked state for the same-mode chain: [c, V^1 .. V^(n_max-1), G^(n_max)].
struct GnRhs {
  const MomentSystem* s;
  int mode, n, n_max, ia;

  void operator()(double t, const CVec& y, CVec& dy) const {
    const double w = s->model.pulse()(t);
    const CMat& ca = s->sandwich[mode];
    for (int k = 0; k < n_max; ++k) {
      const int off = k * n;
      dy.segment(off, n).noalias() = s->m_static * y.segment(off, n);
      if (w != 0.0)
        dy.segment(off, n).noalias() += w * (s->m_drive * y.segment(off, n));
      if (k > 0)
        dy.segment(off, n).noalias() +=
            static_cast<double>(k) * (ca * y.segment(off - n, n));
    }
    dy[n_max * n] = static_cast<double>(n_max) * y[(n_max - 1) * n + ia];
  }
};

}  // namespace

HigherCorrelators integrated_gn(const MomentSystem& sys, int mode, int n_max,
                                std::span<const double> T_grid,
                                const OdeOptions& opt, double horizon_override) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const bool fixed_horizon = horizon_override > 0;
  double horizon = fixed_horizon ? horizon_override : sys.model.horizon();

  for (int attempt = 0;; ++attempt) {
    const int n = sys.basis.size;
    GnRhs rhs{&sys, mode, n, n_max, sys.basis.number_index(mode)};

    HigherCorrelators out;
    out.mode = mode;
    out.n_max = n_max;
    out.horizon = horizon;
    out.T.assign(T_grid.begin(), T_grid.end());
    out.g.setZero(n_max, static_cast<Eigen::Index>(T_grid.size()));
    out.g_total.assign(n_max, 0.0);

    auto plan = make_plan(T_grid, horizon);
    TailMonitor tail(sys.model.n_modes());

    CVec y0 = CVec::Zero(n_max * n + 1);
    y0.segment(0, n) = sys.ground_moments();

    auto read = [&](const CVec& y, int k) {  // G^(k)[0,T], k = 1..n_max
      if (k < n_max) return std::real(y[k * n]);
      return std::real(y[n_max * n]);
    };

    integrate_sampled(rhs, 0.0, y0, horizon, plan.times, opt,
                      [&](std::size_t i, double, const CVec& y) {
                        tail.observe(sys.basis, y.segment(0, n));
                        long tag = plan.tag[i];
                        if (tag >= 0)
                          for (int k = 1; k <= n_max; ++k)
                            out.g(k - 1, tag) = read(y, k);
                        if (i + 1 == plan.times.size())
                          for (int k = 1; k <= n_max; ++k)
                            out.g_total[k - 1] = read(y, k);
                      });

    out.tail_converged = tail.converged();
    if (fixed_horizon || out.tail_converged) return out;
    if (attempt == 0) {
      horizon += 16.0 / slowest_rate(sys.model);
      continue;
    }
    throw ConvergenceError(
        "integrated correlators: residual excitation at the extended horizon");
  }
}

namespace {

// tau-propagation of the two-bin system: [U_a, U_b, g_el, g_le] (same-mode
// case drops the mirrored half).
struct TwoBinRhs {
  const MomentSystem* s;
  double t_split;
  int n, ia, ib;
  bool same;

  void operator()(double tau, const CVec& y, CVec& dy) const {
    const double w = s->model.pulse()(t_split + tau);
    auto apply = [&](int off) {
      dy.segment(off, n).noalias() = s->m_static * y.segment(off, n);
      if (w != 0.0) dy.segment(off, n).noalias() += w * (s->m_drive * y.segment(off, n));
    };
    apply(0);
    if (same) {
      dy[n] = y[ib];
    } else {
      apply(n);
      dy[2 * n] = y[ib];
      dy[2 * n + 1] = y[n + ia];
    }
  }
};

}  // namespace

TwoBinCorrelators two_bin_extension(const MomentSystem& sys,
                                    const IntegratedCorrelators& integ,
                                    std::size_t t_index, const OdeOptions& opt,
                                    std::span<const double> tau_samples) {
  const int n = sys.basis.size;
  const bool same = integ.mode_a == integ.mode_b;
  const double T = integ.T.at(t_index);
  const double tau_max = integ.horizon - T;

  TwoBinCorrelators out;
  out.mode_a = integ.mode_a;
  out.mode_b = integ.mode_b;
  out.T = T;
  out.ee = integ.symmetric[t_index];
  out.total = integ.total_symmetric;

  if (tau_max <= 1e-12 * integ.horizon) {  // split at the horizon: all Early
    out.el = out.le = 0;
    out.ll = out.total - out.ee;
    return out;
  }

  TwoBinRhs rhs{&sys, T, n, sys.basis.number_index(integ.mode_a),
                sys.basis.number_index(integ.mode_b), same};
  CVec y0 = CVec::Zero(same ? n + 1 : 2 * n + 2);
  y0.segment(0, n) = integ.va_snap[t_index];
  if (!same) y0.segment(n, n) = integ.vb_snap[t_index];

  std::vector<double> samples(tau_samples.begin(), tau_samples.end());
  if (samples.empty() || samples.back() < tau_max) samples.push_back(tau_max);

  out.tau.reserve(samples.size());
  out.g_ab_tau.reserve(samples.size());
  out.g_ba_tau.reserve(samples.size());

  CVec y_end;
  integrate_sampled(rhs, 0.0, y0, tau_max, samples, opt,
                    [&](std::size_t i, double tau, const CVec& y) {
                      double gel = std::real(y[same ? n : 2 * n]);
                      double gle = same ? gel : std::real(y[2 * n + 1]);
                      out.tau.push_back(tau);
                      out.g_ab_tau.push_back(integ.ordered_ab[t_index] + gel);
                      out.g_ba_tau.push_back(integ.ordered_ba[t_index] + gle);
                      if (i + 1 == samples.size()) {
                        out.el = gel;
                        out.le = gle;
                        y_end = y;
                      }
                    });

  // The tau integrand must have relaxed: |dU/dtau| small relative to U.
  CVec du(y_end.size());
  rhs(tau_max, y_end, du);
  double unorm = std::max(y0.segment(0, n).cwiseAbs().maxCoeff(),
                          y_end.segment(0, n).cwiseAbs().maxCoeff());
  double dnorm = du.segment(0, same ? n : 2 * n).cwiseAbs().maxCoeff();
  if (unorm > 1e-30 && dnorm > 1e-10 * unorm && integ.tail_converged)
    throw ConvergenceError("two-bin extension: U vector still evolving at horizon");

  out.ll = out.total - out.ee - out.el - out.le;
  return out;
}

TwoBinCorrelators two_bin_extension(const MomentSystem& sys, int mode_a, int mode_b,
                                    double T, const OdeOptions& opt) {
  std::vector<double> grid{T};
  auto integ = integrated_g2(sys, mode_a, mode_b, grid, opt);
  return two_bin_extension(sys, integ, 0, opt);
}

TwoTimeGrid two_time_g2_grid(const MomentSystem& sys, int mode_a, int mode_b,
                             std::span<const double> t_grid,
                             std::span<const double> tau_grid,
                             const OdeOptions& opt, int workers) {
  if (t_grid.empty() || tau_grid.empty())
    throw std::invalid_argument("empty grid");
  TwoTimeGrid out;
  out.mode_a = mode_a;
  out.mode_b = mode_b;
  out.t.assign(t_grid.begin(), t_grid.end());
  out.tau.assign(tau_grid.begin(), tau_grid.end());
  out.values.setZero(static_cast<Eigen::Index>(t_grid.size()),
                     static_cast<Eigen::Index>(tau_grid.size()));

  // one-time averages at every t row
  auto base = propagate_moments(sys, sys.ground_moments(), 0.0,
                                t_grid.back() + 1e-12, t_grid, opt);

  const int ib = sys.basis.number_index(mode_b);
  const double tau_end = tau_grid.back();
  std::vector<double> max_imag(t_grid.size(), 0.0);

  parallel_for_indexed(t_grid.size(), workers, [&](std::size_t i) {
    const double t_row = out.t[i];
    CVec v0 = sys.sandwich[mode_a] * base.values.col(static_cast<Eigen::Index>(i));
    if (v0.cwiseAbs().maxCoeff() < 1e-300) return;  // nothing excited yet
    auto rhs = [&sys, t_row](double tau, const CVec& y, CVec& dy) {
      sys.apply_m(t_row + tau, y, dy);
    };
    if (tau_end <= 0) {
      out.values(static_cast<Eigen::Index>(i), 0) = std::real(v0[ib]);
      return;
    }
    integrate_sampled(rhs, 0.0, v0, tau_end, out.tau, opt,
                      [&](std::size_t j, double, const CVec& y) {
                        out.values(static_cast<Eigen::Index>(i),
                                   static_cast<Eigen::Index>(j)) = std::real(y[ib]);
                        max_imag[i] = std::max(max_imag[i], std::abs(std::imag(y[ib])));
                      });
  });
  out.max_imag = *std::max_element(max_imag.begin(), max_imag.end());
  return out;
}

Eigen::MatrixXd symmetric_two_time(const TwoTimeGrid& ab, const TwoTimeGrid& ba) {
  const auto nt = ab.t.size();
  if (ba.t.size() != nt || ab.tau.size() != ba.tau.size())
    throw std::invalid_argument("mismatched ordered grids");
  if (ab.tau.size() < nt)
    throw std::invalid_argument("tau grid must cover the full t range");
  const double h = nt > 1 ? ab.t[1] - ab.t[0] : 1.0;
  for (std::size_t i = 1; i < nt; ++i)
    if (std::abs(ab.t[i] - ab.t[i - 1] - h) > 1e-9 * h)
      throw std::invalid_argument("t grid must be uniform");
  for (std::size_t j = 1; j < ab.tau.size(); ++j)
    if (std::abs(ab.tau[j] - ab.tau[j - 1] - h) > 1e-9 * h)
      throw std::invalid_argument("tau grid must match the t step");
  if (std::abs(ab.tau.front()) > 1e-12)
    throw std::invalid_argument("tau grid must start at 0");

  Eigen::MatrixXd g(nt, nt);
  for (std::size_t i = 0; i < nt; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      g(i, j) = j >= i ? ab.values(i, j - i) : ba.values(j, i - j);
  return g;
}

Spectrum spectrum(const MomentSystem& sys, std::span<const double> omega_grid,
                  const OdeOptions& opt, const CVec* init, int workers) {
  if (omega_grid.empty()) throw std::invalid_argument("empty frequency grid");
  const double gamma = sys.model.tls().gamma_sigma;
  double w_max = 0;
  for (double w : omega_grid) w_max = std::max(w_max, std::abs(w));

  Spectrum out;
  out.omega.assign(omega_grid.begin(), omega_grid.end());
  out.t_max = sys.model.horizon();
  out.tau_max = 28.0 / gamma;
  out.dtau = std::min(0.02 / gamma, w_max > 0 ? 2.0 * M_PI / (20.0 * w_max)
                                              : std::numeric_limits<double>::max());
  out.dt = std::min(sys.model.pulse().tau_d / 10.0, 0.02 / gamma);

  const int n_t = static_cast<int>(std::ceil(out.t_max / out.dt)) + 1;
  const int n_tau = static_cast<int>(std::ceil(out.tau_max / out.dtau)) + 1;
  auto t_grid = linspace(0.0, out.t_max, n_t);
  auto tau_grid = linspace(0.0, out.tau_max, n_tau);
  auto wt = trapezoid_weights(t_grid);
  auto wtau = trapezoid_weights(tau_grid);

  CVec y0 = init ? *init : sys.ground_moments();
  auto base = propagate_moments(sys, y0, 0.0, out.t_max, t_grid, opt);

  // row seeds: v(t,0) = expansion of c * sigma against <c(t)>
  const CMat seed_map =
      sys.expander.product_map(CMat::Identity(sys.model.dim(), sys.model.dim()),
                               sys.model.lowering(0));
  const int i_raise = sys.basis.raising_index(0);

  // A(tau) = int dt G1(t,tau), accumulated serially in fixed chunks so the
  // result does not depend on the worker count.
  CVec acc = CVec::Zero(n_tau);
  const int chunk = 64;
  Eigen::MatrixXcd rows(chunk, n_tau);
  for (int start = 0; start < n_t; start += chunk) {
    const int m = std::min(chunk, n_t - start);
    rows.setZero();
    parallel_for_indexed(static_cast<std::size_t>(m), workers, [&](std::size_t r) {
      const int i = start + static_cast<int>(r);
      const double t_row = t_grid[i];
      CVec v0 = seed_map * base.values.col(i);
      if (v0.cwiseAbs().maxCoeff() < 1e-300) return;
      auto rhs = [&sys, t_row](double tau, const CVec& y, CVec& dy) {
        sys.apply_m(t_row + tau, y, dy);
      };
      integrate_sampled(rhs, 0.0, v0, out.tau_max, tau_grid, opt,
                        [&](std::size_t j, double, const CVec& y) {
                          rows(static_cast<Eigen::Index>(r),
                               static_cast<Eigen::Index>(j)) = y[i_raise];
                        });
    });
    for (int r = 0; r < m; ++r) acc += wt[start + r] * rows.row(r).transpose();
  }

  out.values.resize(out.omega.size());
  for (std::size_t k = 0; k < out.omega.size(); ++k) {
    Complex s = 0;
    for (int j = 0; j < n_tau; ++j)
      s += wtau[j] * acc[j] * std::exp(Complex(0, out.omega[k] * tau_grid[j]));
    out.values[k] = std::real(s);
  }
  return out;
}

std::vector<double> integrated_populations(const MomentSystem& sys,
                                           const OdeOptions& opt) {
  const int n = sys.basis.size;
  const int nm = sys.model.n_modes();
  const double horizon = sys.model.horizon();

  // [c, integral of each mode population]
  auto rhs = [&sys, n, nm](double t, const CVec& y, CVec& dy) {
    dy.segment(0, n).noalias() = sys.m_static * y.segment(0, n);
    double w = sys.model.pulse()(t);
    if (w != 0.0) dy.segment(0, n).noalias() += w * (sys.m_drive * y.segment(0, n));
    for (int k = 0; k < nm; ++k) dy[n + k] = y[sys.basis.number_index(k)];
  };
  CVec y0 = CVec::Zero(n + nm);
  y0.segment(0, n) = sys.ground_moments();
  CVec y_end = integrate_to(rhs, 0.0, y0, horizon, opt);
  std::vector<double> pops(nm);
  for (int k = 0; k < nm; ++k) pops[k] = std::real(y_end[n + k]);
  return pops;
}

double normalized_integrated_g2(const IntegratedCorrelators& integ, std::size_t ti) {
  double denom = integ.pop_a[ti] * integ.pop_b[ti];
  if (denom <= 0 || !std::isfinite(denom))
    throw DegenerateInputError("normalized g2: empty bin (zero integrated population)");
  return integ.symmetric[ti] / denom;
}

double normalized_g2_zero(const MomentSystem& sys, const OdeOptions& opt) {
  if (sys.model.n_modes() != 3)
    throw std::invalid_argument("normalized_g2_zero needs two sensors");
  auto integ = integrated_g2(sys, 1, 2, {}, opt);
  double denom = integ.pop_a_total * integ.pop_b_total;
  if (denom <= 0 || !std::isfinite(denom))
    throw DegenerateInputError("normalized g2: sensor never populated");
  return integ.total_symmetric / denom;
}

}  // namespace prf
