#include "prf/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace prf {

namespace {

CMat local_factor(int code) {
  CMat m = CMat::Zero(2, 2);
  switch (code) {
    case 0: return CMat::Identity(2, 2);
    case 1: m(0, 1) = 1.0; return m;             // lowering
    case 2: m(1, 0) = 1.0; return m;             // raising
    case 3: m(1, 1) = 1.0; return m;             // number
    default: throw std::logic_error("bad factor code");
  }
}

Eigen::Map<const CVec> vec_view(const CMat& m) {
  return Eigen::Map<const CVec>(m.data(), m.size());
}

}  // namespace

ObservableBasis ObservableBasis::build(const JointModel& model) {
  ObservableBasis b;
  b.n_modes = model.n_modes();
  if (b.n_modes > 3) throw std::invalid_argument("at most three qubit modes");
  b.dim = model.dim();
  b.size = 1;
  for (int k = 0; k < b.n_modes; ++k) b.size *= 4;
  return b;
}

std::array<int, 3> ObservableBasis::digits(int index) const {
  std::array<int, 3> d{0, 0, 0};
  for (int k = 0; k < n_modes; ++k) {
    d[k] = index % 4;
    index /= 4;
  }
  return d;
}

int ObservableBasis::index_of(const std::array<int, 3>& digits) const {
  int idx = 0;
  for (int k = n_modes - 1; k >= 0; --k) idx = idx * 4 + digits[k];
  return idx;
}

CMat ObservableBasis::op_matrix(int index) const {
  auto d = digits(index);
  CMat out = CMat::Identity(1, 1);
  for (int k = 0; k < n_modes; ++k) out = kron(out, local_factor(d[k]));
  return out;
}

OperatorExpander::OperatorExpander(const ObservableBasis& basis) : basis_(&basis) {
  const int n = basis.size;
  ops_.reserve(n);
  CMat b(n, n);  // n == dim^2, columns are vectorized basis elements
  for (int j = 0; j < n; ++j) {
    ops_.push_back(basis.op_matrix(j));
    b.col(j) = vec_view(ops_[j]);
  }
  lu_ = Eigen::PartialPivLU<CMat>(b);
}

CVec OperatorExpander::expand(const CMat& x) const {
  return lu_.solve(vec_view(x));
}

CMat OperatorExpander::product_map(const CMat& a, const CMat& b) const {
  const int n = basis_->size;
  CMat map(n, n);
  for (int i = 0; i < n; ++i) map.row(i) = expand(a * ops_[i] * b).transpose();
  return map;
}

MomentSystem MomentSystem::build(const JointModel& model) {
  ObservableBasis basis = ObservableBasis::build(model);
  OperatorExpander expander(basis);

  const int n = basis.size;
  const CMat& hs = model.hamiltonian_static();
  const CMat& hd = model.hamiltonian_drive();
  CMat m_static(n, n), m_drive(n, n);
  const Complex i1(0, 1);
  for (int i = 0; i < n; ++i) {
    CMat x = basis.op_matrix(i);
    // adjoint generator: d<X>/dt = <i[H,X] + sum_c (r_c/2)(2 c^dag X c
    // - c^dag c X - X c^dag c)>
    CMat ax = i1 * (hs * x - x * hs);
    for (int k = 0; k < model.n_modes(); ++k) {
      const CMat& c = model.lowering(k);
      CMat cd = c.adjoint();
      CMat cdc = cd * c;
      ax += 0.5 * model.decay_rate(k) * (2.0 * cd * x * c - cdc * x - x * cdc);
    }
    m_static.row(i) = expander.expand(ax).transpose();
    m_drive.row(i) = expander.expand(i1 * (hd * x - x * hd)).transpose();
  }

  std::vector<CMat> sandwich;
  sandwich.reserve(model.n_modes());
  for (int k = 0; k < model.n_modes(); ++k) {
    const CMat& a = model.lowering(k);
    sandwich.push_back(expander.product_map(a.adjoint(), a));
  }

  return MomentSystem{model, basis, std::move(m_static), std::move(m_drive),
                      std::move(sandwich), std::move(expander)};
}

CVec MomentSystem::ground_moments() const {
  CVec v = CVec::Zero(basis.size);
  v[0] = 1.0;  // every non-identity product annihilates the joint ground state
  return v;
}

CVec MomentSystem::moments_of(const CMat& rho) const {
  CVec v(basis.size);
  for (int i = 0; i < basis.size; ++i) v[i] = (rho * basis.op_matrix(i)).trace();
  return v;
}

MomentTrajectory propagate_moments(const MomentSystem& sys, const CVec& init,
                                   double t0, double t1,
                                   std::span<const double> sample_times,
                                   const OdeOptions& opt) {
  MomentTrajectory traj;
  traj.times.assign(sample_times.begin(), sample_times.end());
  traj.values.resize(sys.basis.size, static_cast<Eigen::Index>(sample_times.size()));
  traj.options = opt;
  const bool physical = std::abs(init[0] - Complex(1, 0)) < 1e-12;
  auto rhs = [&sys](double t, const CVec& y, CVec& dy) { sys.apply_m(t, y, dy); };
  integrate_sampled(rhs, t0, init, t1, sample_times, opt,
                    [&](std::size_t i, double t, const CVec& y) {
                      if (physical && std::abs(y[0] - Complex(1, 0)) > 1e-8)
                        throw IntegratorError("identity moment drifted", t);
                      traj.values.col(static_cast<Eigen::Index>(i)) = y;
                    });
  return traj;
}

DensityTrajectory propagate_density(const JointModel& model, const CMat& rho0,
                                    double t0, double t1,
                                    std::span<const double> sample_times,
                                    const OdeOptions& opt) {
  const int d = model.dim();
  if (rho0.rows() != d || rho0.cols() != d)
    throw std::invalid_argument("density matrix dimension mismatch");
  DensityTrajectory traj;
  traj.times.assign(sample_times.begin(), sample_times.end());
  traj.states.resize(sample_times.size());
  traj.options = opt;
  const CMat& ls = model.liouvillian_static();
  const CMat& ld = model.liouvillian_drive();
  auto rhs = [&](double t, const CVec& y, CVec& dy) {
    dy.noalias() = ls * y;
    double w = model.pulse()(t);
    if (w != 0.0) dy.noalias() += w * (ld * y);
  };
  CVec y0 = Eigen::Map<const CVec>(rho0.data(), rho0.size());
  integrate_sampled(rhs, t0, y0, t1, sample_times, opt,
                    [&](std::size_t i, double t, const CVec& y) {
                      CMat rho = Eigen::Map<const CMat>(y.data(), d, d);
                      if (std::abs(rho.trace() - Complex(1, 0)) > 1e-8)
                        throw IntegratorError("density trace drifted", t);
                      traj.states[i] = std::move(rho);
                    });
  return traj;
}

}  // namespace prf
