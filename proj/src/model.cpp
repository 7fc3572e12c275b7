#include "prf/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prf {

PulseEnvelope PulseEnvelope::gaussian(double theta, double tau_d) {
  return PulseEnvelope{theta, tau_d, 5.0 * tau_d, nullptr};
}

double PulseEnvelope::operator()(double t) const {
  if (table) {
    const auto& tab = *table;
    if (tab.empty() || t <= tab.front().first || t >= tab.back().first) return 0.0;
    auto it = std::lower_bound(tab.begin(), tab.end(), t,
                               [](const auto& p, double x) { return p.first < x; });
    auto [t1, v1] = *it;
    auto [t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
  }
  double dt = t - t_center;
  return theta / (std::sqrt(2.0 * M_PI) * tau_d) *
         std::exp(-dt * dt / (2.0 * tau_d * tau_d));
}

namespace {

CMat sigma_lower() {
  CMat s = CMat::Zero(2, 2);
  s(0, 1) = 1.0;  // |G><X|
  return s;
}

CMat lindblad_super(const CMat& c) {
  const auto d = c.rows();
  CMat id = CMat::Identity(d, d);
  CMat cd = c.adjoint();
  CMat cdc = cd * c;
  return 2.0 * kron(c.conjugate(), c) - kron(id, cdc) - kron(cdc.transpose(), id);
}

// vec(i[rho, H]) = i (H^T (x) I - I (x) H) vec(rho)
CMat commutator_super(const CMat& h) {
  const auto d = h.rows();
  CMat id = CMat::Identity(d, d);
  return Complex(0, 1) * (kron(h.transpose(), id) - kron(id, h));
}

}  // namespace

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat embed(const CMat& local, int mode, int n_modes) {
  if (local.rows() != 2 || local.cols() != 2)
    throw std::invalid_argument("embed expects a 2x2 local operator");
  if (mode < 0 || mode >= n_modes) throw std::invalid_argument("bad mode index");
  CMat out = CMat::Identity(1, 1);
  for (int k = 0; k < n_modes; ++k)
    out = kron(out, k == mode ? local : CMat::Identity(2, 2));
  return out;
}

JointModel::JointModel(TwoLevelParams tls, PulseEnvelope pulse, SensorBank bank)
    : tls_(tls), pulse_(std::move(pulse)), bank_(std::move(bank)) {
  if (tls_.gamma_sigma <= 0) throw std::invalid_argument("gamma_sigma must be > 0");
  if (pulse_.tau_d <= 0) throw std::invalid_argument("tau_d must be > 0");
  if (bank_.sensors.size() > 2)
    throw std::invalid_argument("at most two sensors are supported");
  for (const auto& s : bank_.sensors)
    if (s.linewidth <= 0) throw std::invalid_argument("sensor linewidth must be > 0");
  if (!bank_.sensors.empty() && bank_.epsilon <= 0)
    throw std::invalid_argument("sensor coupling epsilon must be > 0");

  const int nm = n_modes();
  const CMat low = sigma_lower();
  lowering_.reserve(nm);
  for (int k = 0; k < nm; ++k) lowering_.push_back(embed(low, k, nm));

  const int d = dim();
  h_static_ = CMat::Zero(d, d);
  h_drive_ = CMat::Zero(d, d);
  for (int k = 0; k < nm; ++k) {
    const CMat& a = lowering_[k];
    h_static_ += mode_detuning(k) * (a.adjoint() * a);
  }
  const CMat& s = lowering_[0];
  h_drive_ = 0.5 * (s.adjoint() + s);
  for (std::size_t j = 0; j < bank_.sensors.size(); ++j) {
    const CMat& z = lowering_[1 + static_cast<int>(j)];
    h_static_ += bank_.epsilon * (s.adjoint() * z + z.adjoint() * s);
  }

  l_static_ = commutator_super(h_static_);
  for (int k = 0; k < nm; ++k)
    l_static_ += 0.5 * decay_rate(k) * lindblad_super(lowering_[k]);
  l_drive_ = commutator_super(h_drive_);
}

CMat JointModel::number_op(int mode) const {
  const CMat& a = lowering_[mode];
  return a.adjoint() * a;
}

double JointModel::decay_rate(int mode) const {
  if (mode == 0) return tls_.gamma_sigma;
  return bank_.sensors.at(mode - 1).linewidth;
}

double JointModel::mode_detuning(int mode) const {
  if (mode == 0) return tls_.detuning;
  return bank_.sensors.at(mode - 1).detuning;
}

CMat JointModel::hamiltonian(double t) const {
  return h_static_ + pulse_(t) * h_drive_;
}

CMat JointModel::liouvillian(double t) const {
  return l_static_ + pulse_(t) * l_drive_;
}

CMat JointModel::ground_state() const {
  CMat rho = CMat::Zero(dim(), dim());
  rho(0, 0) = 1.0;
  return rho;
}

double JointModel::horizon() const {
  double gamma = tls_.gamma_sigma;
  double slowest = gamma;
  for (const auto& s : bank_.sensors) slowest = std::min(slowest, s.linewidth);
  double t_end = pulse_.t_center + std::max(15.0 / gamma, 10.0 * pulse_.tau_d);
  if (!bank_.sensors.empty()) t_end += 16.0 / slowest;
  return t_end;
}

std::vector<std::string> JointModel::validate() const {
  std::vector<std::string> warnings;
  if (!bank_.sensors.empty()) {
    double floor = tls_.gamma_sigma;
    for (const auto& s : bank_.sensors) floor = std::min(floor, s.linewidth);
    if (bank_.epsilon > 0.05 * floor)
      warnings.push_back(
          "sensor coupling epsilon exceeds 5% of the smallest linewidth; "
          "filtered quantities may depend on epsilon");
  }
  return warnings;
}

}  // namespace prf
