#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

#include "prf/errors.hpp"

namespace prf {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_init = 0.0;  // 0: automatic
  double h_max = 0.0;   // 0: unlimited
  std::int64_t max_steps = 4'000'000;
};

// Dormand-Prince 5(4) embedded pair with FSAL and the standard quartic
// continuous extension. State vectors are complex; the error norm treats
// each component by modulus.
//
// Rhs signature: void(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt)
template <class Rhs>
class Dopri5 {
 public:
  using Vec = Eigen::VectorXcd;

  Dopri5(Rhs rhs, OdeOptions opt) : rhs_(std::move(rhs)), opt_(opt) {}

  void start(double t0, const Vec& y0, double t_end) {
    t_ = t_prev_ = t0;
    t_end_ = t_end;
    y_ = y0;
    y_prev_ = y0;
    const auto n = y0.size();
    k1_.resize(n); k2_.resize(n); k3_.resize(n); k4_.resize(n);
    k5_.resize(n); k6_.resize(n); k7_.resize(n);
    ytmp_.resize(n); err_.resize(n);
    r1_.resize(n); r2_.resize(n); r3_.resize(n); r4_.resize(n); r5_.resize(n);
    rhs_(t_, y_, k7_);  // seeds FSAL
    n_steps_ = 0;
    h_ = opt_.h_init > 0 ? opt_.h_init : guess_initial_step();
    clamp_h();
  }

  double t() const { return t_; }
  double t_prev() const { return t_prev_; }
  bool done() const { return t_ >= t_end_; }
  const Vec& y() const { return y_; }
  const Vec& y_prev() const { return y_prev_; }
  std::int64_t steps_taken() const { return n_steps_; }

  // Takes one accepted step toward t_end. Returns false once t_end has been
  // reached (without stepping).
  bool advance() {
    if (done()) return false;
    for (;;) {
      if (++n_steps_ > opt_.max_steps)
        throw IntegratorError("step budget exhausted", t_);
      double h = std::min(h_, t_end_ - t_);
      if (t_ + h == t_) throw IntegratorError("step size underflow", t_);

      k1_ = k7_;  // FSAL
      ytmp_ = y_ + (h * a21) * k1_;
      rhs_(t_ + c2 * h, ytmp_, k2_);
      ytmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
      rhs_(t_ + c3 * h, ytmp_, k3_);
      ytmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      rhs_(t_ + c4 * h, ytmp_, k4_);
      ytmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      rhs_(t_ + c5 * h, ytmp_, k5_);
      ytmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      rhs_(t_ + h, ytmp_, k6_);
      ytmp_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
      rhs_(t_ + h, ytmp_, k7_);  // ytmp_ is the 5th-order solution

      err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      double errnorm = 0.0;
      for (Eigen::Index i = 0; i < err_.size(); ++i) {
        double sc = opt_.atol +
                    opt_.rtol * std::max(std::abs(y_[i]), std::abs(ytmp_[i]));
        double q = std::abs(err_[i]) / sc;
        errnorm += q * q;
      }
      errnorm = std::sqrt(errnorm / static_cast<double>(err_.size()));

      if (errnorm <= 1.0) {
        // dense-output coefficients for [t_, t_ + h]
        r1_ = y_;
        r2_ = ytmp_ - y_;
        r3_ = h * k1_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
        t_prev_ = t_;
        y_prev_.swap(y_);
        t_ += h;
        h_last_ = h;
        y_.swap(ytmp_);
        double fac = 0.9 * std::pow(std::max(errnorm, 1e-10), -0.2);
        h_ = h * std::clamp(fac, 0.2, rejected_ ? 1.0 : 5.0);
        rejected_ = false;
        clamp_h();
        return true;
      }
      rejected_ = true;
      double fac = 0.9 * std::pow(errnorm, -0.2);
      h_ = h * std::clamp(fac, 0.1, 1.0);
      k7_ = k1_;  // restore f(t_, y_) for the FSAL slot before retrying
    }
  }

  // Interpolates within the last accepted step [t_prev, t].
  void eval(double s, Vec& out) const {
    double th = (s - t_prev_) / h_last_;
    double th1 = 1.0 - th;
    out = r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
  }

 private:
  void clamp_h() {
    if (opt_.h_max > 0) h_ = std::min(h_, opt_.h_max);
  }

  double guess_initial_step() const {
    double d0 = 0, d1 = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      double sc = opt_.atol + opt_.rtol * std::abs(y_[i]);
      d0 += std::norm(y_[i] / sc);
      d1 += std::norm(k7_[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(y_.size()));
    d1 = std::sqrt(d1 / static_cast<double>(y_.size()));
    double span = t_end_ - t_;
    double h0 = (d0 < 1e-10 || d1 < 1e-10) ? 1e-6 * span : 0.01 * d0 / d1;
    return std::clamp(h0, 1e-12 * span, 0.1 * span);
  }

  Rhs rhs_;
  OdeOptions opt_;
  double t_ = 0, t_prev_ = 0, t_end_ = 0, h_ = 0, h_last_ = 0;
  bool rejected_ = false;
  std::int64_t n_steps_ = 0;
  Vec y_, y_prev_, ytmp_, err_;
  Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  Vec r1_, r2_, r3_, r4_, r5_;

  // Butcher tableau
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

namespace detail {
inline double time_fuzz(double t) { return 1e-12 * (1.0 + std::abs(t)); }
}  // namespace detail

// Integrates y' = rhs(t, y) from t0 to t1 and reports the state at the given
// ascending sample times (all within [t0, t1]). Sample values are produced
// from the continuous extension, so the grid never constrains the steps.
template <class Rhs, class OnSample>
void integrate_sampled(Rhs rhs, double t0, const Eigen::VectorXcd& y0, double t1,
                       std::span<const double> samples, const OdeOptions& opt,
                       OnSample&& on_sample) {
  Dopri5<Rhs> stepper(std::move(rhs), opt);
  stepper.start(t0, y0, t1);
  std::size_t si = 0;
  while (si < samples.size() && samples[si] <= t0 + detail::time_fuzz(t0)) {
    on_sample(si, samples[si], y0);
    ++si;
  }
  Eigen::VectorXcd buf(y0.size());
  while (stepper.advance()) {
    while (si < samples.size() &&
           samples[si] <= stepper.t() + detail::time_fuzz(stepper.t())) {
      stepper.eval(std::clamp(samples[si], stepper.t_prev(), stepper.t()), buf);
      on_sample(si, samples[si], buf);
      ++si;
    }
  }
  // Anything left must sit at t1 within roundoff.
  while (si < samples.size()) {
    if (samples[si] > t1 + detail::time_fuzz(t1))
      throw std::logic_error("sample time beyond integration end");
    on_sample(si, samples[si], stepper.y());
    ++si;
  }
}

template <class Rhs>
Eigen::VectorXcd integrate_to(Rhs rhs, double t0, const Eigen::VectorXcd& y0,
                              double t1, const OdeOptions& opt) {
  Dopri5<Rhs> stepper(std::move(rhs), opt);
  stepper.start(t0, y0, t1);
  while (stepper.advance()) {
  }
  return stepper.y();
}

}  // namespace prf
