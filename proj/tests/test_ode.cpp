#include <doctest.h>

#include <cmath>
#include <complex>

#include "prf/ode.hpp"
#include "prf/util.hpp"

using prf::CVec;
using prf::OdeOptions;

TEST_SUITE("ode") {

TEST_CASE("exponential decay hits the analytic value") {
  auto rhs = [](double, const CVec& y, CVec& dy) { dy = -y; };
  CVec y0(1);
  y0[0] = 1.0;
  OdeOptions opt;
  CVec y = prf::integrate_to(rhs, 0.0, y0, 20.0, opt);
  CHECK(std::abs(y[0] - std::exp(-20.0)) < 1e-7 * std::exp(-20.0) + 1e-14);
}

TEST_CASE("complex rotation preserves modulus and phase") {
  const double w = 7.3;
  auto rhs = [w](double, const CVec& y, CVec& dy) {
    dy = std::complex<double>(0, w) * y;
  };
  CVec y0(1);
  y0[0] = 1.0;
  OdeOptions opt;
  CVec y = prf::integrate_to(rhs, 0.0, y0, 5.0, opt);
  CHECK(std::abs(std::abs(y[0]) - 1.0) < 1e-8);
  CHECK(std::abs(y[0] - std::exp(std::complex<double>(0, w * 5.0))) < 1e-6);
}

TEST_CASE("dense output interpolates between steps") {
  // y' = -y sampled on a grid much finer than the step sequence
  auto rhs = [](double, const CVec& y, CVec& dy) { dy = -y; };
  CVec y0(1);
  y0[0] = 1.0;
  auto samples = prf::linspace(0.0, 10.0, 501);
  OdeOptions opt;
  double max_err = 0;
  prf::integrate_sampled(rhs, 0.0, y0, 10.0, samples, opt,
                         [&](std::size_t, double t, const CVec& y) {
                           max_err = std::max(max_err,
                                              std::abs(y[0] - std::exp(-t)));
                         });
  CHECK(max_err < 1e-9);
}

TEST_CASE("time-dependent coefficient matches quadrature") {
  // y' = -a(t) y with Gaussian a(t): y(T) = exp(-int a)
  auto a = [](double t) { return 3.0 * std::exp(-(t - 2.0) * (t - 2.0) * 8.0); };
  auto rhs = [&](double t, const CVec& y, CVec& dy) { dy = -a(t) * y; };
  CVec y0(1);
  y0[0] = 1.0;
  OdeOptions opt;
  CVec y = prf::integrate_to(rhs, 0.0, y0, 4.0, opt);
  // Simpson oracle for the exponent
  const int n = 4000;
  double h = 4.0 / n, integral = 0;
  for (int i = 0; i < n; ++i) {
    double t = i * h;
    integral += h / 6.0 * (a(t) + 4.0 * a(t + 0.5 * h) + a(t + h));
  }
  CHECK(std::abs(y[0] - std::exp(-integral)) < 1e-8);
}

TEST_CASE("step budget exhaustion raises with time context") {
  auto rhs = [](double, const CVec& y, CVec& dy) { dy = -1000.0 * y; };
  CVec y0(1);
  y0[0] = 1.0;
  OdeOptions opt;
  opt.max_steps = 3;
  CHECK_THROWS_AS(prf::integrate_to(rhs, 0.0, y0, 100.0, opt),
                  prf::IntegratorError);
}

TEST_CASE("samples at interval endpoints are emitted") {
  auto rhs = [](double, const CVec& y, CVec& dy) { dy = -y; };
  CVec y0(1);
  y0[0] = 2.0;
  std::vector<double> samples{0.0, 1.0};
  int seen = 0;
  prf::integrate_sampled(rhs, 0.0, y0, 1.0, samples, OdeOptions{},
                         [&](std::size_t i, double t, const CVec& y) {
                           ++seen;
                           if (i == 0) CHECK(y[0] == std::complex<double>(2.0));
                           if (i == 1)
                             CHECK(std::abs(y[0] - 2.0 * std::exp(-t)) < 1e-9);
                         });
  CHECK(seen == 2);
}

}  // TEST_SUITE
