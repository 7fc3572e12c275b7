#pragma once

#include <stdexcept>
#include <vector>

namespace prf {

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw std::invalid_argument("linspace needs n >= 2");
  std::vector<double> v(n);
  double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = a + h * i;
  v.back() = b;
  return v;
}

// Composite trapezoid weights for an arbitrary ascending grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  const auto n = x.size();
  if (n < 2) throw std::invalid_argument("trapezoid needs >= 2 points");
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double h = 0.5 * (x[i + 1] - x[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

}  // namespace prf
