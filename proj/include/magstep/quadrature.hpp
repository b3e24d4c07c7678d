#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"

namespace magstep {

struct Rule {
  std::vector<double> x, w;  // on [-1, 1]
};

// Full Gauss-Legendre rule; boost stores only the non-negative half.
template <unsigned N>
Rule gauss_legendre() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) {
      r.x.push_back(0);
      r.w.push_back(w[i]);
    } else {
      r.x.push_back(-a[i]);
      r.w.push_back(w[i]);
      r.x.push_back(a[i]);
      r.w.push_back(w[i]);
    }
  }
  return r;
}

// Nodes/weights of `rule` replicated over `panels` equal panels of [a, b].
inline Rule panel_rule(const Rule& rule, double a, double b, int panels) {
  Rule out;
  double len = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * len;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      out.x.push_back(lo + 0.5 * len * (rule.x[i] + 1));
      out.w.push_back(0.5 * len * rule.w[i]);
    }
  }
  return out;
}

// Composite Simpson over f[first..last] with spacing h; needs an even interval count.
template <class F>
double simpson(F&& f, int first, int last, double h, int stride = 1) {
  int m = (last - first) / stride;
  if (m <= 0) return 0;
  if (m % 2 != 0 || (last - first) % stride != 0)
    throw InvalidInput("Simpson rule needs an even number of intervals");
  double s = f(first) + f(last);
  for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(first + k * stride);
  return s * h * stride / 3.0;
}

// Fornberg weights for the first derivative at x0 from nodes x.
inline std::vector<double> fd_weights(double x0, const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1, c4 = x[0] - x0;
  c[0][0] = 1;
  for (int i = 1; i < n; ++i) {
    double c2 = 1, c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = c[j][1];
  return w;
}

}  // namespace magstep
