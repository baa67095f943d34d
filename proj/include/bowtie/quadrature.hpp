#pragma once

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bowtie {

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Barycentric weights for Lagrange interpolation through `nodes`.
  std::vector<double> bary;

  int size() const { return int(nodes.size()); }
};

namespace detail {

template <unsigned N>
GaussRule make_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  // Boost stores the non-negative half; zero first when N is odd.
  std::vector<std::pair<double, double>> all;
  for (std::size_t i = 0; i < x.size(); ++i) {
    all.emplace_back(x[i], w[i]);
    if (x[i] != 0.0) all.emplace_back(-x[i], w[i]);
  }
  std::sort(all.begin(), all.end());
  for (auto [xi, wi] : all) {
    r.nodes.push_back(xi);
    r.weights.push_back(wi);
  }
  const int n = int(r.nodes.size());
  r.bary.assign(n, 1.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k)
      if (k != j) r.bary[j] /= (r.nodes[j] - r.nodes[k]);
  }
  return r;
}

}  // namespace detail

/// Cached rule for one of the supported orders.
inline const GaussRule& gauss_rule(int n) {
  static const GaussRule r8 = detail::make_gauss<8>();
  static const GaussRule r10 = detail::make_gauss<10>();
  static const GaussRule r12 = detail::make_gauss<12>();
  static const GaussRule r16 = detail::make_gauss<16>();
  static const GaussRule r20 = detail::make_gauss<20>();
  static const GaussRule r32 = detail::make_gauss<32>();
  static const GaussRule r64 = detail::make_gauss<64>();
  switch (n) {
    case 8: return r8;
    case 10: return r10;
    case 12: return r12;
    case 16: return r16;
    case 20: return r20;
    case 32: return r32;
    case 64: return r64;
    default: throw std::invalid_argument("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

/// Values of the Lagrange basis through `rule.nodes` at local coordinate u.
inline void lagrange_basis(const GaussRule& rule, double u, double* out) {
  const int n = rule.size();
  double denom = 0.0;
  for (int k = 0; k < n; ++k) {
    const double d = u - rule.nodes[k];
    if (d == 0.0) {
      for (int j = 0; j < n; ++j) out[j] = (j == k) ? 1.0 : 0.0;
      return;
    }
    out[k] = rule.bary[k] / d;
    denom += out[k];
  }
  for (int k = 0; k < n; ++k) out[k] /= denom;
}

/// Composite Gauss-Legendre integral of f over [a, b] split into `pieces`.
template <class F>
double integrate(F&& f, double a, double b, int order = 32, int pieces = 1) {
  const GaussRule& g = gauss_rule(order);
  double sum = 0.0;
  const double h = (b - a) / pieces;
  for (int p = 0; p < pieces; ++p) {
    const double lo = a + p * h;
    for (int i = 0; i < g.size(); ++i) sum += g.weights[i] * f(lo + 0.5 * h * (g.nodes[i] + 1.0));
  }
  return 0.5 * h * sum;
}

}  // namespace bowtie
