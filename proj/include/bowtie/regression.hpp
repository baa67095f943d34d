#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "bowtie/common.hpp"

namespace bowtie {

struct Window {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double s) const { return s >= lo && s <= hi; }
};

struct ExponentFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;  // log prefactor
  double stderr_intercept = 0.0;
  int samples = 0;
  double prefactor() const { return std::exp(intercept); }
};

/// Ordinary least squares of log(value) on log(scale) for samples whose scale
/// lies in `window`.
inline ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& samples, Window window = {}) {
  std::vector<double> x, y;
  for (auto [s, v] : samples) {
    if (!window.contains(s)) continue;
    if (!(s > 0.0) || !(v > 0.0)) throw DomainError("log-log fit needs positive scales and values");
    x.push_back(std::log(s));
    y.push_back(std::log(v));
  }
  const int n = int(x.size());
  if (n < 4) throw DomainError("log-log fit needs at least 4 samples in the window");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("log-log fit needs distinct scales");
  ExponentFit f;
  f.samples = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ssr += r * r;
  }
  const double s2 = ssr / (n - 2);
  f.stderr_slope = std::sqrt(s2 / sxx);
  f.stderr_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return f;
}

/// Common slope with one intercept per group (log v = s log t + c_g).
struct PooledFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::vector<double> intercepts;
  int samples = 0;
};

inline PooledFit fit_common_exponent(const std::vector<std::vector<std::pair<double, double>>>& groups) {
  PooledFit f;
  double sxx = 0.0, sxy = 0.0;
  std::vector<double> mxs, mys;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DomainError("each pooled group needs at least 2 samples");
    double mx = 0.0, my = 0.0;
    for (auto [s, v] : g) {
      if (!(s > 0.0) || !(v > 0.0)) throw DomainError("log-log fit needs positive scales and values");
      mx += std::log(s);
      my += std::log(v);
    }
    mx /= double(g.size());
    my /= double(g.size());
    for (auto [s, v] : g) {
      sxx += (std::log(s) - mx) * (std::log(s) - mx);
      sxy += (std::log(s) - mx) * (std::log(v) - my);
    }
    mxs.push_back(mx);
    mys.push_back(my);
    f.samples += int(g.size());
  }
  if (f.samples < 4) throw DomainError("pooled fit needs at least 4 samples");
  if (!(sxx > 0.0)) throw DomainError("pooled fit needs distinct scales");
  f.slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    f.intercepts.push_back(mys[k] - f.slope * mxs[k]);
    for (auto [s, v] : groups[k]) {
      const double r = std::log(v) - f.intercepts[k] - f.slope * std::log(s);
      ssr += r * r;
    }
  }
  const int dof = std::max(1, f.samples - int(groups.size()) - 1);
  f.stderr_slope = std::sqrt(ssr / dof / sxx);
  return f;
}

/// max / min of positive values.
inline double spread(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double x : v) {
    lo = std::min(lo, std::abs(x));
    hi = std::max(hi, std::abs(x));
  }
  return hi / lo;
}

}  // namespace bowtie
