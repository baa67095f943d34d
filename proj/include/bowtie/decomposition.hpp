#pragma once

#include <cmath>
#include <vector>

#include "bowtie/corrector.hpp"
#include "bowtie/field_solver.hpp"

namespace bowtie {

/// One evaluation of the two leading-order decompositions of grad u.
struct DecompositionSample {
  Vec2 x{};
  bool valid = false;
  Vec2 grad_u{};
  /// grad u - a_eps / (eps |log eps|) grad Phi(X / eps).
  Vec2 r{};
  /// grad u - a_eps a / (eps |log eps|) (grad B_1 - b grad B_2)(X / eps).
  Vec2 e{};
  /// |R| / (||h|| (|X|^{beta_1 - 1} + |X|^{beta_2 - 1})).
  double r_ratio = 0.0;
  /// |E| / (||h|| (1 / (eps |log eps|) + sum |X - V_j|^{beta_j - 1})).
  double e_ratio = 0.0;
  /// |grad phi(X / eps)| |X| / eps.
  double phi_scaled = 0.0;
  /// |grad w(X / eps)| (|X| / eps)^{gamma + 1}.
  double w_scaled = 0.0;
};

struct DecompositionOptions {
  /// Validity radius delta_1.
  double delta1 = 0.125;
  /// ||h|| is taken over the disk of this radius.
  double h_norm_radius = 4.0;
};

inline std::vector<DecompositionSample> decomposition_residuals(const PotentialSolution& u,
                                                                const CorrectorSolution& corr,
                                                                const DerivedConstants& k,
                                                                const std::vector<Vec2>& xs,
                                                                const DecompositionOptions& opt = {}) {
  const BowTieGeometry& g = u.mesh().geometry();
  const SingularBasis& sb = corr.basis();
  const double eps = g.eps();
  const double lg = std::abs(std::log(eps));
  const double lead = k.a_eps / (eps * lg);
  const double hn = u.h().sup_on_disk(opt.h_norm_radius);
  const double b1 = sb.beta(1), b2 = sb.beta(2);
  std::vector<DecompositionSample> out(xs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(xs.size()); ++i) {
    DecompositionSample& s = out[i];
    const Vec2 x = xs[i];
    s.x = x;
    const Vec2 y = x / eps;
    if (!(norm(x) < opt.delta1) || !g.in_exterior(x) || !sb.gap().in_pi(y) || norm(y - sb.frame(1).vertex) == 0.0 ||
        norm(y - sb.frame(2).vertex) == 0.0)
      continue;
    s.valid = true;
    s.grad_u = u.gradient(x);
    s.r = s.grad_u - corr.eval_grad_Phi(y) * lead;
    s.e = s.grad_u - sb.combined(corr.b(), y) * (lead * corr.a());
    const double ax = norm(x);
    s.r_ratio = norm(s.r) / (hn * (std::pow(ax, b1 - 1.0) + std::pow(ax, b2 - 1.0)));
    s.e_ratio = norm(s.e) / (hn * (1.0 / (eps * lg) + std::pow(norm(x - g.vertex(1)), b1 - 1.0) +
                                   std::pow(norm(x - g.vertex(2)), b2 - 1.0)));
    s.phi_scaled = norm(sb.grad_phi(y).grad) * ax / eps;
    s.w_scaled = norm(corr.eval_grad_w(y)) * std::pow(ax / eps, corr.gamma() + 1.0);
  }
  return out;
}

/// Exterior sample points lo * 10^{i / per_decade} <= hi on `angular` rays.
/// Radii are fixed multiples of `lo`, so batches with lo proportional to eps
/// hit the same unit-scale points X / eps at every eps.
inline std::vector<Vec2> log_polar_batch(const BowTieGeometry& g, double lo, double hi, int per_decade, int angular) {
  std::vector<Vec2> out;
  for (int i = 0;; ++i) {
    const double r = lo * std::pow(10.0, double(i) / per_decade);
    if (r > hi) break;
    for (int k = 0; k < angular; ++k) {
      const double t = 2.0 * pi * (k + 0.5) / angular;
      const Vec2 x = unit(t) * r;
      if (g.in_exterior(x)) out.push_back(x);
    }
  }
  return out;
}

}  // namespace bowtie
