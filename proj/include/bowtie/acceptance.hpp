#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bowtie/corrector.hpp"
#include "bowtie/field_solver.hpp"
#include "bowtie/quadrature.hpp"
#include "bowtie/regression.hpp"
#include "bowtie/scaling_lab.hpp"
#include "bowtie/singular_basis.hpp"

namespace bowtie {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string summary;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 1;
  int jobs = 1;
  SweepPlan plan{};  // reference sweep
  /// Second aperture pair for the corrector and no-cancellation checks.
  std::pair<double, double> asymmetric{pi / 3, pi / 2};
  /// Mesh levels for the refinement ladder, coarse to fine; the last one
  /// also serves the single-eps checks.
  std::vector<MeshOptions> ladder = default_ladder();

  static std::vector<MeshOptions> default_ladder() {
    std::vector<MeshOptions> l(5);
    const double v[] = {1e-1, 1e-2, 1e-3, 1e-4, 1e-8};
    const double t[] = {0.1, 0.03, 1e-2, 3e-3, 1e-3};
    const double m[] = {1.0, 0.5, 0.5, 0.25, 0.25};
    const int o[] = {8, 8, 10, 12, 12};
    for (int k = 0; k < 5; ++k) {
      l[k].vertex_min_rel = v[k];
      l[k].tangent_min = t[k];
      l[k].max_panel = m[k];
      l[k].order = o[k];
    }
    return l;
  }
};

/// Pinned sup values of the normalized residuals on the reference sweep.
struct GoldenResiduals {
  std::vector<double> r_sup, e_sup;
  double rel_tol = 0.05;
};

inline GoldenResiduals reference_golden() {
  return {{3.53961e-06, 2.91831e-06, 3.5488e-06, 3.07438e-06, 3.76226e-06},
          {0.346025, 0.41716, 0.474881, 0.521561, 0.551241},
          0.05};
}

struct AcceptanceRun {
  std::vector<CriterionResult> results;
  ScalingReport sweep;
  bool all_pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return !results.empty();
  }
};

namespace accept {

using clock = std::chrono::steady_clock;

inline double since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

inline std::string f(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

inline double ray_distance(Vec2 x, Vec2 origin, Vec2 dir) {
  const double t = std::max(0.0, dot(x - origin, dir));
  return norm(x - (origin + dir * t));
}

/// Distance from x to the four edges of the unit-scale cones.
inline double edge_distance(const SingularBasis& s, Vec2 x) {
  double d = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 2; ++j) {
    const ConeFrame& c = s.frame(j);
    d = std::min({d, ray_distance(x, c.vertex, c.reference_ray), ray_distance(x, c.vertex, c.lower_ray())});
  }
  return d;
}

inline std::vector<std::pair<double, double>> pairs_for(const AcceptanceOptions& o) {
  return {{pi / 2, pi / 2}, o.asymmetric};
}

/// Closed-form gradients against centered differences, and the modulus law.
inline CriterionResult closed_form(const AcceptanceOptions& o) {
  const auto t0 = clock::now();
  CriterionResult c{1, "closed-form gradients"};
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  const double h = 1e-6;
  double fd_worst = 0.0, mod_worst = 0.0;
  int points = 0;
  for (auto [a1, a2] : pairs_for(o)) {
    const SingularBasis s(ApertureAngles(a1, a2));
    int n = 0;
    while (n < 1000) {
      const Vec2 x{box(rng), box(rng)};
      if (!s.gap().in_pi(x) || edge_distance(s, x) < 1e-3 || std::abs(x.y) < 1e-3) continue;
      if (norm(x - s.frame(1).vertex) < 1e-2 || norm(x - s.frame(2).vertex) < 1e-2 || norm(x - s.q()) < 1e-2) continue;
      ++n;
      auto fd = [&](auto fn) {
        return Vec2{(fn(x + Vec2{h, 0.0}) - fn(x - Vec2{h, 0.0})) / (2 * h),
                    (fn(x + Vec2{0.0, h}) - fn(x - Vec2{0.0, h})) / (2 * h)};
      };
      for (int j = 1; j <= 2; ++j) {
        const Vec2 g = s.grad_B(j, x);
        const Vec2 d = fd([&](Vec2 y) { return s.eval_B(j, y); });
        fd_worst = std::max(fd_worst, norm(g - d) / norm(g));
        const double r = norm(x - s.frame(j).vertex);
        const double m = s.beta(j) * std::pow(r, s.beta(j) - 1.0);
        mod_worst = std::max(mod_worst, std::abs(norm(g) - m) / m);
      }
      const Vec2 g = s.grad_phi(x).grad;
      const Vec2 d = fd([&](Vec2 y) { return s.phi(y); });
      fd_worst = std::max(fd_worst, norm(g - d) / norm(g));
    }
    points += n;
  }
  c.seconds = since(t0);
  c.pass = fd_worst < 1e-6 && mod_worst < 1e-12 && c.seconds < 1.0;
  c.summary = std::to_string(points) + " points, worst FD rel " + f(fd_worst) + " (< 1e-6), |grad B| law rel " +
              f(mod_worst) + " (< 1e-12)";
  return c;
}

/// Normal-derivative signs on every cone edge.
inline CriterionResult edge_signs(const AcceptanceOptions& o) {
  const auto t0 = clock::now();
  CriterionResult c{2, "edge normal-derivative signs"};
  std::mt19937_64 rng(o.seed + 1);
  std::uniform_real_distribution<double> lr(std::log(1e-4), std::log(1e2));
  int bad_own = 0, bad_other = 0, samples = 0;
  double eq_worst = 0.0;
  for (auto [a1, a2] : pairs_for(o)) {
    const SingularBasis s(ApertureAngles(a1, a2));
    for (int j = 1; j <= 2; ++j) {
      const ConeFrame& fr = s.frame(j);
      const int k = 3 - j;
      for (int e = 0; e < 2; ++e) {
        const Vec2 dir = e == 0 ? fr.reference_ray : fr.lower_ray();
        const Vec2 nu = e == 0 ? fr.upper_inward_normal() : fr.lower_inward_normal();
        for (int m = 0; m < 1000; ++m, ++samples) {
          const Vec2 x = fr.vertex + dir * std::exp(lr(rng));
          const Vec2 gj = s.grad_B(j, x);
          const double own = dot(gj, nu);
          if (!(own < 0.0)) ++bad_own;
          eq_worst = std::max(eq_worst, std::abs(own + norm(gj)) / norm(gj));
          if (!(dot(s.grad_B(k, x), nu) >= 0.0)) ++bad_other;
        }
      }
    }
  }
  c.seconds = since(t0);
  c.pass = bad_own == 0 && bad_other == 0 && eq_worst < 1e-12 && c.seconds < 1.0;
  c.summary = std::to_string(samples) + " edge samples, own-sign violations " + std::to_string(bad_own) +
              ", cross-sign violations " + std::to_string(bad_other) + ", |d_nu B_j + |grad B_j|| rel " +
              f(eq_worst);
  return c;
}

/// Grid sup of (|grad B_1| + |grad B_2|) / |grad B_1 - b grad B_2| over
/// [-5, 5]^2, nodes i * 10 / n, minus 1e-3 balls at the vertices.
inline double cancellation_sup(const SingularBasis& s, double b, int n) {
  double sup = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= n; ++k) {
      const Vec2 x{-5.0 + 10.0 * k / n, -5.0 + 10.0 * i / n};
      if (!s.gap().in_pi(x)) continue;
      if (norm(x - s.frame(1).vertex) < 1e-3 || norm(x - s.frame(2).vertex) < 1e-3) continue;
      const double num = norm(s.grad_B(1, x)) + norm(s.grad_B(2, x));
      sup = std::max(sup, num / norm(s.combined(b, x)));
    }
  return sup;
}

inline CriterionResult no_cancellation(const AcceptanceOptions& o, double b_asym) {
  const auto t0 = clock::now();
  CriterionResult c{3, "no-cancellation grid ratio"};
  c.pass = true;
  const std::pair<std::pair<double, double>, double> cases[] = {{{pi / 2, pi / 2}, 1.0}, {o.asymmetric, b_asym}};
  for (auto [ang, b] : cases) {
    const SingularBasis s(ApertureAngles(ang.first, ang.second));
    const double s1 = cancellation_sup(s, b, 200), s2 = cancellation_sup(s, b, 400);
    const double change = std::abs(s2 / s1 - 1.0);
    const bool ok = std::isfinite(s1) && std::isfinite(s2) && change < 0.05;
    c.pass = c.pass && ok;
    c.summary += "(" + f(ang.first) + "," + f(ang.second) + ",b=" + f(b, 6) + "): sup " + f(s1, 6) + " -> " +
                 f(s2, 6) + " change " + f(change) + "; ";
  }
  c.seconds = since(t0);
  c.pass = c.pass && c.seconds < 10.0;
  c.summary += "(b for the second pair taken from the corrector)";
  return c;
}

/// -slope of log|grad w| along the gap bisector ray on rho in [lo, hi].
inline double corrector_decay(const CorrectorSolution& s, double lo = 3.0, double hi = 30.0, int n = 12) {
  const GapFrame& g = s.basis().gap();
  const Vec2 dir = unit(g.ref_angle - 0.5 * s.opening());
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < n; ++i) {
    const double r = lo * std::pow(hi / lo, double(i) / (n - 1));
    pts.emplace_back(r, norm(s.eval_grad_w(g.q + dir * r)));
  }
  return -fit_exponent(pts).slope;
}

inline CriterionResult corrector_checks(const AcceptanceOptions& o, const CorrectorSolution& sym,
                                        const CorrectorSolution& asym) {
  const auto t0 = clock::now();
  CriterionResult c{4, "cone corrector"};
  std::mt19937_64 rng(o.seed + 2);
  bool ok = true;
  for (const CorrectorSolution* s : {&sym, &asym}) {
    const GapFrame& g = s->basis().gap();
    const double top = s->opening();
    std::uniform_real_distribution<double> lr(std::log(1e-2), std::log(1e3)), ang(0.0, top);
    int n = 0, bad = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    while (n < 10000) {
      const double rho = std::exp(lr(rng)), phi = ang(rng);
      const Vec2 x = g.q + unit(g.ref_angle - phi) * rho;
      if (!(x.y > 0.0) || phi <= 0.0 || !g.in_pi(x)) continue;
      for (const Vec2 y : {x, mirror_y(x)}) {
        const double v = s->eval_Phi(y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (!(v > 0.0 && v < top)) ++bad;
        ++n;
      }
    }
    // Equal apertures kill the odd tail modes, so the leading decay there is 2 gamma + 1.
    const bool symmetric = s->angles().symmetric();
    const double expect = symmetric ? 2.0 * s->gamma() + 1.0 : s->gamma() + 1.0;
    const double decay = corrector_decay(*s);
    const double bound = std::pow(2.0, s->basis().beta(1) + 2.0) / s->gamma();
    const bool b_ok = !symmetric || std::abs(s->b() - 1.0) <= 0.02;
    const bool pair_ok = bad == 0 && std::abs(decay - expect) <= 0.1 && b_ok && s->a() > 0.0 && s->a() < bound &&
                         s->diagnostics().seconds < 120.0;
    ok = ok && pair_ok;
    c.summary += "(" + f(s->angles().alpha1()) + "," + f(s->angles().alpha2()) + "): Phi in [" + f(lo) + ", " +
                 f(hi) + "] of (0, " + f(top) + ") at " + std::to_string(n) + " pts, decay " + f(decay) + " (expect " +
                 f(expect) + " +- 0.1), a=" + f(s->a(), 8) + " < " + f(bound) + ", b=" + f(s->b(), 8) + ", solve " +
                 f(s->diagnostics().seconds, 3) + " s; ";
  }
  c.pass = ok;
  c.seconds = since(t0) + sym.diagnostics().seconds + asym.diagnostics().seconds;
  return c;
}

/// -(flux of grad q) out of the region {x > 0} intersect B_R, which holds
/// Omega_2 whole; the line x = 0 is graded dyadically towards the gap.
inline double contour_flux(const PotentialSolution& q, double R) {
  const double eps = q.mesh().geometry().eps();
  double out = 0.0;
  std::vector<double> br{0.0};
  for (double t = eps / 64.0; t < R; t *= 2.0) br.push_back(t);
  br.push_back(R);
  for (std::size_t k = 0; k + 1 < br.size(); ++k)
    for (double sgn : {1.0, -1.0}) {
      // outward normal on the line is (-1, 0)
      out += integrate([&](double y) { return -q.gradient({0.0, sgn * y}).x; }, br[k], br[k + 1], 16, 1);
    }
  out += integrate(
      [&](double th) {
        const Vec2 n = unit(th);
        return dot(q.gradient(n * R), n) * R;
      },
      -0.5 * pi, 0.5 * pi, 32, 8);
  return -out;
}

/// |u(c) - mean of u on the circle| / max(|u(c)|, r |grad u(c)|) with the
/// radius half the distance to the boundary.
inline double mean_value_residual(const PotentialSolution& u, Vec2 c, int m = 64) {
  const double r = 0.5 * u.mesh().geometry().boundary_distance(c);
  double mean = 0.0;
  for (int k = 0; k < m; ++k) mean += u.value(c + unit(2.0 * pi * k / m) * r);
  mean /= m;
  const double uc = u.value(c);
  return std::abs(uc - mean) / std::max(std::abs(uc), r * norm(u.gradient(c)));
}

inline CriterionResult solver_identities(const AcceptanceOptions& o) {
  const auto t0 = clock::now();
  CriterionResult c{5, "solver identities"};
  const double eps = o.plan.eps_grid.front();
  const BowTieGeometry g(ApertureAngles(pi / 2, pi / 2), eps, o.plan.edge_len, o.plan.delta);
  const int levels = int(o.ladder.size());
  std::vector<double> flux_h(levels);
  std::unique_ptr<FieldSolver> fine;
  std::vector<double> level_seconds;
  for (int k = 0; k < levels; ++k) {
    const auto tl = clock::now();
    auto fs = std::make_unique<FieldSolver>(g, o.ladder[k]);
    flux_h[k] = flux_weighted_h(fs->solve_u(o.plan.h), fs->solve_q());
    level_seconds.push_back(since(tl));
    if (k + 1 == levels) fine = std::move(fs);
  }
  const PotentialSolution u = fine->solve_u(o.plan.h);
  const PotentialSolution q = fine->solve_q();
  const double identity = potential_difference_identity(u, q);
  const double du = u.constant(2) - u.constant(1);
  // Each level's flux-weighted h against the finest potential difference.
  std::vector<double> cross(levels);
  for (int k = 0; k < levels; ++k) cross[k] = std::abs(du - flux_h[k]) / std::abs(du);
  const double floor = 1e-11;
  bool decreasing = true;
  std::string ladder;
  for (int k = 0; k < levels; ++k) {
    ladder += f(cross[k], 3) + (k + 1 < levels ? " > " : "");
    if (k > 0 && !(cross[k] < cross[k - 1] || cross[k] < floor)) decreasing = false;
  }

  std::mt19937_64 rng(o.seed + 3);
  std::uniform_real_distribution<double> box(-0.5, 0.5);
  double harm = 0.0;
  for (int n = 0; n < 50;) {
    const Vec2 x{box(rng), box(rng)};
    if (!g.in_exterior(x) || g.boundary_distance(x) < 1e-3) continue;
    harm = std::max(harm, mean_value_residual(u, x));
    ++n;
  }
  const double fl = contour_flux(q, 4.0);

  c.seconds = since(t0);
  double per_eps = 0.0;
  for (double s : level_seconds) per_eps = std::max(per_eps, s);
  c.pass = harm < 1e-6 && std::abs(fl - 1.0) <= 1e-6 && identity < 1e-3 && decreasing && per_eps < 120.0;
  c.summary = "eps=" + f(eps) + ": harmonicity " + f(harm, 3) + " (< 1e-6, 50 circles), contour flux " +
              f(fl, 12) + " (1 +- 1e-6), identity " + f(identity, 3) + " (< 1e-3), cross-mesh ladder " + ladder;
  return c;
}

inline CriterionResult from_verdicts(int id, std::string title, const ScalingReport& rep,
                                     const std::vector<std::string>& ids, double seconds = 0.0) {
  CriterionResult c{id, std::move(title)};
  c.pass = !rep.pairs.empty() && rep.complete();
  for (const auto& p : rep.pairs)
    for (const auto& want : ids) {
      bool found = false;
      for (const auto& v : p.verdicts)
        if (v.id == want) {
          found = true;
          c.pass = c.pass && v.pass;
          c.summary += v.id + (v.pass ? " ok " : " FAIL ") + f(v.measured, 5) + " [" + v.tolerance + "]; ";
        }
      if (!found) {
        c.pass = false;
        c.summary += want + " missing; ";
      }
    }
  c.seconds = seconds;
  return c;
}

inline CriterionResult residual_bounds(const ScalingReport& rep, const GoldenResiduals& gold) {
  CriterionResult c = from_verdicts(10, "residual bounds", rep, {"residual_R", "residual_E"});
  if (rep.pairs.empty()) return c;
  const auto& rs = rep.pairs.front().records;
  bool golden = rs.size() == gold.r_sup.size() && rs.size() == gold.e_sup.size();
  double worst = 0.0;
  for (std::size_t k = 0; golden && k < rs.size(); ++k) {
    worst = std::max({worst, std::abs(rs[k].r_sup / gold.r_sup[k] - 1.0), std::abs(rs[k].e_sup / gold.e_sup[k] - 1.0)});
  }
  golden = golden && worst <= gold.rel_tol;
  c.pass = c.pass && golden;
  c.summary += "golden rel dev " + f(worst, 3) + " (<= " + f(gold.rel_tol) + ")";
  return c;
}

}  // namespace accept

/// Runs criteria 1-10 in order, reporting each as soon as it is known.
inline AcceptanceRun run_acceptance(const AcceptanceOptions& o,
                                    const std::function<void(const CriterionResult&)>& on_result = {},
                                    const GoldenResiduals& golden = reference_golden()) {
  AcceptanceRun run;
  auto emit = [&](CriterionResult c) {
    if (on_result) on_result(c);
    run.results.push_back(std::move(c));
  };
  auto guarded = [&](int id, const std::string& title, auto fn) {
    try {
      emit(fn());
    } catch (const std::exception& e) {
      emit({id, title, false, std::string("error: ") + e.what(), 0.0});
    }
  };
  guarded(1, "closed-form gradients", [&] { return accept::closed_form(o); });
  guarded(2, "edge normal-derivative signs", [&] { return accept::edge_signs(o); });

  std::unique_ptr<CorrectorSolution> sym, asym;
  try {
    sym = std::make_unique<CorrectorSolution>(solve_corrector(ApertureAngles(pi / 2, pi / 2), o.plan.corrector));
    asym = std::make_unique<CorrectorSolution>(
        solve_corrector(ApertureAngles(o.asymmetric.first, o.asymmetric.second), o.plan.corrector));
  } catch (const std::exception& e) {
    emit({3, "no-cancellation grid ratio", false, std::string("corrector failed: ") + e.what(), 0.0});
    emit({4, "cone corrector", false, std::string("corrector failed: ") + e.what(), 0.0});
  }
  if (sym && asym) {
    guarded(3, "no-cancellation grid ratio", [&] { return accept::no_cancellation(o, asym->b()); });
    guarded(4, "cone corrector", [&] { return accept::corrector_checks(o, *sym, *asym); });
  }
  guarded(5, "solver identities", [&] { return accept::solver_identities(o); });

  SweepPlan plan = o.plan;
  plan.angle_pairs = {{pi / 2, pi / 2}};
  double sweep_seconds = 0.0;
  try {
    const auto t0 = accept::clock::now();
    std::vector<const CorrectorSolution*> pre;
    if (sym) pre.push_back(sym.get());
    run.sweep = run_sweep(plan, o.jobs, pre);
    sweep_seconds = accept::since(t0);
  } catch (const std::exception& e) {
    for (int id = 6; id <= 10; ++id) emit({id, "sweep", false, std::string("sweep failed: ") + e.what(), 0.0});
    return run;
  }
  const ScalingReport& rep = run.sweep;
  CriterionResult c6 = accept::from_verdicts(6, "log law for the potential difference", rep, {"log_law_delta_q"},
                                             sweep_seconds);
  c6.pass = c6.pass && sweep_seconds < 900.0;
  c6.summary += "sweep " + accept::f(sweep_seconds, 3) + " s at --jobs " + std::to_string(o.jobs) + " (< 900 s)";
  emit(c6);
  emit(accept::from_verdicts(7, "near-vertex blow-up", rep,
                             {"corner_slope", "blowup_amplitude", "super_smooth_amplification"}));
  emit(accept::from_verdicts(8, "mid-range decay", rep, {"mid_range_slope", "mid_range_prefactor"}));
  emit(accept::from_verdicts(9, "a_eps symmetry and linearity", rep,
                             {"a_eps_bounded", "a_eps_null_y", "a_eps_linear"}));
  emit(accept::residual_bounds(rep, golden));
  return run;
}

inline std::string format_result(const CriterionResult& c) {
  std::ostringstream s;
  s << (c.pass ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.title << "  (" << accept::f(c.seconds, 3)
    << " s)  " << c.summary;
  return s.str();
}

}  // namespace bowtie
