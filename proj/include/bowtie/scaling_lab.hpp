#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bowtie/corrector.hpp"
#include "bowtie/decomposition.hpp"
#include "bowtie/field_solver.hpp"
#include "bowtie/regression.hpp"

namespace bowtie {

struct SweepTolerances {
  double corner_slope = 0.05;
  double log_law_ratio = 3.0;
  double amplitude_ratio = 2.0;
  double mid_slope = 0.1;
  double prefactor_ratio = 3.0;
  double a_eps_ratio = 2.0;
  double a_eps_null = 1e-4;
  double linearity = 1e-8;
  double trend_noise = 0.2;
  double boundary_residual_gate = 1e-7;
};

struct SweepPlan {
  std::vector<std::pair<double, double>> angle_pairs{{pi / 2, pi / 2}};
  std::vector<double> eps_grid{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  double edge_len = 1.0;
  double delta = 0.25;
  LinearH h{1.0, 0.0};
  /// h = y and h = x + y runs for equal apertures.
  bool symmetry_checks = true;
  /// Near-vertex probes V_1 + (t, 0), t in [near_lo, near_hi] * eps.
  double near_lo = 0.05;
  double near_hi = 0.5;
  int near_samples = 16;
  double amplitude_offset = 0.1;
  /// Mid-range probes along the gap bisector, mid_lo * eps <= |X| <= |log eps|^{-1/beta}.
  double mid_lo = 2.0;
  int mid_samples = 24;
  /// Decomposition batches: radii per decade and rays.
  int batch_per_decade = 6;
  int batch_angular = 32;
  /// Inner radii (times eps) of the two decomposition batches.
  double r_batch_lo = 2.0;
  double e_batch_lo = 0.1;
  DecompositionOptions decomposition{};
  MeshOptions mesh{};
  CorrectorOptions corrector{};
  SweepTolerances tol{};
  double eps_floor = 1e-5;

  void validate() const {
    if (angle_pairs.empty()) throw ConfigError("sweep needs at least one angle pair");
    for (auto [a1, a2] : angle_pairs) ApertureAngles(a1, a2);
    if (eps_grid.size() < 4) throw ConfigError("eps grid needs at least 4 values");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
      if (!(eps_grid[i] > 0.0)) throw ConfigError("eps values must be positive");
      if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw ConfigError("eps grid must be strictly decreasing");
    }
    if (eps_grid.back() < eps_floor) throw ConfigError("eps grid goes below the solvable floor");
    if (!(near_lo > 0.0 && near_lo < near_hi)) throw ConfigError("near-vertex window must satisfy 0 < lo < hi");
    if (near_hi * eps_grid.front() >= delta) throw ConfigError("near-vertex window leaves the disk B_delta");
    if (near_samples < 4 || mid_samples < 4) throw ConfigError("fits need at least 4 samples");
    if (!(decomposition.delta1 > 0.0 && decomposition.delta1 < delta))
      throw ConfigError("delta1 must lie in (0, delta)");
  }
};

struct Verdict {
  std::string id;
  std::string law;
  double measured = 0.0;
  std::string tolerance;
  bool pass = false;
  std::string detail;
};

struct EpsRecord {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  bool gate_failure = false;
  SolverDiagnostics solver;
  double residual_u = 0.0, residual_q = 0.0;
  double c1 = 0.0, c2 = 0.0, d1 = 0.0, d2 = 0.0;
  DerivedConstants dc;
  double identity_residual = 0.0;
  std::optional<double> a_eps_y, a_eps_xy;
  std::vector<std::pair<double, double>> near;  // (|X - V_1|, |grad u|)
  ExponentFit near_fit;
  double amplitude_grad = 0.0;
  std::vector<std::pair<double, double>> mid;  // (|X|, |grad u|)
  ExponentFit mid_fit;
  double mid_upper = 0.0;
  double r_sup = 0.0, e_sup = 0.0;
  Vec2 r_argmax{}, e_argmax{};
  double phi_scaled_min = 0.0, phi_scaled_max = 0.0, w_scaled_max = 0.0;
  int r_points = 0, e_points = 0;
  double seconds = 0.0;
};

struct AngleReport {
  double alpha1 = 0.0, alpha2 = 0.0;
  double beta1 = 0.0, beta2 = 0.0, gamma = 0.0;
  Vec2 q{};
  double a = 0.0, b = 0.0;
  CorrectorDiagnostics corrector;
  std::vector<EpsRecord> records;
  PooledFit mid_pooled;
  std::vector<Verdict> verdicts;
  bool complete = true;
};

struct ScalingReport {
  std::vector<AngleReport> pairs;
  bool complete() const {
    return std::all_of(pairs.begin(), pairs.end(), [](const AngleReport& a) { return a.complete; });
  }
  bool all_pass() const {
    for (const auto& p : pairs)
      for (const auto& v : p.verdicts)
        if (!v.pass) return false;
    return complete();
  }
  bool gate_failure() const {
    for (const auto& p : pairs)
      for (const auto& r : p.records)
        if (r.gate_failure) return true;
    return false;
  }
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline EpsRecord solve_one(const SweepPlan& plan, const ApertureAngles& angles, const CorrectorSolution& corr,
                           double eps) {
  EpsRecord r;
  r.eps = eps;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const BowTieGeometry g(angles, eps, plan.edge_len, plan.delta);
    const FieldSolver fs(g, plan.mesh);
    r.solver = fs.diagnostics();
    const PotentialSolution u = fs.solve_u(plan.h);
    const PotentialSolution q = fs.solve_q();
    r.residual_u = u.boundary_residual();
    r.residual_q = q.boundary_residual();
    if (!(r.residual_u < plan.tol.boundary_residual_gate) || !(r.residual_q < plan.tol.boundary_residual_gate)) {
      r.gate_failure = true;
      throw SolverError("boundary residual above gate (u " + fmt(r.residual_u) + ", q " + fmt(r.residual_q) + ")");
    }
    r.c1 = u.constant(1);
    r.c2 = u.constant(2);
    r.d1 = q.constant(1);
    r.d2 = q.constant(2);
    r.dc = derived_constants(u, q, g);
    r.identity_residual = potential_difference_identity(u, q);
    if (plan.symmetry_checks && angles.symmetric()) {
      r.a_eps_y = derived_constants(fs.solve_u({0.0, 1.0}), q, g).a_eps;
      r.a_eps_xy = derived_constants(fs.solve_u(plan.h + LinearH{0.0, 1.0}), q, g).a_eps;
    }
    const SingularBasis& sb = corr.basis();
    const Vec2 v1 = g.vertex(1);
    for (int i = 0; i < plan.near_samples; ++i) {
      const double t = plan.near_lo * eps * std::pow(plan.near_hi / plan.near_lo, double(i) / (plan.near_samples - 1));
      r.near.emplace_back(t, norm(u.gradient(v1 + Vec2{t, 0.0})));
    }
    r.near_fit = fit_exponent(r.near);
    r.amplitude_grad = norm(u.gradient(v1 + Vec2{plan.amplitude_offset * eps, 0.0}));
    const double lg = std::abs(std::log(eps));
    const double beta = std::min(sb.beta(1), sb.beta(2));
    const double hi = std::pow(lg, -1.0 / beta);
    const double lo = plan.mid_lo * eps;
    const Vec2 dir = unit(sb.gap().ref_angle - 0.5 * sb.gap().opening());
    const double hn = plan.h.sup_on_disk(plan.decomposition.h_norm_radius);
    for (int i = 0; i < plan.mid_samples; ++i) {
      const double t = lo * std::pow(hi / lo, double(i) / (plan.mid_samples - 1));
      const double gr = norm(u.gradient(dir * t));
      r.mid.emplace_back(t, gr);
      r.mid_upper = std::max(r.mid_upper, gr * lg * t / hn);
    }
    r.mid_fit = fit_exponent(r.mid);
    const double d1 = plan.decomposition.delta1;
    const auto rb = decomposition_residuals(
        u, corr, r.dc, log_polar_batch(g, plan.r_batch_lo * eps, d1 * (1.0 - 1e-9), plan.batch_per_decade, plan.batch_angular),
        plan.decomposition);
    r.phi_scaled_min = std::numeric_limits<double>::infinity();
    for (const auto& s : rb) {
      if (!s.valid) continue;
      ++r.r_points;
      if (s.r_ratio > r.r_sup) r.r_argmax = s.x;
      r.r_sup = std::max(r.r_sup, s.r_ratio);
      r.phi_scaled_min = std::min(r.phi_scaled_min, s.phi_scaled);
      r.phi_scaled_max = std::max(r.phi_scaled_max, s.phi_scaled);
      r.w_scaled_max = std::max(r.w_scaled_max, s.w_scaled);
    }
    const auto eb = decomposition_residuals(
        u, corr, r.dc, log_polar_batch(g, plan.e_batch_lo * eps, d1 * (1.0 - 1e-9), plan.batch_per_decade, plan.batch_angular),
        plan.decomposition);
    for (const auto& s : eb) {
      if (!s.valid) continue;
      ++r.e_points;
      if (s.e_ratio > r.e_sup) r.e_argmax = s.x;
      r.e_sup = std::max(r.e_sup, s.e_ratio);
    }
    r.ok = true;
  } catch (const SolverError& e) {
    r.gate_failure = true;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline Verdict make_verdict(std::string id, std::string law, double measured, std::string tol, bool pass,
                            std::string detail = {}) {
  return {std::move(id), std::move(law), measured, std::move(tol), pass, std::move(detail)};
}

inline void add_verdicts(const SweepPlan& plan, AngleReport& rep) {
  const auto& t = plan.tol;
  std::vector<const EpsRecord*> ok;
  for (const auto& r : rep.records)
    if (r.ok) ok.push_back(&r);
  if (ok.size() != rep.records.size()) rep.complete = false;
  auto& v = rep.verdicts;
  if (ok.size() < 2) {
    v.push_back(make_verdict("sweep_complete", "every eps solved", double(ok.size()), "all", false,
                             "too few successful solves for any sweep verdict"));
    return;
  }
  auto L = [](double eps) { return std::abs(std::log(eps)); };

  std::vector<double> dq;
  for (auto* r : ok) dq.push_back(r->dc.delta_q * L(r->eps));
  const double s_dq = spread(dq);
  v.push_back(make_verdict("log_law_delta_q", "(d2 - d1) |log eps| ~ 1", s_dq, "max/min < " + fmt(t.log_law_ratio),
                           s_dq < t.log_law_ratio));

  const double target = rep.beta1 - 1.0;
  double worst = 0.0;
  std::string det;
  for (auto* r : ok) {
    worst = std::max(worst, std::abs(r->near_fit.slope - target));
    det += "eps=" + fmt(r->eps) + ": " + fmt(r->near_fit.slope) + " ";
  }
  v.push_back(make_verdict("corner_slope", "near-vertex slope of log|grad u| = beta_1 - 1", worst,
                           "|slope - (" + fmt(target) + ")| <= " + fmt(t.corner_slope) + " at each eps",
                           worst <= t.corner_slope, det));

  // |grad u| eps^{beta} |log eps| |X - V_1|^{1 - beta} at X = V_1 + offset * eps.
  std::vector<double> amp;
  for (auto* r : ok) {
    const double d = plan.amplitude_offset * r->eps;
    amp.push_back(r->amplitude_grad * std::pow(r->eps, rep.beta1) * L(r->eps) * std::pow(d, 1.0 - rep.beta1));
  }
  const double s_amp = spread(amp);
  v.push_back(make_verdict("blowup_amplitude", "|grad u| eps^beta |log eps| |X-V|^{1-beta} ~ 1", s_amp,
                           "max/min < " + fmt(t.amplitude_ratio), s_amp < t.amplitude_ratio));

  bool inc = ok.size() >= 3;
  std::string amp_det;
  double prev = 0.0;
  for (std::size_t i = ok.size() >= 3 ? ok.size() - 3 : 0; i < ok.size(); ++i) {
    const double val = ok[i]->amplitude_grad * std::sqrt(ok[i]->eps);
    amp_det += fmt(val) + " ";
    if (i + 3 > ok.size() && !(val > prev)) inc = false;
    prev = val;
  }
  v.push_back(make_verdict("super_smooth_amplification", "|grad u(X_eps)| eps^{1/2} increasing", inc ? 1.0 : 0.0,
                           "strictly increasing over the last three eps", inc, amp_det));

  std::vector<std::vector<std::pair<double, double>>> groups;
  for (auto* r : ok) groups.push_back(r->mid);
  rep.mid_pooled = fit_common_exponent(groups);
  std::string mid_det;
  for (auto* r : ok) mid_det += "eps=" + fmt(r->eps) + ": " + fmt(r->mid_fit.slope) + " ";
  v.push_back(make_verdict("mid_range_slope", "common slope of log|grad u| vs log|X| = -1", rep.mid_pooled.slope,
                           "|slope + 1| <= " + fmt(t.mid_slope),
                           std::abs(rep.mid_pooled.slope + 1.0) <= t.mid_slope,
                           "stderr " + fmt(rep.mid_pooled.stderr_slope) + "; per-eps " + mid_det));
  std::vector<double> pre;
  for (std::size_t k = 0; k < ok.size(); ++k) pre.push_back(std::exp(rep.mid_pooled.intercepts[k]) * L(ok[k]->eps));
  const double s_pre = spread(pre);
  v.push_back(make_verdict("mid_range_prefactor", "prefactor |log eps| ~ 1", s_pre,
                           "max/min < " + fmt(t.prefactor_ratio), s_pre < t.prefactor_ratio));
  double up_max = 0.0;
  for (auto* r : ok) up_max = std::max(up_max, r->mid_upper);
  v.push_back(make_verdict("mid_range_upper", "|grad u| |log eps| |X| / ||h|| bounded", up_max / ok.front()->mid_upper,
                           "sup over sweep / coarsest sup < " + fmt(t.prefactor_ratio),
                           up_max / ok.front()->mid_upper < t.prefactor_ratio));

  std::vector<double> ae;
  for (auto* r : ok) ae.push_back(r->dc.a_eps);
  const double s_ae = spread(ae);
  const bool positive = std::all_of(ae.begin(), ae.end(), [](double x) { return x > 0.0; });
  v.push_back(make_verdict("a_eps_bounded", "a_eps ~ 1 for h = x", s_ae, "max/min < " + fmt(t.a_eps_ratio),
                           positive && s_ae < t.a_eps_ratio));
  const double a0 = 0.5 * ae.front(), A0 = 2.0 * ae.front();
  const bool bracket = std::all_of(ae.begin(), ae.end(), [&](double x) { return x >= a0 && x <= A0; });
  v.push_back(make_verdict("a_eps_bracket", "a_eps in [a0, A0] from the coarsest eps", ae.back(),
                           "[" + fmt(a0) + ", " + fmt(A0) + "]", bracket));
  if (ok.front()->a_eps_y) {
    double ny = 0.0, lin = 0.0, xy = 0.0;
    for (auto* r : ok) {
      ny = std::max(ny, std::abs(*r->a_eps_y));
      lin = std::max(lin, std::abs(*r->a_eps_xy - r->dc.a_eps - *r->a_eps_y));
      xy = std::max(xy, std::abs(*r->a_eps_xy - r->dc.a_eps));
    }
    v.push_back(make_verdict("a_eps_null_y", "a_eps = 0 for h = y", ny, "< " + fmt(t.a_eps_null), ny < t.a_eps_null));
    v.push_back(make_verdict("a_eps_linear", "a_eps(x + y) = a_eps(x) + a_eps(y)", lin, "< " + fmt(t.linearity),
                             lin < t.linearity));
    v.push_back(make_verdict("a_eps_xy", "a_eps(x + y) = a_eps(x)", xy, "< " + fmt(t.a_eps_null), xy < t.a_eps_null));
  }

  // Trend = least-squares line of log(sup) against log(1/eps); the fitted
  // growth from the coarsest to the finest eps may not exceed 1 + noise.
  auto trend = [&](auto get, const std::string& id, const std::string& law) {
    bool finite = true;
    std::string d;
    std::vector<std::pair<double, double>> pts;
    for (const EpsRecord* r : ok) {
      const double x = get(*r);
      d += fmt(x) + " ";
      if (!std::isfinite(x) || !(x > 0.0)) finite = false;
      else pts.emplace_back(1.0 / r->eps, x);
    }
    double growth = std::numeric_limits<double>::infinity();
    if (finite && pts.size() >= 2) {
      double mx = 0.0, my = 0.0, sxx = 0.0, sxy = 0.0;
      for (auto [a, b] : pts) mx += std::log(a), my += std::log(b);
      mx /= double(pts.size());
      my /= double(pts.size());
      for (auto [a, b] : pts) sxx += (std::log(a) - mx) * (std::log(a) - mx), sxy += (std::log(a) - mx) * (std::log(b) - my);
      growth = std::exp(sxy / sxx * (std::log(pts.back().first) - std::log(pts.front().first)));
    }
    d += "fitted growth " + fmt(growth);
    v.push_back(make_verdict(id, law, growth, "finite, fitted growth over sweep <= " + fmt(1.0 + t.trend_noise),
                             finite && growth <= 1.0 + t.trend_noise, d));
  };
  trend([](const EpsRecord& r) { return r.r_sup; }, "residual_R", "sup |R| / (|X|^{b1-1} + |X|^{b2-1}) / ||h||");
  trend([](const EpsRecord& r) { return r.e_sup; }, "residual_E",
        "sup |E| / (1/(eps|log eps|) + sum |X-V_j|^{bj-1}) / ||h||");
}

}  // namespace detail

/// Runs every eps of every angle pair, with up to `jobs` solves in flight.
/// One corrector is solved per angle pair, or taken from `correctors` when
/// a matching entry is supplied.
inline ScalingReport run_sweep(const SweepPlan& plan, int jobs = 1,
                               const std::vector<const CorrectorSolution*>& correctors = {}) {
  plan.validate();
  ScalingReport report;
  for (auto [a1, a2] : plan.angle_pairs) {
    const ApertureAngles angles(a1, a2);
    std::unique_ptr<CorrectorSolution> own;
    const CorrectorSolution* corr = nullptr;
    for (auto* c : correctors)
      if (c && c->angles().alpha1() == a1 && c->angles().alpha2() == a2) corr = c;
    if (!corr) {
      own = std::make_unique<CorrectorSolution>(solve_corrector(angles, plan.corrector));
      corr = own.get();
    }
    AngleReport rep;
    rep.alpha1 = a1;
    rep.alpha2 = a2;
    rep.beta1 = beta(a1);
    rep.beta2 = beta(a2);
    rep.gamma = gamma_exponent(angles);
    rep.q = q_point(angles);
    rep.a = corr->a();
    rep.b = corr->b();
    rep.corrector = corr->diagnostics();
    rep.records.resize(plan.eps_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < plan.eps_grid.size(); i = next++)
        rep.records[i] = detail::solve_one(plan, angles, *corr, plan.eps_grid[i]);
    };
    const int n = std::max(1, std::min<int>(jobs, int(plan.eps_grid.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    detail::add_verdicts(plan, rep);
    report.pairs.push_back(std::move(rep));
  }
  return report;
}

/// The a_eps verdicts only, extracted from a finished report.
inline std::vector<Verdict> verify_a_eps(const ScalingReport& report) {
  std::vector<Verdict> out;
  for (const auto& p : report.pairs)
    for (const auto& v : p.verdicts)
      if (v.id.rfind("a_eps", 0) == 0) out.push_back(v);
  return out;
}

}  // namespace bowtie
