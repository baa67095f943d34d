#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bowtie/common.hpp"
#include "bowtie/curve.hpp"
#include "bowtie/geometry.hpp"
#include "bowtie/layer.hpp"

namespace bowtie {

struct MeshOptions {
  int order = 12;
  /// Geometric grading ratio (size of a panel over its outer neighbour).
  double ratio = 0.5;
  /// Smallest vertex panel as a multiple of eps.
  double vertex_min_rel = 1e-8;
  /// Smallest panel at the edge/cap tangency points.
  double tangent_min = 1e-3;
  double max_panel = 0.25;
  int max_unknowns = 6000;
  /// LU reciprocal condition estimates below this are reported as a warning.
  double rcond_warn = 1e-13;
};

/// Harmonic background h(x, y) = cx * x + cy * y.
struct LinearH {
  double cx = 1.0;
  double cy = 0.0;
  double operator()(Vec2 p) const { return cx * p.x + cy * p.y; }
  Vec2 grad() const { return {cx, cy}; }
  LinearH operator+(LinearH o) const { return {cx + o.cx, cy + o.cy}; }
  /// Sup of |h| over the disk of radius r about the origin.
  double sup_on_disk(double r) const { return r * std::hypot(cx, cy); }
};

/// Panels on both inclusion boundaries with their Nystrom layer.
class BoundaryMesh {
 public:
  BoundaryMesh(const BowTieGeometry& g, const MeshOptions& opt) : geom_(g), opt_(opt), layer_(opt.order) {
    for (int j = 1; j <= 2; ++j) {
      const auto up = g.upper_pieces(j);
      const double s_vertex = opt.vertex_min_rel * g.eps();
      std::vector<std::vector<double>> br;
      br.push_back(graded_breaks(up[0].length(), s_vertex, opt.tangent_min, opt.ratio, opt.max_panel));
      br.push_back(graded_breaks(up[1].length(), opt.tangent_min, 0.0, opt.ratio, opt.max_panel));
      // The lower half keeps the upper half's parameter direction (starting
      // at the vertex) so node coordinates near V_j stay exact; the single
      // layer does not depend on orientation.
      for (std::size_t k = 0; k < up.size(); ++k) layer_.add_piece(up[k], br[k], j - 1);
      for (std::size_t k = 0; k < up.size(); ++k) layer_.add_piece(up[k].mirrored_y(), br[k], j - 1);
    }
    if (layer_.num_nodes() > opt.max_unknowns)
      throw ConfigError("mesh has " + std::to_string(layer_.num_nodes()) + " unknowns, above the cap of " +
                        std::to_string(opt.max_unknowns));
  }

  const BowTieGeometry& geometry() const { return geom_; }
  const MeshOptions& options() const { return opt_; }
  const SingleLayer& layer() const { return layer_; }
  int num_nodes() const { return layer_.num_nodes(); }
  int num_panels() const { return int(layer_.panels().size()); }

  double smallest_panel() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : layer_.panels()) m = std::min(m, p.length);
    return m;
  }
  double largest_panel() const {
    double m = 0.0;
    for (const auto& p : layer_.panels()) m = std::max(m, p.length);
    return m;
  }

  /// Index of the node at (x, -y) for every node; throws if the mesh is not
  /// mirror-symmetric.
  std::vector<int> mirror_y_permutation(double tol = 1e-13) const {
    const auto& x = layer_.nodes();
    const int n = num_nodes();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto key = [&](int i) { return std::pair{x[i].x, std::abs(x[i].y)}; };
    std::sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
    std::vector<int> perm(n, -1);
    for (int i = 0; i < n; ++i) {
      const Vec2 target = mirror_y(x[i]);
      // Candidates share |y| and x up to rounding; scan a small window.
      auto lo = std::lower_bound(order.begin(), order.end(), i, [&](int a, int) {
        return x[a].x < target.x - tol;
      });
      for (auto it = lo; it != order.end() && x[*it].x <= target.x + tol; ++it) {
        if (norm(x[*it] - target) <= tol * (1.0 + norm(target))) {
          perm[i] = *it;
          break;
        }
      }
      if (perm[i] < 0) throw SolverError("mesh is not symmetric about the x-axis");
    }
    return perm;
  }

 private:
  BowTieGeometry geom_;
  MeshOptions opt_;
  SingleLayer layer_;
};

enum class ProblemKind { u_problem, q_problem };

/// Single-layer solution: value = h + S[mu], equal to constant[j] on inclusion j.
class PotentialSolution {
 public:
  PotentialSolution(std::shared_ptr<const BoundaryMesh> mesh, ProblemKind kind, LinearH h, Eigen::VectorXd mu,
                    double c1, double c2)
      : mesh_(std::move(mesh)), kind_(kind), h_(h), mu_(std::move(mu)), c_{c1, c2} {}

  ProblemKind kind() const { return kind_; }
  const LinearH& h() const { return h_; }
  const Eigen::VectorXd& density() const { return mu_; }
  const BoundaryMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const BoundaryMesh> mesh_ptr() const { return mesh_; }
  /// Boundary constant on inclusion j (c_j for u, d_j for q).
  double constant(int j) const { return c_[j - 1]; }

  double value(Vec2 x) const {
    check_exterior(x);
    return h_(x) + mesh_->layer().potential(mu_, x);
  }

  Vec2 gradient(Vec2 x) const {
    check_exterior(x);
    return h_.grad() + mesh_->layer().gradient(mu_, x);
  }

  std::vector<Vec2> gradients(const std::vector<Vec2>& xs) const {
    std::vector<Vec2> out(xs.size());
    for (const Vec2& x : xs) check_exterior(x);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(xs.size()); ++i)
      out[i] = h_.grad() + mesh_->layer().gradient(mu_, xs[i]);
    return out;
  }

  /// Total charge of inclusion j, which equals its flux int d_nu (.) ds.
  double flux(int j) const {
    const auto& l = mesh_->layer();
    double s = 0.0;
    for (int i = 0; i < l.num_nodes(); ++i)
      if (l.component_of(i) == j - 1) s += l.weights()[i] * mu_[i];
    return s;
  }

  /// Sup over off-node check points (midpoints between Gauss nodes) of
  /// |value - constant|.
  double boundary_residual() const {
    const auto& l = mesh_->layer();
    const auto& r = l.rule();
    const int np = int(l.panels().size());
    std::vector<double> worst(np, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (int p = 0; p < np; ++p) {
      const Panel& pan = l.panels()[p];
      for (int k = 0; k + 1 < r.size(); ++k) {
        const double u = 0.5 * (r.nodes[k] + r.nodes[k + 1]);
        const double v = h_(pan.point(u)) + l.potential_on_panel(mu_, p, u);
        worst[p] = std::max(worst[p], std::abs(v - c_[pan.component]));
      }
    }
    return *std::max_element(worst.begin(), worst.end());
  }

 private:
  void check_exterior(Vec2 x) const {
    if (!mesh_->geometry().in_exterior(x)) throw DomainError("evaluation point lies inside an inclusion");
  }

  std::shared_ptr<const BoundaryMesh> mesh_;
  ProblemKind kind_;
  LinearH h_;
  Eigen::VectorXd mu_;
  double c_[2];
};

struct SolverDiagnostics {
  int unknowns = 0;
  int panels = 0;
  double smallest_panel = 0.0;
  double largest_panel = 0.0;
  double rcond = 0.0;
  double assembly_seconds = 0.0;
  double factor_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Dense augmented system [A, -E; W, 0] shared by every right-hand side on one mesh.
class FieldSolver {
 public:
  explicit FieldSolver(const BowTieGeometry& g, const MeshOptions& opt = {})
      : mesh_(std::make_shared<BoundaryMesh>(g, opt)) {
    const auto& l = mesh_->layer();
    const int n = l.num_nodes();
    auto t0 = now();
    // Unknowns are the node charges w_k mu_k, which keeps the tiny vertex
    // panels from wrecking the column scaling.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 2, n + 2);
    m.topLeftCorner(n, n) = l.matrix();
    for (int k = 0; k < n; ++k) m.col(k) /= l.weights()[k];
    for (int i = 0; i < n; ++i) {
      const int c = l.component_of(i);
      m(i, n + c) = -1.0;
      m(n + c, i) = 1.0;
    }
    auto t1 = now();
    lu_.compute(m);
    auto t2 = now();
    diag_.unknowns = n;
    diag_.panels = mesh_->num_panels();
    diag_.smallest_panel = mesh_->smallest_panel();
    diag_.largest_panel = mesh_->largest_panel();
    diag_.rcond = lu_.rcond();
    diag_.assembly_seconds = t1 - t0;
    diag_.factor_seconds = t2 - t1;
    if (diag_.rcond < opt.rcond_warn)
      diag_.warnings.push_back("reciprocal condition estimate " + std::to_string(diag_.rcond) +
                               " below threshold; consider a finer grading");
  }

  const BoundaryMesh& mesh() const { return *mesh_; }
  const BowTieGeometry& geometry() const { return mesh_->geometry(); }
  const SolverDiagnostics& diagnostics() const { return diag_; }

  /// u = c_j on the boundaries, zero flux, u - h = O(1/|X|).
  PotentialSolution solve_u(LinearH h) const {
    const auto& l = mesh_->layer();
    const int n = l.num_nodes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 2);
    for (int i = 0; i < n; ++i) rhs[i] = -h(l.nodes()[i]);
    return finish(ProblemKind::u_problem, h, rhs);
  }

  /// Fluxes -1 on Omega_1 and +1 on Omega_2, q = O(1/|X|).
  PotentialSolution solve_q() const {
    const int n = mesh_->num_nodes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 2);
    rhs[n] = -1.0;
    rhs[n + 1] = 1.0;
    return finish(ProblemKind::q_problem, LinearH{0.0, 0.0}, rhs);
  }

  /// Raw solve in charge unknowns [w mu; c1; c2], for symmetry tests.
  Eigen::VectorXd solve_raw(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }

 private:
  static double now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  }

  PotentialSolution finish(ProblemKind kind, LinearH h, const Eigen::VectorXd& rhs) const {
    const int n = mesh_->num_nodes();
    const Eigen::VectorXd x = lu_.solve(rhs);
    Eigen::VectorXd mu = x.head(n);
    for (int k = 0; k < n; ++k) mu[k] /= mesh_->layer().weights()[k];
    return PotentialSolution(mesh_, kind, h, std::move(mu), x[n], x[n + 1]);
  }

  std::shared_ptr<const BoundaryMesh> mesh_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  SolverDiagnostics diag_;
};

/// eta = (q - d_1) / (d_2 - d_1).
class EtaView {
 public:
  explicit EtaView(const PotentialSolution& q) : q_(q), d1_(q.constant(1)), d2_(q.constant(2)) {
    if (q.kind() != ProblemKind::q_problem) throw DomainError("eta requires a q-problem solution");
  }
  double value(Vec2 x) const { return (q_.value(x) - d1_) / (d2_ - d1_); }
  Vec2 gradient(Vec2 x) const { return q_.gradient(x) / (d2_ - d1_); }
  /// Limit at infinity.
  double eta0() const { return -d1_ / (d2_ - d1_); }

 private:
  const PotentialSolution& q_;
  double d1_, d2_;
};

inline EtaView eta_from_q(const PotentialSolution& q) { return EtaView(q); }

/// |delta_u - int h d_nu q ds| / |delta_u|.
inline double potential_difference_identity(const PotentialSolution& u, const PotentialSolution& q) {
  if (&u.mesh() != &q.mesh()) throw DomainError("u and q must share one mesh");
  const auto& l = u.mesh().layer();
  double rhs = 0.0;
  for (int i = 0; i < l.num_nodes(); ++i) rhs += l.weights()[i] * u.h()(l.nodes()[i]) * q.density()[i];
  const double du = u.constant(2) - u.constant(1);
  return std::abs(du - rhs) / std::abs(du);
}

/// Right-hand side of the identity alone, for null-case checks.
inline double flux_weighted_h(const PotentialSolution& u, const PotentialSolution& q) {
  const auto& l = u.mesh().layer();
  double rhs = 0.0;
  for (int i = 0; i < l.num_nodes(); ++i) rhs += l.weights()[i] * u.h()(l.nodes()[i]) * q.density()[i];
  return rhs;
}

struct DerivedConstants {
  double delta_q = 0.0;
  double delta_u = 0.0;
  double c_u = 0.0;
  double a_eps = 0.0;
  double eta0 = 0.0;
};

inline DerivedConstants derived_constants(const PotentialSolution& u, const PotentialSolution& q,
                                          const BowTieGeometry& g, double noise_floor = 1e-12) {
  DerivedConstants d;
  d.delta_q = q.constant(2) - q.constant(1);
  if (!(std::abs(d.delta_q) > noise_floor)) throw SolverError("q potential difference below the noise floor");
  d.delta_u = u.constant(2) - u.constant(1);
  d.c_u = d.delta_u / d.delta_q;
  d.a_eps = d.delta_u * gamma_exponent(g.angles()) * std::abs(std::log(g.eps())) / pi;
  d.eta0 = -q.constant(1) / d.delta_q;
  return d;
}

}  // namespace bowtie
