#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bowtie/common.hpp"
#include "bowtie/curve.hpp"
#include "bowtie/geometry.hpp"
#include "bowtie/layer.hpp"
#include "bowtie/quadrature.hpp"
#include "bowtie/singular_basis.hpp"

namespace bowtie {

struct CorrectorOptions {
  /// Truncation radius about Q as a multiple of rho_0; ignored when r_t > 0.
  double rt_factor = 32.0;
  double r_t = 0.0;
  int order = 12;
  double ratio = 0.5;
  /// Smallest panel at S_1, S_2 (unit scale).
  double vertex_min = 1e-9;
  /// Smallest panel at the four edge/arc junctions, relative to R_t.
  double junction_min_rel = 1e-7;
  /// Largest panel relative to R_t.
  double max_panel_rel = 1.0 / 16.0;
  int modes = 8;
  /// Arcs used to fit the tail coefficients, as multiples of rho_0.
  double fit_radius_factor = 2.0;
  /// Refuse when the tail size sum |a_n| R_t^{-n gamma} exceeds this.
  double tail_tolerance = 1e-2;
  double residual_gate = 1e-8;
};

struct CorrectorDiagnostics {
  int unknowns = 0;
  /// Sup of |S sigma + c0 - f| over collocation nodes.
  double collocation_residual = 0.0;
  /// Same over midpoints between nodes.
  double check_residual = 0.0;
  double tail_size = 0.0;
  double seconds = 0.0;
};

/// Phi = phi + w on Pi, computed from the Dirichlet problem on the truncated
/// domain D = {X in Pi : |X* - Q| < R_t} with Phi = phi on the arcs.
/// Far away Phi is represented by the tail phi + sum a_n rho^{-n gamma} sin(n gamma phi).
class CorrectorSolution {
 public:
  static constexpr int kVersion = 1;

  CorrectorSolution(const ApertureAngles& angles, const CorrectorOptions& opt)
      : basis_(angles), opt_(opt), layer_(std::make_shared<SingleLayer>(opt.order)) {
    const GapFrame& g = basis_.gap();
    rho0_ = std::max(norm(g.cone1.vertex - g.q), norm(g.cone2.vertex - g.q));
    r_t_ = opt.r_t > 0.0 ? opt.r_t : opt.rt_factor * rho0_;
    if (r_t_ < 8.0 * rho0_)
      throw ConfigError("truncation radius " + std::to_string(r_t_) + " is below 8 rho_0 = " +
                        std::to_string(8.0 * rho0_));
    if (opt.modes < 1) throw ConfigError("at least one tail mode is required");
    build_mesh();
  }

  const SingularBasis& basis() const { return basis_; }
  const ApertureAngles& angles() const { return basis_.angles(); }
  const CorrectorOptions& options() const { return opt_; }
  const SingleLayer& layer() const { return *layer_; }
  double r_t() const { return r_t_; }
  double rho0() const { return rho0_; }
  double gamma() const { return basis_.gamma(); }
  double opening() const { return pi / basis_.gamma(); }
  const Eigen::VectorXd& density() const { return mu_; }
  double c0() const { return c0_; }
  const std::vector<double>& tail() const { return tail_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const CorrectorDiagnostics& diagnostics() const { return diag_; }

  /// Dirichlet data on the boundary of D.
  double data(Vec2 x, int piece_tag) const {
    switch (piece_tag) {
      case 0: return 0.0;
      case 1: return opening();
      default: return gap_polar(basis_.gap(), x).phi;
    }
  }

  /// The discrete harmonic function on D (no truncation correction).
  double phi_truncated(Vec2 x) const { return layer_->potential(mu_, x) + c0_; }
  Vec2 grad_phi_truncated(Vec2 x) const { return layer_->gradient(mu_, x); }

  /// rho(X*) at or beyond which the tail series replaces the discrete solution.
  double tail_switch() const { return 0.5 * r_t_; }

  /// 1 or 2 when x lies on an edge of S_j (to rounding), else 0.
  int on_cone_edge(Vec2 x) const {
    for (int j = 1; j <= 2; ++j) {
      const ConeFrame& f = basis_.frame(j);
      const Vec2 d = x - f.vertex;
      const double r = norm(d);
      for (const Vec2 e : {f.reference_ray, f.lower_ray()})
        if (dot(d, e) >= 0.0 && std::abs(cross(e, d)) <= 1e-14 * (1.0 + r)) return j;
    }
    return 0;
  }

  // On the cone edges the layer quadrature is singular; Phi takes its data there.
  double eval_w(Vec2 x) const {
    const GapPolar p = gap_polar(basis_.gap(), x);
    if (p.rho >= tail_switch()) return tail_value(p);
    if (const int j = on_cone_edge(x)) return (j == 1 ? 0.0 : opening()) - p.phi;
    return phi_truncated(x) - p.phi + truncation_value(p);
  }

  Vec2 eval_grad_w(Vec2 x) const {
    const GapPolar p = gap_polar(basis_.gap(), x);
    if (p.rho >= tail_switch()) return tail_gradient(x, p, false);
    return grad_phi_truncated(x) - basis_.grad_phi(x).grad + tail_gradient(x, p, true);
  }

  double eval_Phi(Vec2 x) const {
    const GapPolar p = gap_polar(basis_.gap(), x);
    if (p.rho >= tail_switch()) return p.phi + tail_value(p);
    if (const int j = on_cone_edge(x)) return j == 1 ? 0.0 : opening();
    return phi_truncated(x) + truncation_value(p);
  }

  Vec2 eval_grad_Phi(Vec2 x) const { return basis_.grad_phi(x).grad + eval_grad_w(x); }

  /// Sine coefficients c_n(R) = (2 gamma / pi) int_0^{pi/gamma} w_t(R, phi) sin(n gamma phi) dphi
  /// of the discrete w on the arc rho = R, converted to tail coefficients a_n.
  std::vector<double> fit_tail(double radius) const {
    const double gm = gamma();
    const GapFrame& g = basis_.gap();
    std::vector<double> out(opt_.modes, 0.0);
    for (int n = 1; n <= opt_.modes; ++n) {
      const double c = (2.0 * gm / pi) * integrate(
                                              [&](double ph) {
                                                const Vec2 x = g.q + unit(g.ref_angle - ph) * radius;
                                                return (phi_truncated(x) - ph) * std::sin(n * gm * ph);
                                              },
                                              0.0, opening(), 32, 4);
      const double m = n * gm;
      out[n - 1] = c / (std::pow(radius, -m) - std::pow(r_t_, -2.0 * m) * std::pow(radius, m));
    }
    return out;
  }

  void solve() {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = layer_->num_nodes();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    m.topLeftCorner(n, n) = layer_->matrix();
    for (int k = 0; k < n; ++k) m.col(k) /= layer_->weights()[k];
    m.col(n).head(n).setOnes();
    m.row(n).head(n).setOnes();
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) rhs[i] = data(layer_->nodes()[i], tag_[layer_->panel_of(i)]);
    rhs[n] = 0.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    const Eigen::VectorXd x = lu.solve(rhs);
    diag_.collocation_residual = (m * x - rhs).head(n).lpNorm<Eigen::Infinity>();
    mu_ = x.head(n);
    for (int k = 0; k < n; ++k) mu_[k] /= layer_->weights()[k];
    c0_ = x[n];
    finish();
    diag_.unknowns = n;
    diag_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!(diag_.collocation_residual < opt_.residual_gate))
      throw SolverError("corrector collocation residual " + std::to_string(diag_.collocation_residual) +
                        " above gate");
    if (diag_.tail_size > opt_.tail_tolerance)
      throw SolverError("truncation radius too small: tail size " + std::to_string(diag_.tail_size) +
                        " exceeds tolerance");
  }

  /// Sup of |Phi_t - f| over midpoints between nodes.
  double check_residual() const {
    const auto& r = layer_->rule();
    double worst = 0.0;
    for (int p = 0; p < int(layer_->panels().size()); ++p) {
      const Panel& pan = layer_->panels()[p];
      for (int k = 0; k + 1 < r.size(); ++k) {
        const double u = 0.5 * (r.nodes[k] + r.nodes[k + 1]);
        const double v = layer_->potential_on_panel(mu_, p, u) + c0_;
        worst = std::max(worst, std::abs(v - data(pan.point(u), tag_[p])));
      }
    }
    return worst;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["alpha1"] = angles().alpha1();
    j["alpha2"] = angles().alpha2();
    j["r_t"] = r_t_;
    j["options"] = {{"order", opt_.order},
                    {"ratio", opt_.ratio},
                    {"vertex_min", opt_.vertex_min},
                    {"junction_min_rel", opt_.junction_min_rel},
                    {"max_panel_rel", opt_.max_panel_rel},
                    {"modes", opt_.modes},
                    {"fit_radius_factor", opt_.fit_radius_factor},
                    {"tail_tolerance", opt_.tail_tolerance},
                    {"residual_gate", opt_.residual_gate}};
    nlohmann::json nodes = nlohmann::json::array();
    for (const Vec2& x : layer_->nodes()) nodes.push_back({x.x, x.y});
    j["nodes"] = nodes;
    j["density"] = std::vector<double>(mu_.data(), mu_.data() + mu_.size());
    j["c0"] = c0_;
    j["a_n"] = tail_;
    j["a"] = a_;
    j["b"] = b_;
    j["diagnostics"] = {{"unknowns", diag_.unknowns},
                        {"collocation_residual", diag_.collocation_residual},
                        {"check_residual", diag_.check_residual},
                        {"tail_size", diag_.tail_size}};
    return j;
  }

  /// Rebuilds the mesh from the stored options and checks it against the
  /// stored node table before adopting the density.
  static CorrectorSolution from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported corrector file version");
    CorrectorOptions o;
    const auto& jo = j.at("options");
    o.r_t = j.at("r_t").get<double>();
    o.order = jo.at("order").get<int>();
    o.ratio = jo.at("ratio").get<double>();
    o.vertex_min = jo.at("vertex_min").get<double>();
    o.junction_min_rel = jo.at("junction_min_rel").get<double>();
    o.max_panel_rel = jo.at("max_panel_rel").get<double>();
    o.modes = jo.at("modes").get<int>();
    o.fit_radius_factor = jo.at("fit_radius_factor").get<double>();
    o.tail_tolerance = jo.at("tail_tolerance").get<double>();
    o.residual_gate = jo.at("residual_gate").get<double>();
    CorrectorSolution s(ApertureAngles(j.at("alpha1").get<double>(), j.at("alpha2").get<double>()), o);
    const auto& nodes = j.at("nodes");
    const auto dens = j.at("density").get<std::vector<double>>();
    if (int(nodes.size()) != s.layer_->num_nodes() || int(dens.size()) != s.layer_->num_nodes())
      throw ConfigError("corrector file does not match the rebuilt mesh");
    for (int i = 0; i < s.layer_->num_nodes(); ++i) {
      const Vec2 x{nodes[i][0].get<double>(), nodes[i][1].get<double>()};
      if (norm(x - s.layer_->nodes()[i]) > 1e-12 * (1.0 + norm(x)))
        throw ConfigError("corrector node table does not match the rebuilt mesh");
    }
    s.mu_ = Eigen::Map<const Eigen::VectorXd>(dens.data(), Eigen::Index(dens.size()));
    s.c0_ = j.at("c0").get<double>();
    s.tail_ = j.at("a_n").get<std::vector<double>>();
    s.a_ = j.at("a").get<double>();
    s.b_ = j.at("b").get<double>();
    const auto& d = j.at("diagnostics");
    s.diag_.unknowns = d.at("unknowns").get<int>();
    s.diag_.collocation_residual = d.at("collocation_residual").get<double>();
    s.diag_.check_residual = d.at("check_residual").get<double>();
    s.diag_.tail_size = d.at("tail_size").get<double>();
    return s;
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write corrector file " + path);
    f << to_json().dump() << '\n';
    if (!f) throw std::runtime_error("error writing corrector file " + path);
  }

  static CorrectorSolution load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read corrector file " + path);
    nlohmann::json j;
    try {
      f >> j;
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed corrector file " + path + ": " + e.what());
    }
  }

 private:
  void build_mesh() {
    const GapFrame& g = basis_.gap();
    const ConeFrame* cones[2] = {&g.cone1, &g.cone2};
    const double max_panel = opt_.max_panel_rel * r_t_;
    const double jmin = opt_.junction_min_rel * r_t_;
    Vec2 ends[2];
    std::vector<std::pair<Piece, int>> upper;
    for (int j = 0; j < 2; ++j) {
      const ConeFrame& c = *cones[j];
      ends[j] = g.q + c.reference_ray * r_t_;
      upper.emplace_back(Piece::segment(c.vertex, ends[j]), j);
    }
    const double a0 = g.ref_angle;
    const double a1 = 0.5 * angles().alpha2();
    upper.emplace_back(Piece::arc(g.q, r_t_, a0, a1), 2);
    for (int half = 0; half < 2; ++half) {
      for (const auto& [piece, tag] : upper) {
        const Piece pc = half == 0 ? piece : piece.mirrored_y();
        const double len = pc.length();
        std::vector<double> br = tag == 2 ? graded_breaks(len, jmin, jmin, opt_.ratio, max_panel)
                                          : graded_breaks(len, opt_.vertex_min, jmin, opt_.ratio, max_panel);
        const int before = int(layer_->panels().size());
        layer_->add_piece(pc, br, 0);
        tag_.resize(layer_->panels().size(), tag);
        (void)before;
      }
    }
  }

  void finish() {
    const double fit_r = opt_.fit_radius_factor * rho0_;
    tail_ = fit_tail(fit_r);
    diag_.tail_size = 0.0;
    for (int n = 1; n <= opt_.modes; ++n) diag_.tail_size += std::abs(tail_[n - 1]) * std::pow(r_t_, -n * gamma());
    diag_.check_residual = check_residual();
    extract();
  }

  void extract() {
    const double b1 = basis_.beta(1), b2 = basis_.beta(2);
    const ConeFrame& f1 = basis_.frame(1);
    const ConeFrame& f2 = basis_.frame(2);
    const double gm = gamma();
    // Points at distance 1/2 from S_j with angle theta_j measured through Pi.
    auto on_arc1 = [&](double th) { return f1.vertex + unit(pi - 0.5 * f1.opening - th) * 0.5; };
    auto on_arc2 = [&](double th) { return f2.vertex + unit(0.5 * f2.opening + th) * 0.5; };
    a_ = b1 * std::pow(2.0, b1 + 1.0) / pi *
         integrate([&](double th) { return std::sin(b1 * th) * eval_Phi(on_arc1(th)); }, 0.0, pi / b1, 32, 4);
    const double at =
        b2 * std::pow(2.0, b2 + 1.0) / pi *
        integrate([&](double th) { return std::sin(b2 * th) * (pi / gm - eval_Phi(on_arc2(th))); }, 0.0, pi / b2,
                  32, 4);
    if (!(a_ > 0.0) || !(at > 0.0)) throw SolverError("extracted corner coefficients are not positive");
    b_ = at / a_;
  }

  double truncation_value(const GapPolar& p) const {
    double s = 0.0;
    for (int n = 1; n <= int(tail_.size()); ++n) {
      const double m = n * gamma();
      s += tail_[n - 1] * std::pow(r_t_, -2.0 * m) * std::pow(p.rho, m) * std::sin(m * p.phi);
    }
    return s;
  }

  double tail_value(const GapPolar& p) const {
    double s = 0.0;
    for (int n = 1; n <= int(tail_.size()); ++n) {
      const double m = n * gamma();
      s += tail_[n - 1] * std::pow(p.rho, -m) * std::sin(m * p.phi);
    }
    return s;
  }

  /// Gradient of the decaying tail series, or of the growing truncation
  /// correction when `growing` is set.
  Vec2 tail_gradient(Vec2 x, const GapPolar& p, bool growing) const {
    double dr = 0.0, dphi = 0.0;
    for (int n = 1; n <= int(tail_.size()); ++n) {
      const double m = n * gamma();
      double c, e;
      if (growing) {
        c = tail_[n - 1] * std::pow(r_t_, -2.0 * m);
        e = m;
      } else {
        c = tail_[n - 1];
        e = -m;
      }
      const double rp = std::pow(p.rho, e);
      dr += c * e * rp / p.rho * std::sin(m * p.phi);
      dphi += c * rp * m * std::cos(m * p.phi);
    }
    // In Pi+, e_rho = d / rho and grad phi = (d.y, -d.x) / rho^2.
    const Vec2 d = Vec2{x.x, std::abs(x.y)} - basis_.gap().q;
    Vec2 g = d * (dr / p.rho) + Vec2{d.y, -d.x} * (dphi / (p.rho * p.rho));
    if (x.y < 0.0) g.y = -g.y;
    return g;
  }

  SingularBasis basis_;
  CorrectorOptions opt_;
  std::shared_ptr<SingleLayer> layer_;
  std::vector<int> tag_;
  double rho0_ = 0.0;
  double r_t_ = 0.0;
  Eigen::VectorXd mu_;
  double c0_ = 0.0;
  std::vector<double> tail_;
  double a_ = 0.0, b_ = 0.0;
  CorrectorDiagnostics diag_;
};

inline CorrectorSolution solve_corrector(const ApertureAngles& angles, const CorrectorOptions& opt = {}) {
  CorrectorSolution s(angles, opt);
  s.solve();
  return s;
}

struct CornerConstants {
  double a = 0.0;
  double b = 0.0;
};

inline CornerConstants extract_ab(const CorrectorSolution& s) { return {s.a(), s.b()}; }

}  // namespace bowtie
