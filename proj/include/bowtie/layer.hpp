#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "bowtie/common.hpp"
#include "bowtie/curve.hpp"
#include "bowtie/quadrature.hpp"

namespace bowtie {

/// Free-space Laplace Green's function -log|x - y| / (2 pi).
inline double green(Vec2 x, Vec2 y) { return -std::log(norm2(x - y)) / (4.0 * pi); }

/// Gradient of green() with respect to x.
inline Vec2 green_grad(Vec2 x, Vec2 y) {
  const Vec2 d = x - y;
  return d * (-1.0 / (2.0 * pi * norm2(d)));
}

/// One Gauss-Legendre panel on a boundary piece, covering t in [t0, t1].
struct Panel {
  Piece piece;
  double t0 = 0.0, t1 = 1.0;
  int component = 0;
  double length = 0.0;
  Vec2 center{};
  int first_node = 0;

  Vec2 point(double u) const { return piece.point(t0 + 0.5 * (t1 - t0) * (u + 1.0)); }
  /// |dy/du|, constant because pieces are arc-length proportional.
  double speed() const { return 0.5 * length; }
  /// |point(u) - point(v)| without cancellation in absolute coordinates.
  double chord(double u, double v) const {
    const double dt = 0.5 * (t1 - t0) * (u - v);
    if (piece.kind == Piece::Kind::segment) return std::abs(dt) * piece.length();
    return 2.0 * piece.radius * std::abs(std::sin(0.5 * dt * (piece.angle1 - piece.angle0)));
  }
};

/// Nystrom discretization of the single-layer potential S[mu](x) = int G(x,y) mu(y) ds_y
/// on a union of closed curves. The density is represented by its values at
/// panel Gauss nodes; near and self interactions integrate the panel's
/// Lagrange interpolant with adaptive subdivision.
class SingleLayer {
 public:
  /// Sub-panels closer than `kNear` times their length are subdivided.
  static constexpr double kNear = 1.6;
  static constexpr int kMaxDepth = 56;
  static constexpr int kSelfLevels = 44;

  explicit SingleLayer(int order = 16, int sub_order = 16)
      : rule_(&gauss_rule(order)), sub_(&gauss_rule(sub_order)) {}

  int order() const { return rule_->size(); }

  /// Appends panels on `piece` between consecutive arc-length `breaks`.
  void add_piece(const Piece& piece, const std::vector<double>& breaks, int component) {
    const double len = piece.length();
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      Panel p;
      p.piece = piece;
      p.t0 = breaks[i] / len;
      p.t1 = breaks[i + 1] / len;
      p.component = component;
      p.length = breaks[i + 1] - breaks[i];
      p.center = piece.point(0.5 * (p.t0 + p.t1));
      p.first_node = int(nodes_.size());
      for (int k = 0; k < order(); ++k) {
        nodes_.push_back(p.point(rule_->nodes[k]));
        weights_.push_back(rule_->weights[k] * p.speed());
        node_panel_.push_back(int(panels_.size()));
        node_component_.push_back(component);
      }
      panels_.push_back(p);
    }
    num_components_ = std::max(num_components_, component + 1);
  }

  int num_nodes() const { return int(nodes_.size()); }
  int num_components() const { return num_components_; }
  const std::vector<Panel>& panels() const { return panels_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  int component_of(int i) const { return node_component_[i]; }
  int panel_of(int i) const { return node_panel_[i]; }
  double local_coordinate(int i) const { return rule_->nodes[i - panels_[node_panel_[i]].first_node]; }
  const GaussRule& rule() const { return *rule_; }

  /// Integral of G(x_i, .) against each node's Lagrange basis, using the
  /// singular rule on the target's own panel.
  Eigen::MatrixXd matrix() const {
    const int n = num_nodes();
    Eigen::MatrixXd a(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
      std::vector<double> buf(order());
      const Vec2 x = nodes_[i];
      for (int k = 0; k < n; ++k) a(i, k) = (k == i) ? 0.0 : green(x, nodes_[k]) * weights_[k];
      const int own = node_panel_[i];
      for (int p = 0; p < int(panels_.size()); ++p) {
        const Panel& pan = panels_[p];
        if (p == own) {
          self_integrals(pan, local_coordinate(i), buf.data());
        } else if (norm(x - pan.center) < kNear * pan.length) {
          near_integrals(pan, x, buf.data());
        } else {
          continue;
        }
        for (int k = 0; k < order(); ++k) a(i, pan.first_node + k) = buf[k];
      }
    }
    return a;
  }

  /// Single-layer potential at an off-surface point.
  double potential(const Eigen::VectorXd& mu, Vec2 x) const {
    double sum = 0.0;
    std::array<double, 64> buf{};
    for (const Panel& pan : panels_) {
      const double* m = mu.data() + pan.first_node;
      if (norm(x - pan.center) < kNear * pan.length) {
        near_integrals(pan, x, buf.data());
        for (int k = 0; k < order(); ++k) sum += buf[k] * m[k];
      } else {
        for (int k = 0; k < order(); ++k)
          sum += green(x, nodes_[pan.first_node + k]) * weights_[pan.first_node + k] * m[k];
      }
    }
    return sum;
  }

  /// Potential at the point with local coordinate u on panel `panel`.
  double potential_on_panel(const Eigen::VectorXd& mu, int panel, double u) const {
    const Panel& own = panels_[panel];
    const Vec2 x = own.point(u);
    double sum = 0.0;
    std::array<double, 64> buf{};
    for (int p = 0; p < int(panels_.size()); ++p) {
      const Panel& pan = panels_[p];
      const double* m = mu.data() + pan.first_node;
      if (p == panel) {
        self_integrals(pan, u, buf.data());
      } else if (norm(x - pan.center) < kNear * pan.length) {
        near_integrals(pan, x, buf.data());
      } else {
        for (int k = 0; k < order(); ++k)
          sum += green(x, nodes_[pan.first_node + k]) * weights_[pan.first_node + k] * m[k];
        continue;
      }
      for (int k = 0; k < order(); ++k) sum += buf[k] * m[k];
    }
    return sum;
  }

  /// Gradient of the single-layer potential at an off-surface point.
  Vec2 gradient(const Eigen::VectorXd& mu, Vec2 x) const {
    Vec2 sum{};
    std::array<double, 64> gx{}, gy{};
    for (const Panel& pan : panels_) {
      const double* m = mu.data() + pan.first_node;
      if (norm(x - pan.center) < kNear * pan.length) {
        near_grad_integrals(pan, x, gx.data(), gy.data());
        for (int k = 0; k < order(); ++k) sum += Vec2{gx[k], gy[k]} * m[k];
      } else {
        for (int k = 0; k < order(); ++k)
          sum += green_grad(x, nodes_[pan.first_node + k]) * (weights_[pan.first_node + k] * m[k]);
      }
    }
    return sum;
  }

  /// Interpolated density at local coordinate u of a panel.
  double density_on_panel(const Eigen::VectorXd& mu, int panel, double u) const {
    std::array<double, 64> l{};
    lagrange_basis(*rule_, u, l.data());
    double s = 0.0;
    for (int k = 0; k < order(); ++k) s += l[k] * mu[panels_[panel].first_node + k];
    return s;
  }

 private:
  template <class Accum>
  void gauss_on(const Panel& pan, double ua, double ub, Accum&& acc) const {
    std::array<double, 64> l{};
    const double half = 0.5 * (ub - ua);
    for (int q = 0; q < sub_->size(); ++q) {
      const double u = ua + half * (sub_->nodes[q] + 1.0);
      const Vec2 y = pan.point(u);
      lagrange_basis(*rule_, u, l.data());
      acc(y, sub_->weights[q] * half * pan.speed(), l.data());
    }
  }

  /// As gauss_on, passing the local coordinate instead of the point.
  template <class Accum>
  void gauss_local(const Panel& pan, double ua, double ub, Accum&& acc) const {
    std::array<double, 64> l{};
    const double half = 0.5 * (ub - ua);
    for (int q = 0; q < sub_->size(); ++q) {
      const double u = ua + half * (sub_->nodes[q] + 1.0);
      lagrange_basis(*rule_, u, l.data());
      acc(u, sub_->weights[q] * half * pan.speed(), l.data());
    }
  }

  template <class Accum>
  void adaptive(const Panel& pan, Vec2 x, Accum&& acc) const {
    struct Item {
      double ua, ub;
      int depth;
    };
    std::array<Item, 2 * kMaxDepth + 4> stack{};
    int top = 0;
    stack[top++] = {-1.0, 1.0, 0};
    while (top > 0) {
      const Item it = stack[--top];
      const double sub_len = 0.5 * (it.ub - it.ua) * pan.length;
      const Vec2 c = pan.point(0.5 * (it.ua + it.ub));
      if (norm(x - c) >= kNear * sub_len || it.depth >= kMaxDepth) {
        gauss_on(pan, it.ua, it.ub, acc);
      } else {
        const double um = 0.5 * (it.ua + it.ub);
        stack[top++] = {it.ua, um, it.depth + 1};
        stack[top++] = {um, it.ub, it.depth + 1};
      }
    }
  }

  void near_integrals(const Panel& pan, Vec2 x, double* out) const {
    const int n = order();
    for (int k = 0; k < n; ++k) out[k] = 0.0;
    adaptive(pan, x, [&](Vec2 y, double w, const double* l) {
      const double g = green(x, y) * w;
      for (int k = 0; k < n; ++k) out[k] += g * l[k];
    });
  }

  void near_grad_integrals(const Panel& pan, Vec2 x, double* gx, double* gy) const {
    const int n = order();
    for (int k = 0; k < n; ++k) gx[k] = gy[k] = 0.0;
    adaptive(pan, x, [&](Vec2 y, double w, const double* l) {
      const Vec2 g = green_grad(x, y) * w;
      for (int k = 0; k < n; ++k) {
        gx[k] += g.x * l[k];
        gy[k] += g.y * l[k];
      }
    });
  }

  /// Target on the panel itself at local coordinate u0: geometric
  /// subdivision toward the logarithmic singularity from both sides.
  void self_integrals(const Panel& pan, double u0, double* out) const {
    const int n = order();
    for (int k = 0; k < n; ++k) out[k] = 0.0;
    auto acc = [&](double u, double w, const double* l) {
      const double g = -std::log(pan.chord(u, u0)) / (2.0 * pi) * w;
      for (int k = 0; k < n; ++k) out[k] += g * l[k];
    };
    for (int side = 0; side < 2; ++side) {
      const double far = side == 0 ? -1.0 : 1.0;
      double len = std::abs(far - u0);
      if (len == 0.0) continue;
      double outer = far;
      for (int m = 0; m < kSelfLevels; ++m) {
        len *= 0.5;
        const double inner = side == 0 ? u0 - len : u0 + len;
        if (side == 0)
          gauss_local(pan, outer, inner, acc);
        else
          gauss_local(pan, inner, outer, acc);
        outer = inner;
      }
    }
  }

  const GaussRule* rule_;
  const GaussRule* sub_;
  std::vector<Panel> panels_;
  std::vector<Vec2> nodes_;
  std::vector<double> weights_;
  std::vector<int> node_panel_;
  std::vector<int> node_component_;
  int num_components_ = 0;
};

}  // namespace bowtie
