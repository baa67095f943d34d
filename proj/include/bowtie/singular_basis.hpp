#pragma once

#include <cmath>

#include "bowtie/common.hpp"
#include "bowtie/geometry.hpp"

namespace bowtie {

struct PhiGradient {
  Vec2 grad{};
  /// Set on the symmetry slot y = 0 between the cones, where grad is the
  /// limit from y > 0.
  bool on_slot = false;
};

/// Closed-form corner functions B_j = r_j^{beta_j} sin(beta_j theta_j) and the
/// gap angle phi for one aperture pair, at unit scale.
class SingularBasis {
 public:
  explicit SingularBasis(const ApertureAngles& a)
      : angles_(a),
        cone_{ConeFrame::make(1, a.alpha1()), ConeFrame::make(2, a.alpha2())},
        beta_{bowtie::beta(a.alpha1()), bowtie::beta(a.alpha2())},
        gap_(GapFrame::make(a)) {}

  const ApertureAngles& angles() const { return angles_; }
  const ConeFrame& frame(int j) const { return cone_[idx(j)]; }
  const GapFrame& gap() const { return gap_; }
  double beta(int j) const { return beta_[idx(j)]; }
  double gamma() const { return gap_.gamma; }
  Vec2 q() const { return gap_.q; }

  double eval_B(int j, Vec2 x) const {
    const ConePolar p = cone_polar(frame(j), x);
    const double b = beta(j);
    return std::pow(p.r, b) * std::sin(b * p.theta);
  }

  Vec2 grad_B(int j, Vec2 x) const {
    const ConeFrame& f = frame(j);
    const Vec2 d = x - f.vertex;
    if (norm2(d) == 0.0) throw DomainError("grad_B is singular at the cone vertex");
    const ConePolar p = cone_polar(f, x);
    const double b = beta(j);
    const Vec2 er = d / p.r;
    // theta increases clockwise about S_1 and counter-clockwise about S_2.
    const Vec2 et = j == 1 ? Vec2{er.y, -er.x} : Vec2{-er.y, er.x};
    const double amp = b * std::pow(p.r, b - 1.0);
    return (er * std::sin(b * p.theta) + et * std::cos(b * p.theta)) * amp;
  }

  double phi(Vec2 x) const { return gap_polar(gap_, x).phi; }
  double rho(Vec2 x) const { return gap_polar(gap_, x).rho; }

  PhiGradient grad_phi(Vec2 x) const {
    if (!gap_.in_pi(x)) throw DomainError("point lies inside a cone");
    const Vec2 xs{x.x, std::abs(x.y)};
    const Vec2 d = xs - gap_.q;
    const double r2 = norm2(d);
    if (r2 == 0.0) throw DomainError("grad_phi is singular at Q");
    PhiGradient out;
    out.grad = Vec2{d.y, -d.x} / r2;
    if (x.y < 0.0) out.grad.y = -out.grad.y;
    out.on_slot = x.y == 0.0 && x.x > frame(1).vertex.x && x.x < frame(2).vertex.x;
    return out;
  }

  /// grad B_1 - b grad B_2.
  Vec2 combined(double b, Vec2 x) const {
    if (!(b > 0.0)) throw DomainError("mixing coefficient b must be positive");
    return grad_B(1, x) - grad_B(2, x) * b;
  }

 private:
  static int idx(int j) {
    if (j != 1 && j != 2) throw DomainError("cone index must be 1 or 2");
    return j - 1;
  }

  ApertureAngles angles_;
  ConeFrame cone_[2];
  double beta_[2];
  GapFrame gap_;
};

/// One row of the batch evaluation table.
struct SingularRow {
  Vec2 x{};
  double B1 = 0.0, B2 = 0.0;
  double grad_B1 = 0.0, grad_B2 = 0.0;
  double combined = 0.0;
  double phi = 0.0, rho = 0.0;
};

inline SingularRow singular_row(const SingularBasis& s, double b, Vec2 x) {
  SingularRow r;
  r.x = x;
  r.B1 = s.eval_B(1, x);
  r.B2 = s.eval_B(2, x);
  r.grad_B1 = norm(s.grad_B(1, x));
  r.grad_B2 = norm(s.grad_B(2, x));
  r.combined = norm(s.combined(b, x));
  const GapPolar g = gap_polar(s.gap(), x);
  r.phi = g.phi;
  r.rho = g.rho;
  return r;
}

}  // namespace bowtie
