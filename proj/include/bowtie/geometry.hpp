#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bowtie/common.hpp"
#include "bowtie/curve.hpp"

namespace bowtie {

/// Admissibility margins on the total aperture: C1 <= alpha1 + alpha2 <= 2 pi - C2.
inline constexpr double kApertureSumMin = 0.1;
inline constexpr double kApertureSumMargin = 0.1;

/// Corner singularity exponent pi / (2 pi - alpha), in (1/2, 1].
inline double beta(double alpha) {
  if (!(alpha > 0.0 && alpha <= pi)) throw DomainError("aperture angle must lie in (0, pi]");
  return pi / (2.0 * pi - alpha);
}

class ApertureAngles {
 public:
  ApertureAngles(double alpha1, double alpha2) : alpha1_(alpha1), alpha2_(alpha2) {
    if (!(alpha1 > 0.0 && alpha1 <= pi) || !(alpha2 > 0.0 && alpha2 <= pi))
      throw DomainError("aperture angles must lie in (0, pi]");
    const double s = alpha1 + alpha2;
    if (s < kApertureSumMin || s > 2.0 * pi - kApertureSumMargin)
      throw DomainError("aperture sum outside [C1, 2 pi - C2]");
  }

  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }
  double alpha(int j) const { return j == 1 ? alpha1_ : alpha2_; }
  bool symmetric() const { return alpha1_ == alpha2_; }

 private:
  double alpha1_;
  double alpha2_;
};

/// Gap exponent 2 pi / (2 pi - (alpha1 + alpha2)).
inline double gamma_exponent(const ApertureAngles& a) {
  const double s = a.alpha1() + a.alpha2();
  if (s >= 2.0 * pi - kApertureSumMargin) throw DomainError("aperture sum too close to 2 pi");
  return 2.0 * pi / (2.0 * pi - s);
}

/// Intersection of the two lines carrying the upper cone edges.
inline Vec2 q_point(const ApertureAngles& a) {
  const double c1 = 1.0 / std::tan(0.5 * a.alpha1());
  const double c2 = 1.0 / std::tan(0.5 * a.alpha2());
  return {c1 / (c1 + c2) - 0.5, -1.0 / (c1 + c2)};
}

/// Unit-scale cone Gamma_j with vertex S_j; Gamma_1 opens to the left, Gamma_2 to the right.
struct ConeFrame {
  int index = 1;
  Vec2 vertex{};
  Vec2 reference_ray{};  // unit vector along the upper edge
  double opening = 0.0;

  static ConeFrame make(int j, double alpha) {
    if (j != 1 && j != 2) throw DomainError("cone index must be 1 or 2");
    beta(alpha);  // range check
    ConeFrame f;
    f.index = j;
    f.opening = alpha;
    if (j == 1) {
      f.vertex = {-0.5, 0.0};
      f.reference_ray = unit(pi - 0.5 * alpha);
    } else {
      f.vertex = {0.5, 0.0};
      f.reference_ray = unit(0.5 * alpha);
    }
    return f;
  }

  Vec2 axis() const { return index == 1 ? Vec2{-1.0, 0.0} : Vec2{1.0, 0.0}; }
  /// Unit direction of the lower edge.
  Vec2 lower_ray() const { return mirror_y(reference_ray); }
  /// Normals of the upper / lower edge pointing into the cone.
  Vec2 upper_inward_normal() const {
    return index == 1 ? perp(reference_ray) : perp(reference_ray) * -1.0;
  }
  Vec2 lower_inward_normal() const { return mirror_y(upper_inward_normal()); }

  /// Signed angular distance from the axis; |chi| < opening/2 inside.
  double axis_angle(Vec2 x) const {
    const Vec2 d = x - vertex;
    const Vec2 ax = axis();
    return std::atan2(cross(ax, d), dot(ax, d));
  }

  bool contains(Vec2 x, double tol = 1e-12) const {
    const Vec2 d = x - vertex;
    if (norm2(d) == 0.0) return false;
    return std::abs(axis_angle(x)) < 0.5 * opening - tol;
  }
};

struct ConePolar {
  double r = 0.0;
  double theta = 0.0;
};

/// Polar coordinates about S_j; theta sweeps the exterior from the upper edge
/// (theta = 0) to the lower edge (theta = 2 pi - alpha_j).
inline ConePolar cone_polar(const ConeFrame& f, Vec2 x) {
  if (f.contains(x)) throw DomainError("point lies inside the cone");
  const Vec2 d = x - f.vertex;
  const double span = 2.0 * pi - f.opening;
  ConePolar p;
  p.r = norm(d);
  if (p.r == 0.0) return p;
  double th;
  if (f.index == 1) {
    th = (pi - 0.5 * f.opening) - std::atan2(d.y, d.x);
  } else {
    double psi = std::atan2(d.y, d.x);
    if (psi < 0.0) psi += 2.0 * pi;
    th = psi - 0.5 * f.opening;
  }
  p.theta = std::clamp(th, 0.0, span);
  return p;
}

/// Polar frame about Q; phi is measured from the Gamma_1 upper edge line and
/// extended evenly across the x-axis.
struct GapFrame {
  Vec2 q{};
  double gamma = 1.0;
  double ref_angle = 0.0;  // polar angle of the direction Q -> P_1
  ConeFrame cone1, cone2;

  static GapFrame make(const ApertureAngles& a) {
    GapFrame g;
    g.q = q_point(a);
    g.gamma = gamma_exponent(a);
    g.ref_angle = pi - 0.5 * a.alpha1();
    g.cone1 = ConeFrame::make(1, a.alpha1());
    g.cone2 = ConeFrame::make(2, a.alpha2());
    return g;
  }

  double opening() const { return pi / gamma; }
  bool in_pi(Vec2 x) const { return !cone1.contains(x) && !cone2.contains(x); }
};

struct GapPolar {
  double rho = 0.0;
  double phi = 0.0;
};

inline GapPolar gap_polar(const GapFrame& g, Vec2 x) {
  if (!g.in_pi(x)) throw DomainError("point lies inside a cone");
  const Vec2 xs{x.x, std::abs(x.y)};
  const Vec2 d = xs - g.q;
  GapPolar p;
  p.rho = norm(d);
  p.phi = std::clamp(g.ref_angle - std::atan2(d.y, d.x), 0.0, g.opening());
  return p;
}

/// Two inclusions whose tips are the cones Gamma_j scaled to gap eps near the
/// origin, each closed by the disk tangent to both edges at distance
/// `edge_len` from the vertex.
class BowTieGeometry {
 public:
  static constexpr double kMaxCapRatio = 20.0;

  BowTieGeometry(const ApertureAngles& angles, double eps, double edge_len = 1.0, double delta = 0.25)
      : angles_(angles), eps_(eps), edge_len_(edge_len), delta_(delta) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(edge_len > 0.0)) throw ConfigError("edge_len must be positive");
    if (!(delta > 0.0 && delta < edge_len)) throw ConfigError("delta must lie in (0, edge_len)");
    if (!(eps < delta)) throw ConfigError("eps must be smaller than delta");
    if (delta + 0.5 * eps > edge_len) throw ConfigError("delta + eps/2 must not exceed edge_len");
    for (int j = 1; j <= 2; ++j) {
      if (std::tan(0.5 * angles.alpha(j)) > kMaxCapRatio)
        throw ConfigError("aperture too close to pi for the tangent-cap closure");
    }
  }

  const ApertureAngles& angles() const { return angles_; }
  double eps() const { return eps_; }
  double edge_len() const { return edge_len_; }
  double delta() const { return delta_; }

  Vec2 vertex(int j) const { return j == 1 ? Vec2{-0.5 * eps_, 0.0} : Vec2{0.5 * eps_, 0.0}; }
  Vec2 axis(int j) const { return j == 1 ? Vec2{-1.0, 0.0} : Vec2{1.0, 0.0}; }
  double half_angle(int j) const { return 0.5 * angles_.alpha(j); }
  double cap_radius(int j) const { return edge_len_ * std::tan(half_angle(j)); }
  Vec2 cap_center(int j) const { return vertex(j) + axis(j) * (edge_len_ / std::cos(half_angle(j))); }
  /// Tangency point of the upper edge with the cap.
  Vec2 upper_tangent_point(int j) const {
    const double h = half_angle(j);
    return vertex(j) + Vec2{axis(j).x * std::cos(h), std::sin(h)} * edge_len_;
  }

  /// Membership in the translated cone eps*Gamma_j + shift with vertex V_j.
  bool in_translated_cone(int j, Vec2 x, double tol = 0.0) const {
    const Vec2 d = x - vertex(j);
    if (norm2(d) == 0.0) return false;
    const Vec2 ax = axis(j);
    return std::abs(std::atan2(cross(ax, d), dot(ax, d))) < half_angle(j) - tol;
  }

  /// Open-set membership in Omega_j.
  bool contains(int j, Vec2 x) const {
    if (!in_translated_cone(j, x)) return false;
    const double axial = dot(x - vertex(j), axis(j));
    if (axial <= edge_len_ * std::cos(half_angle(j))) return true;
    return norm(x - cap_center(j)) < cap_radius(j);
  }

  bool in_exterior(Vec2 x) const { return !contains(1, x) && !contains(2, x); }

  /// Pieces from V_j along the upper edge to the cap's apex on the axis.
  std::vector<Piece> upper_pieces(int j) const {
    // Omega_2 is built in the Omega_1 frame with its own angle, then mirrored,
    // so that equal apertures give exactly mirrored discretizations.
    const double h = half_angle(j);
    const Vec2 v{-0.5 * eps_, 0.0};
    const Vec2 t{v.x - std::cos(h) * edge_len_, std::sin(h) * edge_len_};
    const Vec2 c{v.x - edge_len_ / std::cos(h), 0.0};
    const Piece edge = Piece::segment(v, t);
    const Piece cap = Piece::arc(c, edge_len_ * std::tan(h), 0.5 * pi - h, pi);
    if (j == 1) return {edge, cap};
    return {edge.mirrored_x(), cap.mirrored_x()};
  }

  /// Closed boundary: V_j -> upper edge -> cap -> lower edge -> V_j.
  std::vector<Piece> boundary(int j) const {
    std::vector<Piece> up = upper_pieces(j);
    std::vector<Piece> all = up;
    for (auto it = up.rbegin(); it != up.rend(); ++it) all.push_back(it->mirrored_y().reversed());
    return all;
  }

  double perimeter(int j) const {
    double s = 0.0;
    for (const auto& p : boundary(j)) s += p.length();
    return s;
  }

  /// Arc-length parametrized boundary point starting at V_j.
  Vec2 boundary_point(int j, double s) const {
    const auto pieces = boundary(j);
    const double total = perimeter(j);
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
    for (const auto& p : pieces) {
      const double l = p.length();
      if (s <= l) return p.point(s / l);
      s -= l;
    }
    return pieces.back().point(1.0);
  }

  /// Distance from x to the closest boundary of either inclusion.
  double boundary_distance(Vec2 x) const {
    double d = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= 2; ++j)
      for (const auto& p : boundary(j)) d = std::min(d, distance_to_piece(p, x));
    return d;
  }

 private:
  ApertureAngles angles_;
  double eps_;
  double edge_len_;
  double delta_;
};

inline BowTieGeometry build_bowtie(const ApertureAngles& angles, double eps, double edge_len = 1.0,
                                   double delta = 0.25) {
  return BowTieGeometry(angles, eps, edge_len, delta);
}

struct PolylineSample {
  int inclusion = 1;
  double s = 0.0;
  Vec2 point{};
};

/// Uniform arc-length sampling of both boundaries for plotting.
inline std::vector<PolylineSample> sample_polyline(const BowTieGeometry& g, int per_inclusion = 400) {
  std::vector<PolylineSample> out;
  for (int j = 1; j <= 2; ++j) {
    const double total = g.perimeter(j);
    for (int i = 0; i <= per_inclusion; ++i) {
      const double s = total * i / per_inclusion;
      out.push_back({j, s, g.boundary_point(j, s)});
    }
  }
  return out;
}

}  // namespace bowtie
