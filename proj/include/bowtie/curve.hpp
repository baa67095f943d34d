#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bowtie/common.hpp"

namespace bowtie {

/// A smooth boundary piece parametrized on t in [0, 1]: either a straight
/// segment or a circular arc. Arc angles are absolute polar angles about
/// `center`; `angle1 < angle0` traverses clockwise.
struct Piece {
  enum class Kind { segment, arc };

  Kind kind = Kind::segment;
  Vec2 p0{}, p1{};  // segment end points
  Vec2 center{};
  double radius = 0.0;
  double angle0 = 0.0, angle1 = 0.0;

  static Piece segment(Vec2 a, Vec2 b) {
    Piece p;
    p.kind = Kind::segment;
    p.p0 = a;
    p.p1 = b;
    return p;
  }

  static Piece arc(Vec2 c, double r, double a0, double a1) {
    Piece p;
    p.kind = Kind::arc;
    p.center = c;
    p.radius = r;
    p.angle0 = a0;
    p.angle1 = a1;
    return p;
  }

  Vec2 point(double t) const {
    if (kind == Kind::segment) return p0 + (p1 - p0) * t;
    const double a = angle0 + t * (angle1 - angle0);
    return center + Vec2{std::cos(a), std::sin(a)} * radius;
  }

  /// d point / dt.
  Vec2 tangent(double t) const {
    if (kind == Kind::segment) return p1 - p0;
    const double a = angle0 + t * (angle1 - angle0);
    return Vec2{-std::sin(a), std::cos(a)} * (radius * (angle1 - angle0));
  }

  double length() const {
    if (kind == Kind::segment) return norm(p1 - p0);
    return radius * std::abs(angle1 - angle0);
  }

  /// Image under (x, y) -> (-x, y). Parameter direction is preserved.
  Piece mirrored_x() const {
    Piece m = *this;
    if (kind == Kind::segment) {
      m.p0 = bowtie::mirror_x(p0);
      m.p1 = bowtie::mirror_x(p1);
    } else {
      m.center = bowtie::mirror_x(center);
      m.angle0 = pi - angle0;
      m.angle1 = pi - angle1;
    }
    return m;
  }

  /// Image under (x, y) -> (x, -y). Parameter direction is preserved.
  Piece mirrored_y() const {
    Piece m = *this;
    if (kind == Kind::segment) {
      m.p0 = bowtie::mirror_y(p0);
      m.p1 = bowtie::mirror_y(p1);
    } else {
      m.center = bowtie::mirror_y(center);
      m.angle0 = -angle0;
      m.angle1 = -angle1;
    }
    return m;
  }

  /// Same geometric set traversed in the opposite direction.
  Piece reversed() const {
    Piece m = *this;
    if (kind == Kind::segment) {
      std::swap(m.p0, m.p1);
    } else {
      std::swap(m.angle0, m.angle1);
    }
    return m;
  }
};

/// Closest distance from x to the piece, by dense sampling refined with a
/// few golden-section steps. Only used for diagnostics and validity checks.
inline double distance_to_piece(const Piece& piece, Vec2 x, int samples = 64) {
  double best = norm(piece.point(0.0) - x);
  int best_i = 0;
  for (int i = 1; i <= samples; ++i) {
    const double d = norm(piece.point(double(i) / samples) - x);
    if (d < best) {
      best = d;
      best_i = i;
    }
  }
  double lo = std::max(0.0, double(best_i - 1) / samples);
  double hi = std::min(1.0, double(best_i + 1) / samples);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (norm(piece.point(a) - x) < norm(piece.point(b) - x))
      hi = b;
    else
      lo = a;
  }
  return std::min(best, norm(piece.point(0.5 * (lo + hi)) - x));
}

/// Panel break points (arc length, increasing, including 0 and length) for a
/// piece of the given length. An end with `min_start` / `min_end` > 0 is
/// graded geometrically: the panel touching it has that length and each
/// neighbour grows by 1/`ratio` until `max_panel` is reached. The construction
/// is mirror-equivariant: swapping the end parameters reverses the output.
inline std::vector<double> graded_breaks(double length, double min_start, double min_end, double ratio,
                                         double max_panel) {
  auto side = [&](double m, double limit) {
    std::vector<double> pts;
    if (m <= 0.0) return pts;
    double s = m;
    while (s < limit) {
      pts.push_back(s);
      const double next = s / ratio;
      if (next - s > max_panel) break;
      s = next;
    }
    return pts;
  };
  const bool both = min_start > 0.0 && min_end > 0.0;
  const double lim0 = both ? 0.5 * length : length;
  const double lim1 = both ? 0.5 * length : length;
  std::vector<double> left = side(min_start, lim0);
  std::vector<double> right = side(min_end, lim1);
  // Drop the innermost graded points if the middle gap would be much
  // smaller than its neighbours.
  const double a = left.empty() ? 0.0 : left.back();
  const double b = right.empty() ? length : length - right.back();
  std::vector<double> out;
  out.push_back(0.0);
  out.insert(out.end(), left.begin(), left.end());
  const double gap = b - a;
  if (gap > 0.0) {
    const int n = std::max(1, int(std::ceil(gap / max_panel - 1e-9)));
    for (int i = 1; i < n; ++i) {
      // Fill symmetric about the middle so that mirrored pieces match.
      const double f = double(i) / n;
      out.push_back(f <= 0.5 ? a + gap * f : b - gap * (1.0 - f));
    }
  }
  for (auto it = right.rbegin(); it != right.rend(); ++it) out.push_back(length - *it);
  out.push_back(length);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double u, double v) { return std::abs(u - v) < 1e-300; }),
            out.end());
  return out;
}

}  // namespace bowtie
