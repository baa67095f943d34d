#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "bowtie/geometry.hpp"

using namespace bowtie;

namespace {

// Winding number of a closed polyline around x.
int winding(const std::vector<Vec2>& poly, Vec2 x) {
  int w = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double c = cross(b - a, x - a);
    if (a.y <= x.y && b.y > x.y && c > 0) ++w;
    if (a.y > x.y && b.y <= x.y && c < 0) --w;
  }
  return w;
}

std::vector<Vec2> outline(const BowTieGeometry& g, int j, int per_piece = 4000) {
  std::vector<Vec2> out;
  for (const auto& p : g.boundary(j))
    for (int i = 0; i < per_piece; ++i) out.push_back(p.point(double(i) / per_piece));
  return out;
}

}  // namespace

TEST(Geometry, BetaAndGamma) {
  EXPECT_DOUBLE_EQ(beta(pi / 2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(beta(pi / 3), 0.6);
  EXPECT_THROW(beta(0.0), DomainError);
  EXPECT_DOUBLE_EQ(beta(pi), 1.0);
  EXPECT_THROW(beta(1.5 * pi), DomainError);
  // gamma = pi / (angle at Q between the two upper edge lines)
  const ApertureAngles a(pi / 3, pi / 2);
  const Vec2 q = q_point(a);
  const Vec2 p1 = Vec2{-0.5, 0.0} + unit(pi - pi / 6);
  const Vec2 p2 = Vec2{0.5, 0.0} + unit(pi / 4);
  const double open = std::acos(dot(normalized(p1 - q), normalized(p2 - q)));
  EXPECT_NEAR(gamma_exponent(a), pi / open, 1e-12);
  EXPECT_NEAR(gamma_exponent(ApertureAngles(pi / 2, pi / 2)), 2.0, 1e-12);
}

TEST(Geometry, QPointIsLineIntersection) {
  const ApertureAngles a(pi / 3, pi / 2);
  // Solve S_1 + s d_1 = S_2 + t d_2 directly.
  const Vec2 d1 = unit(pi - pi / 6), d2 = unit(pi / 4);
  Eigen::Matrix2d m;
  m << d1.x, -d2.x, d1.y, -d2.y;
  const Eigen::Vector2d st = m.lu().solve(Eigen::Vector2d(1.0, 0.0));
  const Vec2 oracle = Vec2{-0.5, 0.0} + d1 * st(0);
  const Vec2 q = q_point(a);
  EXPECT_NEAR(q.x, oracle.x, 1e-14);
  EXPECT_NEAR(q.y, oracle.y, 1e-14);
  EXPECT_NEAR(q.x, 0.13397, 1e-5);
  EXPECT_NEAR(q.y, -0.36603, 1e-5);
  const Vec2 qs = q_point(ApertureAngles(pi / 2, pi / 2));
  EXPECT_NEAR(qs.x, 0.0, 1e-15);
  EXPECT_NEAR(qs.y, -0.5, 1e-15);
}

TEST(Geometry, ConePolarFrame) {
  const ConeFrame f2 = ConeFrame::make(2, pi / 2);
  const ConePolar p = cone_polar(f2, {0.0, 0.0});
  EXPECT_NEAR(p.r, 0.5, 1e-15);
  EXPECT_NEAR(p.theta, 3 * pi / 4, 1e-15);
  // The printed parametrization x - 1/2 = r cos(theta + alpha/2), y = r sin(theta + alpha/2).
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> th(0.0, 2 * pi - pi / 2), rr(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double t = th(rng), r = rr(rng);
    const Vec2 x{0.5 + r * std::cos(t + pi / 4), r * std::sin(t + pi / 4)};
    const ConePolar c = cone_polar(f2, x);
    EXPECT_NEAR(c.r, r, 1e-12);
    EXPECT_NEAR(c.theta, t, 1e-12);
  }
  const ConeFrame f1 = ConeFrame::make(1, pi / 3);
  EXPECT_NEAR(cone_polar(f1, f1.vertex + f1.reference_ray).theta, 0.0, 1e-15);
  EXPECT_NEAR(cone_polar(f1, f1.vertex + f1.lower_ray()).theta, 2 * pi - pi / 3, 1e-12);
  EXPECT_THROW(cone_polar(f1, {-2.0, 0.0}), DomainError);
}

TEST(Geometry, GapPolar) {
  const GapFrame g = GapFrame::make(ApertureAngles(pi / 2, pi / 2));
  const GapPolar p = gap_polar(g, {0.0, 0.5});
  EXPECT_NEAR(p.rho, 1.0, 1e-15);
  EXPECT_NEAR(p.phi, pi / 4, 1e-15);
  EXPECT_NEAR(g.opening(), pi / 2, 1e-15);
  // Even extension across the axis.
  const GapPolar m = gap_polar(g, {0.1, -0.3});
  const GapPolar u = gap_polar(g, {0.1, 0.3});
  EXPECT_EQ(m.rho, u.rho);
  EXPECT_EQ(m.phi, u.phi);
  // Upper edges map to phi = 0 and phi = pi / gamma.
  EXPECT_NEAR(gap_polar(g, g.cone1.vertex + g.cone1.reference_ray * 2.0).phi, 0.0, 1e-12);
  EXPECT_NEAR(gap_polar(g, g.cone2.vertex + g.cone2.reference_ray * 2.0).phi, pi / 2, 1e-12);
}

TEST(Geometry, VertexPlacement) {
  const BowTieGeometry g(ApertureAngles(pi / 2, pi / 2), 0.1);
  EXPECT_DOUBLE_EQ(g.vertex(1).x, -0.05);
  EXPECT_DOUBLE_EQ(g.vertex(2).x, 0.05);
  EXPECT_EQ(g.vertex(1).y, 0.0);
}

TEST(Geometry, ConstructorValidation) {
  const ApertureAngles a(pi / 2, pi / 2);
  EXPECT_THROW(BowTieGeometry(a, 0.0), ConfigError);
  EXPECT_THROW(BowTieGeometry(a, -1e-3), ConfigError);
  EXPECT_THROW(BowTieGeometry(a, 0.3), ConfigError);  // eps >= delta
  EXPECT_THROW(BowTieGeometry(a, 1e-2, 1.0, 1.5), ConfigError);
  EXPECT_THROW(BowTieGeometry(ApertureAngles(0.99 * pi, pi / 2), 1e-2), ConfigError);
  EXPECT_NO_THROW(BowTieGeometry(ApertureAngles(0.9 * pi, pi / 2), 1e-2));
}

TEST(Geometry, BoundaryIsClosedAndTangent) {
  for (double a1 : {pi / 3, pi / 2, 2 * pi / 3}) {
    const BowTieGeometry g(ApertureAngles(a1, pi / 2), 1e-2);
    for (int j = 1; j <= 2; ++j) {
      const auto b = g.boundary(j);
      for (std::size_t i = 0; i < b.size(); ++i) {
        const Piece& p = b[i];
        const Piece& n = b[(i + 1) % b.size()];
        EXPECT_LT(norm(p.point(1.0) - n.point(0.0)), 1e-13);
      }
      EXPECT_LT(norm(b.front().point(0.0) - g.vertex(j)), 1e-15);
      // Edge and cap meet tangentially.
      EXPECT_LT(std::abs(cross(normalized(b[0].tangent(1.0)), normalized(b[1].tangent(0.0)))), 1e-12);
      const double h = 0.5 * g.angles().alpha(j);
      EXPECT_NEAR(g.perimeter(j), 2.0 + std::tan(h) * (pi + 2 * h), 1e-12);
    }
  }
}

TEST(Geometry, EqualAperturesAreMirrorImages) {
  const BowTieGeometry g(ApertureAngles(pi / 2, pi / 2), 1e-2);
  const auto b1 = g.boundary(1), b2 = g.boundary(2);
  ASSERT_EQ(b1.size(), b2.size());
  for (std::size_t i = 0; i < b1.size(); ++i)
    for (double t : {0.0, 0.3, 1.0}) {
      const Vec2 p = b1[i].point(t), q = b2[i].point(t);
      EXPECT_NEAR(p.x, -q.x, 1e-15);
      EXPECT_NEAR(p.y, q.y, 1e-15);
    }
}

TEST(Geometry, MembershipMatchesWindingNumber) {
  std::mt19937_64 rng(11);
  for (double a1 : {pi / 3, pi / 2}) {
    const BowTieGeometry g(ApertureAngles(a1, pi / 2), 0.05);
    const auto o1 = outline(g, 1), o2 = outline(g, 2);
    std::uniform_real_distribution<double> bx(-3.5, 3.5), by(-2.5, 2.5);
    int checked = 0;
    for (int i = 0; i < 4000; ++i) {
      const Vec2 x{bx(rng), by(rng)};
      if (g.boundary_distance(x) < 1e-3) continue;
      ++checked;
      EXPECT_EQ(g.contains(1, x), winding(o1, x) != 0) << x.x << " " << x.y;
      EXPECT_EQ(g.contains(2, x), winding(o2, x) != 0) << x.x << " " << x.y;
      EXPECT_EQ(g.in_exterior(x), winding(o1, x) == 0 && winding(o2, x) == 0);
    }
    EXPECT_GT(checked, 3500);
  }
}

TEST(Geometry, BoundaryDistanceAndSampling) {
  const BowTieGeometry g(ApertureAngles(pi / 2, pi / 2), 1e-2);
  EXPECT_NEAR(g.boundary_distance({0.0, 0.0}), 0.5e-2, 1e-15);
  EXPECT_NEAR(g.boundary_distance(g.boundary_point(2, 0.7)), 0.0, 1e-14);
  const auto s = sample_polyline(g, 100);
  EXPECT_EQ(s.size(), 202u);
  for (const auto& p : s) EXPECT_LT(g.boundary_distance(p.point), 1e-13);
}
