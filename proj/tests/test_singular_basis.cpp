#include <gtest/gtest.h>

#include <random>

#include "bowtie/acceptance.hpp"
#include "bowtie/singular_basis.hpp"

using namespace bowtie;

namespace {

const ApertureAngles kRef(pi / 2, pi / 2);
const ApertureAngles kAsym(pi / 3, pi / 2);
constexpr double kGridSup200 = 1.1438286176144894;

Vec2 random_exterior(const SingularBasis& s, std::mt19937_64& rng, double margin = 1e-2) {
  std::uniform_real_distribution<double> box(-3.0, 3.0);
  for (;;) {
    const Vec2 x{box(rng), box(rng)};
    if (!s.gap().in_pi(x) || accept::edge_distance(s, x) < margin || std::abs(x.y) < margin) continue;
    if (norm(x - s.frame(1).vertex) < margin || norm(x - s.frame(2).vertex) < margin) continue;
    if (norm(x - s.q()) < margin) continue;
    return x;
  }
}

}  // namespace

TEST(SingularBasis, PinnedValues) {
  const SingularBasis s(kRef);
  // r = 1/2, theta = 3 pi / 4, beta = 2/3: (1/2)^{2/3} sin(pi / 2).
  EXPECT_NEAR(s.eval_B(2, {0.0, 0.0}), 0.6299605249474366, 1e-15);
  EXPECT_NEAR(s.eval_B(1, {0.0, 0.0}), 0.6299605249474366, 1e-15);
  EXPECT_NEAR(norm(s.grad_B(1, s.frame(1).vertex + Vec2{0.6, 0.8})), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(norm(s.grad_phi({0.0, 1.5}).grad), 0.5, 1e-15);  // rho = 2
}

TEST(SingularBasis, ZeroExactlyOnOwnCone) {
  for (const auto& a : {kRef, kAsym}) {
    const SingularBasis s(a);
    for (int j = 1; j <= 2; ++j) {
      const ConeFrame& f = s.frame(j);
      for (double r : {1e-3, 0.5, 2.0, 40.0}) {
        EXPECT_NEAR(s.eval_B(j, f.vertex + f.reference_ray * r), 0.0, 1e-14 * std::pow(r, s.beta(j)));
        EXPECT_NEAR(s.eval_B(j, f.vertex + f.lower_ray() * r), 0.0, 1e-14 * std::pow(r, s.beta(j)));
      }
    }
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; ++i) {
      const Vec2 x = random_exterior(s, rng);
      EXPECT_GT(s.eval_B(1, x), 0.0);
      EXPECT_GT(s.eval_B(2, x), 0.0);
    }
  }
}

TEST(SingularBasis, Homogeneity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tt(1e-3, 10.0);
  for (const auto& a : {kRef, kAsym}) {
    const SingularBasis s(a);
    for (int i = 0; i < 300; ++i) {
      const Vec2 x = random_exterior(s, rng);
      const double t = tt(rng);
      for (int j = 1; j <= 2; ++j) {
        const Vec2 y = x - s.frame(j).vertex;
        const Vec2 xt = s.frame(j).vertex + y * t;
        if (!s.gap().in_pi(xt)) continue;
        const double want = std::pow(t, s.beta(j)) * s.eval_B(j, x);
        EXPECT_NEAR(s.eval_B(j, xt), want, 1e-12 * std::abs(want));
      }
    }
  }
}

TEST(SingularBasis, DiscreteLaplacianVanishes) {
  // Fourth-order stencil: truncation and rounding both stay below 1e-7 at h = 1e-3.
  std::mt19937_64 rng(9);
  const double h = 1e-3;
  for (const auto& a : {kRef, kAsym}) {
    const SingularBasis s(a);
    for (int i = 0; i < 200; ++i) {
      const Vec2 x = random_exterior(s, rng, 0.05);
      for (int j = 1; j <= 2; ++j) {
        auto B = [&](Vec2 y) { return s.eval_B(j, y); };
        auto d2 = [&](Vec2 e) {
          return (-B(x + e * 2.0) + 16 * B(x + e) - 30 * B(x) + 16 * B(x - e) - B(x - e * 2.0)) / (12 * h * h);
        };
        const double lap = d2({h, 0}) + d2({0, h});
        const double r = norm(x - s.frame(j).vertex);
        // Normalize by the size of the second derivatives, beta r^{beta - 2}.
        EXPECT_LT(std::abs(lap) / (s.beta(j) * std::pow(r, s.beta(j) - 2.0)), 1e-6);
      }
    }
  }
}

TEST(SingularBasis, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(13);
  const double h = 1e-6;
  for (const auto& a : {kRef, kAsym}) {
    const SingularBasis s(a);
    for (int i = 0; i < 300; ++i) {
      const Vec2 x = random_exterior(s, rng);
      auto fd = [&](auto fn) {
        return Vec2{(fn(x + Vec2{h, 0}) - fn(x - Vec2{h, 0})) / (2 * h), (fn(x + Vec2{0, h}) - fn(x - Vec2{0, h})) / (2 * h)};
      };
      for (int j = 1; j <= 2; ++j) {
        const Vec2 g = s.grad_B(j, x);
        EXPECT_LT(norm(g - fd([&](Vec2 y) { return s.eval_B(j, y); })) / norm(g), 1e-6);
      }
      const Vec2 g = s.grad_phi(x).grad;
      EXPECT_LT(norm(g - fd([&](Vec2 y) { return s.phi(y); })) / norm(g), 1e-6);
      EXPECT_NEAR(norm(g), 1.0 / s.rho(x), 1e-12 / s.rho(x));
      if (x.y > 0) EXPECT_NEAR(dot(g, x - s.q()), 0.0, 1e-13);
    }
  }
}

TEST(SingularBasis, SlotFlagAndErrors) {
  const SingularBasis s(kRef);
  EXPECT_TRUE(s.grad_phi({0.1, 0.0}).on_slot);
  EXPECT_FALSE(s.grad_phi({0.1, 1e-9}).on_slot);
  const Vec2 up = s.grad_phi({0.1, 1e-300}).grad, down = s.grad_phi({0.1, -1e-300}).grad;
  EXPECT_NEAR(up.y, -down.y, 1e-15);
  EXPECT_THROW(s.grad_B(1, s.frame(1).vertex), DomainError);
  EXPECT_THROW(s.eval_B(1, {-2.0, 0.0}), DomainError);
  EXPECT_THROW(s.grad_phi({3.0, 0.0}), DomainError);
  EXPECT_THROW(s.combined(0.0, {0.0, 1.0}), DomainError);
  EXPECT_THROW(s.combined(-1.0, {0.0, 1.0}), DomainError);
  EXPECT_THROW(s.eval_B(3, {0.0, 1.0}), DomainError);
}

TEST(SingularBasis, EdgeSignsAndCombinedLowerBound) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lr(std::log(1e-4), std::log(1e2));
  for (const auto& a : {kRef, kAsym}) {
    const SingularBasis s(a);
    for (int j = 1; j <= 2; ++j) {
      const ConeFrame& f = s.frame(j);
      for (int e = 0; e < 2; ++e) {
        const Vec2 dir = e ? f.lower_ray() : f.reference_ray;
        const Vec2 nu = e ? f.lower_inward_normal() : f.upper_inward_normal();
        for (int m = 0; m < 200; ++m) {
          const Vec2 x = f.vertex + dir * std::exp(lr(rng));
          const Vec2 gj = s.grad_B(j, x);
          EXPECT_LT(dot(gj, nu), 0.0);
          EXPECT_NEAR(dot(gj, nu), -norm(gj), 1e-12 * norm(gj));
          EXPECT_GE(dot(s.grad_B(3 - j, x), nu), 0.0);
          if (j == 1) EXPECT_GE(norm(s.combined(0.7, x)), std::abs(dot(gj, nu)) * (1 - 1e-14));
        }
      }
    }
  }
}

TEST(SingularBasis, CombinedBlowsUpAtVertex) {
  const SingularBasis s(kRef);
  const Vec2 dir = normalized(Vec2{1.0, 1.0});
  double prev = 0.0;
  for (double t : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double v = norm(s.combined(1.0, s.frame(1).vertex + dir * t));
    EXPECT_GT(v, prev);
    EXPECT_NEAR(v / (s.beta(1) * std::pow(t, s.beta(1) - 1.0)), 1.0, 2.0 * std::pow(t, 1.0 - s.beta(1)));
    prev = v;
  }
}

TEST(SingularBasis, GridRatioRegression) {
  // Exhaustive 200 x 200 grid, pinned; refinement changes it by < 5%.
  const SingularBasis s(kRef);
  const double s200 = accept::cancellation_sup(s, 1.0, 200);
  const double s400 = accept::cancellation_sup(s, 1.0, 400);
  EXPECT_TRUE(std::isfinite(s200));
  EXPECT_LT(std::abs(s400 / s200 - 1.0), 0.05);
  EXPECT_NEAR(s200, kGridSup200, 1e-9 * kGridSup200);
}

TEST(SingularBasis, BatchRow) {
  const SingularBasis s(kAsym);
  const SingularRow r = singular_row(s, 0.9, {0.0, 0.7});
  EXPECT_EQ(r.B1, s.eval_B(1, {0.0, 0.7}));
  EXPECT_EQ(r.combined, norm(s.combined(0.9, {0.0, 0.7})));
  EXPECT_EQ(r.rho, s.rho({0.0, 0.7}));
}
