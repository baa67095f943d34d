#include <gtest/gtest.h>

#include <filesystem>
#include <memory>
#include <random>

#include "bowtie/acceptance.hpp"
#include "bowtie/corrector.hpp"

using namespace bowtie;

namespace {

class Corrector : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sym_ = std::make_unique<CorrectorSolution>(solve_corrector(ApertureAngles(pi / 2, pi / 2)));
    asym_ = std::make_unique<CorrectorSolution>(solve_corrector(ApertureAngles(pi / 3, pi / 2)));
  }
  static void TearDownTestSuite() {
    sym_.reset();
    asym_.reset();
  }
  static std::unique_ptr<CorrectorSolution> sym_, asym_;
};

std::unique_ptr<CorrectorSolution> Corrector::sym_, Corrector::asym_;

Vec2 bisector_point(const CorrectorSolution& s, double t, int j) {
  const ConeFrame& f = s.basis().frame(j);
  // Exterior bisector at S_j: angle theta = (2 pi - alpha) / 2 from the upper edge.
  const double th = 0.5 * (2 * pi - f.opening);
  const double psi = j == 1 ? (pi - 0.5 * f.opening) - th : th + 0.5 * f.opening;
  return f.vertex + unit(psi) * t;
}

}  // namespace

TEST_F(Corrector, Diagnostics) {
  for (auto* s : {sym_.get(), asym_.get()}) {
    EXPECT_LT(s->diagnostics().collocation_residual, 1e-8);
    EXPECT_LT(s->diagnostics().check_residual, 1e-6);
    EXPECT_LT(s->diagnostics().tail_size, 1e-2);
    EXPECT_GE(s->r_t(), 8 * s->rho0());
  }
}

TEST_F(Corrector, PinnedConstants) {
  EXPECT_NEAR(sym_->b(), 1.0, 1e-10);
  EXPECT_NEAR(sym_->a(), 1.17324652289, 1e-8);
  EXPECT_NEAR(asym_->a(), 1.36091299473, 1e-8);
  EXPECT_NEAR(asym_->b(), 0.948258785003, 1e-8);
  for (auto* s : {sym_.get(), asym_.get()}) {
    EXPECT_GT(s->a(), 0.0);
    EXPECT_LT(s->a(), std::pow(2.0, s->basis().beta(1) + 2.0) / s->gamma());
  }
}

TEST_F(Corrector, CornerCoefficientsFromLocalRatio) {
  // Independent route: Phi / B_1 -> a at S_1 and (pi/gamma - Phi) / B_2 -> a b at S_2.
  for (auto* s : {sym_.get(), asym_.get()}) {
    const double t = 1e-6;
    const Vec2 x1 = bisector_point(*s, t, 1), x2 = bisector_point(*s, t, 2);
    const double a_loc = s->eval_Phi(x1) / s->basis().eval_B(1, x1);
    const double ab_loc = (s->opening() - s->eval_Phi(x2)) / s->basis().eval_B(2, x2);
    EXPECT_NEAR(a_loc / s->a(), 1.0, 1e-3);
    EXPECT_NEAR(ab_loc / (s->a() * s->b()), 1.0, 1e-3);
  }
}

TEST_F(Corrector, BoundsAndBoundaryData) {
  std::mt19937_64 rng(21);
  for (auto* s : {sym_.get(), asym_.get()}) {
    const GapFrame& g = s->basis().gap();
    std::uniform_real_distribution<double> lr(std::log(1e-2), std::log(1e3)), ang(0.0, s->opening());
    for (int n = 0; n < 2000;) {
      const Vec2 x = g.q + unit(g.ref_angle - ang(rng)) * std::exp(lr(rng));
      if (!(x.y > 0.0)) continue;
      ++n;
      const double v = s->eval_Phi(x);
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, s->opening());
      EXPECT_NEAR(s->eval_Phi(mirror_y(x)), v, 1e-10);
    }
    for (double r : {1e-3, 0.3, 2.0, 10.0, 0.4 * s->r_t(), 3.0 * s->r_t()}) {
      for (int j = 1; j <= 2; ++j) {
        const ConeFrame& f = s->basis().frame(j);
        const double want = j == 1 ? 0.0 : s->opening();
        EXPECT_NEAR(s->eval_Phi(f.vertex + f.reference_ray * r), want, 1e-6) << j << " " << r;
        EXPECT_NEAR(s->eval_Phi(f.vertex + f.lower_ray() * r), want, 1e-6) << j << " " << r;
        // Just off the edge the discrete solution itself must meet the data.
        const Vec2 off = f.vertex + f.reference_ray * r - f.upper_inward_normal() * (1e-7 * r);
        EXPECT_NEAR(s->eval_Phi(off), want, 1e-6) << j << " " << r;
      }
    }
  }
}

TEST_F(Corrector, MirrorSymmetryForEqualApertures) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> bx(-4.0, 4.0), by(0.01, 4.0);
  for (int n = 0; n < 300;) {
    const Vec2 x{bx(rng), by(rng)};
    if (!sym_->basis().gap().in_pi(x)) continue;
    ++n;
    EXPECT_NEAR(sym_->eval_Phi(x) + sym_->eval_Phi(mirror_x(x)), sym_->opening(), 1e-8);
  }
}

TEST_F(Corrector, MeanValueProperty) {
  for (auto* s : {sym_.get(), asym_.get()}) {
    for (const Vec2 c : {Vec2{0.0, 0.5}, Vec2{0.3, 1.2}, Vec2{-2.0, 3.0}, Vec2{5.0, 9.0}}) {
      const double r = 0.2;
      double mean = 0.0;
      for (int k = 0; k < 64; ++k) mean += s->eval_Phi(c + unit(2 * pi * k / 64) * r);
      EXPECT_NEAR(mean / 64, s->eval_Phi(c), 1e-9);
    }
  }
}

TEST_F(Corrector, TailDecayAndContinuity) {
  // Equal apertures: odd tail modes vanish and the decay is 2 gamma + 1.
  EXPECT_NEAR(accept::corrector_decay(*sym_), 2 * sym_->gamma() + 1, 0.1);
  EXPECT_NEAR(accept::corrector_decay(*asym_), asym_->gamma() + 1, 0.1);
  EXPECT_LT(std::abs(sym_->tail()[0]), 1e-10);
  EXPECT_GT(std::abs(asym_->tail()[0]), 1e-3);
  for (auto* s : {sym_.get(), asym_.get()}) {
    const GapFrame& g = s->basis().gap();
    const Vec2 dir = unit(g.ref_angle - 0.3 * s->opening());
    const double rs = s->tail_switch();
    EXPECT_NEAR(s->eval_Phi(g.q + dir * (rs * (1 - 1e-9))), s->eval_Phi(g.q + dir * (rs * (1 + 1e-9))), 1e-7);
    EXPECT_LT(std::abs(s->eval_w(g.q + dir * 1e4)), 1e-6);
  }
}

TEST_F(Corrector, PersistenceRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "bowtie_corrector_roundtrip.json").string();
  asym_->save(path);
  const CorrectorSolution back = CorrectorSolution::load(path);
  EXPECT_EQ(back.a(), asym_->a());
  EXPECT_EQ(back.b(), asym_->b());
  EXPECT_EQ(back.tail(), asym_->tail());
  for (const Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.2, 0.7}, Vec2{3.0, 30.0}, Vec2{-1.0, -0.4}})
    EXPECT_EQ(back.eval_Phi(x), asym_->eval_Phi(x));
  std::filesystem::remove(path);

  auto j = asym_->to_json();
  j["version"] = 99;
  EXPECT_THROW(CorrectorSolution::from_json(j), ConfigError);
  j = asym_->to_json();
  j["nodes"][5][0] = j["nodes"][5][0].get<double>() + 1e-6;
  EXPECT_THROW(CorrectorSolution::from_json(j), ConfigError);
}

TEST(CorrectorConfig, RejectsSmallTruncation) {
  CorrectorOptions o;
  o.r_t = 1.0;
  EXPECT_THROW(CorrectorSolution(ApertureAngles(pi / 2, pi / 2), o), ConfigError);
}
