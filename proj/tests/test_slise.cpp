#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "filterforge/builtin.hpp"
#include "filterforge/gauss_legendre.hpp"
#include "filterforge/optim/box.hpp"
#include "filterforge/pipeline.hpp"
#include "filterforge/slise.hpp"
#include "filterforge/weight.hpp"
#include "support.hpp"

namespace ff = filterforge;
using ff::complex;

namespace {

const ff::BuiltinWeight kWeights[] = {ff::BuiltinWeight::GammaSlise, ff::BuiltinWeight::BoxSlise,
                                      ff::BuiltinWeight::EnhancedGammaSlise};

double real_loss(const ff::SliseObjective& obj, const Eigen::VectorXd& v) {
  const auto p = ff::from_real(v);
  return ff::loss(obj, p.beta, p.poles);
}

}  // namespace

TEST(StepWeight, BuiltinValues) {
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::GammaSlise)(1.2), 10.0);
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::GammaSlise)(-1.2), 10.0);
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::BoxSlise)(5.0), 0.0);
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::EnhancedGammaSlise)(1.2), 887.0);
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::GammaSlise)(0.95), 0.01);
  EXPECT_EQ(ff::builtin_weight(ff::BuiltinWeight::GammaSlise)(5.0), 0.0);
  EXPECT_EQ(ff::builtin_weight("box-slise"), ff::builtin_weight(ff::BuiltinWeight::BoxSlise));
  EXPECT_THROW(ff::builtin_weight("delta-slise"), ff::LookupError);
}

TEST(StepWeight, RejectsInvalidDefinitions) {
  EXPECT_THROW(ff::StepWeightFunction({1.0, 0.5}, {1.0, 1.0}), ff::DomainError);
  EXPECT_THROW(ff::StepWeightFunction({1.0}, {-1.0}), ff::DomainError);
  EXPECT_THROW(ff::StepWeightFunction({0.0, 1.0}, {1.0, 1.0}), ff::DomainError);
  EXPECT_THROW(ff::StepWeightFunction({1.0}, {}), ff::DomainError);
}

TEST(StepWeight, JsonRoundTrip) {
  for (auto w : kWeights) {
    const auto g = ff::builtin_weight(w);
    EXPECT_EQ(ff::parse_weight(ff::dump_weight(g)), g);
  }
  EXPECT_THROW(ff::parse_weight(R"({"breakpoints": [1.0]})"), ff::ParseError);
  EXPECT_THROW(ff::parse_weight(R"({"breakpoints": [1.0], "values": [-2]})"), ff::ParseError);
}

TEST(SliseLoss, PublishedResiduals) {
  const ff::SliseObjective box(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  EXPECT_NEAR(ff::loss(box, ff::builtin_filter(ff::BuiltinFilter::Zolotarev16)), 8.09e-4, 0.02 * 8.09e-4);
  EXPECT_NEAR(ff::loss(box, ff::builtin_filter(ff::BuiltinFilter::BoxLbfgsb16)), 4.72e-4, 0.02 * 4.72e-4);
}

TEST(SliseLoss, FrozenConvention) {
  // regression values of the half-line normalization
  const ff::SliseObjective box(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  const ff::SliseObjective gamma(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 4);
  EXPECT_NEAR(ff::loss(box, ff::builtin_filter(ff::BuiltinFilter::Zolotarev16)), 8.08231e-4, 1e-9);
  EXPECT_NEAR(ff::loss(box, ff::builtin_filter(ff::BuiltinFilter::BoxLbfgsb16)), 4.72286e-4, 1e-9);
  EXPECT_NEAR(ff::loss(gamma, ff::builtin_filter(ff::BuiltinFilter::GammaSlise16)), 1.3502105e-5, 1e-12);
}

TEST(SliseLoss, ZeroCoefficientsGiveWeightedIndicatorMass) {
  const ff::SliseObjective gamma(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 4);
  const std::vector<complex> beta(4, 0.0);
  const auto gl = ff::gauss_legendre_filter(4);
  const auto poles = gl.poles();
  // half of the full-line integral 2 (0.95 * 1 + 0.05 * 0.01)
  const double expected = 0.95 + 0.05 * 0.01;
  EXPECT_NEAR(ff::loss(gamma, beta, poles), expected, 1e-14);
  const ff::RationalFilter zero(std::vector<complex>(poles.begin(), poles.end()), beta);
  EXPECT_NEAR(ff::loss_quadrature(gamma, zero).value, expected, 1e-12);
}

TEST(SliseLoss, ClosedFormMatchesQuadrature) {
  std::mt19937_64 rng(2024);
  for (auto w : kWeights) {
    for (int trial = 0; trial < 40; ++trial) {
      const ff::SliseObjective obj(ff::builtin_weight(w), 1 + trial % 5);
      const auto f = ff::testing::random_filter(rng, obj.m, 0.05);
      const double closed = ff::loss(obj, f);
      const auto quad = ff::loss_quadrature(obj, f);
      EXPECT_TRUE(quad.converged);
      EXPECT_LE(std::abs(closed - quad.value), 1e-8 * (1.0 + closed)) << "trial " << trial;
    }
  }
}

TEST(SliseLoss, ClosedFormMatchesQuadratureNearOptimum) {
  std::mt19937_64 rng(99);
  const ff::SliseObjective box(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = ff::testing::perturbed(ff::builtin_filter(ff::BuiltinFilter::BoxLbfgsb16), rng, 1e-3);
    const double closed = ff::loss(box, f);
    EXPECT_LE(std::abs(closed - ff::loss_quadrature(box, f).value), 1e-10 * (1.0 + closed));
  }
}

TEST(SliseLoss, WeightSupportBelowFeaturesStaysFinite) {
  const ff::SliseObjective tiny(ff::StepWeightFunction({1e-3}, {1.0}), 4);
  const auto f = ff::builtin_filter(ff::BuiltinFilter::Zolotarev16);
  const double l = ff::loss(tiny, f);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_GE(l, 0.0);
  EXPECT_NEAR(l, ff::loss_quadrature(tiny, f).value, 1e-12);
}

TEST(SliseLoss, PermutationInvariant) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 4);
  const auto f = ff::builtin_filter(ff::BuiltinFilter::GammaSlise16);
  std::vector<complex> b(f.coeffs().begin(), f.coeffs().end()), w(f.poles().begin(), f.poles().end());
  const double ref = ff::loss(obj, b, w);
  std::reverse(b.begin(), b.end());
  std::reverse(w.begin(), w.end());
  EXPECT_NEAR(ff::loss(obj, b, w), ref, 1e-15);
  std::swap(b[0], b[2]);
  std::swap(w[0], w[2]);
  EXPECT_NEAR(ff::loss(obj, b, w), ref, 1e-15);
}

TEST(SliseLoss, InvariantUnderOrbitRepresentative) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  const auto f = ff::builtin_filter(ff::BuiltinFilter::Zolotarev16);
  std::vector<complex> b(f.coeffs().begin(), f.coeffs().end()), w(f.poles().begin(), f.poles().end());
  const double ref = ff::loss(obj, b, w);
  auto b1 = b, w1 = w;
  b1[1] = std::conj(b1[1]);
  w1[1] = std::conj(w1[1]);
  EXPECT_NEAR(ff::loss(obj, b1, w1), ref, 1e-15);
  auto b2 = b, w2 = w;
  b2[3] = -std::conj(b2[3]);
  w2[3] = -std::conj(w2[3]);
  EXPECT_NEAR(ff::loss(obj, b2, w2), ref, 1e-15);
  auto b3 = b, w3 = w;
  b3[0] = -b3[0];
  w3[0] = -w3[0];
  EXPECT_NEAR(ff::loss(obj, b3, w3), ref, 1e-15);
}

TEST(SliseLoss, NonNegative) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const ff::SliseObjective obj(ff::builtin_weight(kWeights[trial % 3]), 4);
    EXPECT_GE(ff::loss(obj, ff::testing::random_filter(rng, 4, 1e-4)), 0.0);
  }
}

TEST(SliseLoss, RejectsNearlyRealPolesAndWrongSizes) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 1);
  const std::vector<complex> b{0.1}, w{complex(-0.5, 1e-12)};
  EXPECT_THROW(ff::loss(obj, b, w), ff::DomainError);
  EXPECT_THROW(ff::loss(obj, ff::gauss_legendre_filter(2)), ff::DomainError);
  EXPECT_THROW(ff::SliseObjective(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 0), ff::DomainError);
}

TEST(SliseLoss, CoincidentPolePairUsesConfluentLimit) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 2);
  // w and -conj(w) coincide when Re w = 0
  const ff::RationalFilter f({complex(0.0, 0.3), complex(-0.7, 0.2)}, {complex(0.05, 0.02), complex(0.02, -0.03)});
  EXPECT_NEAR(ff::loss(obj, f), ff::loss_quadrature(obj, f).value, 1e-10);
  const ff::RationalFilter g({complex(-0.4, 0.5), complex(-0.4, 0.5 + 1e-14)}, {complex(0.05, 0.0), complex(0.02, 0.0)});
  EXPECT_NEAR(ff::loss(obj, g), ff::loss_quadrature(obj, g).value, 1e-10);
}

TEST(SliseGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(31);
  for (auto w : kWeights) {
    const ff::SliseObjective obj(ff::builtin_weight(w), 4);
    for (int trial = 0; trial < 25; ++trial) {
      const auto v = ff::to_real(ff::testing::random_filter(rng, 4, 0.05));
      const auto [f, g] = ff::loss_and_real_gradient(obj, v);
      const auto fd = ff::testing::central_difference([&](const Eigen::VectorXd& x) { return real_loss(obj, x); }, v, 1e-7);
      EXPECT_LE(ff::testing::relative_error(g, fd), 1e-6) << "trial " << trial;
    }
  }
}

TEST(SliseGradient, PublishedFiltersAreNearOptimal) {
  // the published parameters are close to, not exactly at, a stationary point
  for (auto [w, f] : {std::pair{ff::BuiltinWeight::GammaSlise, ff::BuiltinFilter::GammaSlise16},
                      std::pair{ff::BuiltinWeight::EnhancedGammaSlise, ff::BuiltinFilter::EnhancedGammaSlise16}}) {
    const ff::SliseObjective obj(ff::builtin_weight(w), 4);
    const auto x = ff::to_real(ff::builtin_filter(f));
    const double published = ff::loss(obj, ff::builtin_filter(f));
    const auto rep = ff::bfgs_minimize(ff::real_objective(obj), x);
    EXPECT_LE(rep.final_loss, published);
    EXPECT_GE(rep.final_loss, 0.99 * published);
    EXPECT_LE(ff::loss_and_real_gradient(obj, x).second.lpNorm<Eigen::Infinity>(), 1e-3);
  }

  const ff::SliseObjective box(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  const auto x = ff::to_real(ff::builtin_filter(ff::BuiltinFilter::BoxLbfgsb16));
  const auto bounds = ff::slise_box_bounds(4, 0.0022);
  const auto g = ff::loss_and_real_gradient(box, x).second;
  const auto pg = ff::projected_gradient(x, g, bounds);
  EXPECT_LE(pg.lpNorm<Eigen::Infinity>(), 2e-6);
  // the pole sitting on the bound is held there by a positive gradient
  EXPECT_GT(g[12], 0.0);
  EXPECT_EQ(pg[12], 0.0);
}

TEST(SliseGradient, OrbitReflectionMirrorsGradient) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 1);
  const complex b(0.04, -0.03), w(-0.6, 0.4);
  const auto ga = ff::gradient(obj, std::vector<complex>{b}, std::vector<complex>{w});
  const auto gb = ff::gradient(obj, std::vector<complex>{-std::conj(b)}, std::vector<complex>{-std::conj(w)});
  EXPECT_NEAR(std::abs(gb.beta[0] + std::conj(ga.beta[0])), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(gb.poles[0] + std::conj(ga.poles[0])), 0.0, 1e-14);
  const auto gc = ff::gradient(obj, std::vector<complex>{std::conj(b)}, std::vector<complex>{std::conj(w)});
  EXPECT_NEAR(std::abs(gc.beta[0] - std::conj(ga.beta[0])), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(gc.poles[0] - std::conj(ga.poles[0])), 0.0, 1e-14);
}

TEST(RealEmbedding, RoundTrip) {
  const auto z = ff::builtin_filter(ff::BuiltinFilter::Zolotarev16);
  const auto v = ff::to_real(z);
  ASSERT_EQ(v.size(), 16);
  EXPECT_EQ(v[0], z.coeffs()[0].real());
  EXPECT_EQ(v[4], z.coeffs()[0].imag());
  EXPECT_EQ(v[8], z.poles()[0].real());
  EXPECT_EQ(v[12], z.poles()[0].imag());
  EXPECT_EQ(ff::filter_from_real(v), z);
  EXPECT_THROW(ff::from_real(Eigen::VectorXd::Zero(6)), ff::DomainError);
  EXPECT_THROW(ff::from_real(Eigen::VectorXd()), ff::DomainError);
}

TEST(RealEmbedding, ToyObjectiveGradient) {
  // g(z) = conj(z) z has the Wirtinger derivative dg/dz = conj(z), so the
  // real gradient 2 conj(dg/dz) = 2z, i.e. (2x, 2y).
  const complex z(0.7, -1.3);
  const std::vector<complex> gb{std::conj(z)}, gw{std::conj(z)};
  const auto rg = ff::real_gradient(gb, gw);
  EXPECT_DOUBLE_EQ(rg[0], 2 * z.real());
  EXPECT_DOUBLE_EQ(rg[1], 2 * z.imag());
}

TEST(RealEmbedding, ObjectiveRejectsNearlyRealPoles) {
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 1);
  auto f = ff::real_objective(obj);
  Eigen::VectorXd v(4), g(4);
  v << 0.1, 0.0, -0.5, 1e-12;
  EXPECT_TRUE(std::isinf(f(v, g)));
  v[3] = 0.3;
  EXPECT_TRUE(std::isfinite(f(v, g)));
}

TEST(FilterPointGradient, MatchesFiniteDifferences) {
  const auto f = ff::builtin_filter(ff::BuiltinFilter::GammaSlise16);
  const auto v = ff::to_real(f);
  for (double x : {0.2, 0.99, 1.5}) {
    const auto d = ff::filter_point_gradient(f.coeffs(), f.poles(), x);
    const auto fd = ff::testing::central_difference(
        [&](const Eigen::VectorXd& u) { return ff::filter_from_real(u)(x); }, v, 1e-7);
    EXPECT_LE(ff::testing::relative_error(d, fd), 1e-6) << x;
  }
}
