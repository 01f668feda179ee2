#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "matconc/errors.hpp"
#include "matconc/generators.hpp"
#include "matconc/martingales.hpp"

using namespace matconc;
using matconc::testing::op_dist;
using matconc::testing::random_sym;

TEST(GammaSchedule, Kinds) {
  EXPECT_EQ(GammaSchedule::constant(0.3).at(7), 0.3);
  const auto l = GammaSchedule::list({0.1, 0.2});
  EXPECT_EQ(l.at(1), 0.1);
  EXPECT_EQ(l.at(2), 0.2);
  EXPECT_EQ(l.at(5), 0.2);
  EXPECT_NEAR(GammaSchedule::inv_sqrt(2.0).at(4), 1.0, 1e-15);
}

TEST(Builders, BettingZeroGammaIsIdentity) {
  const SymMat m = SymMat::diagonal({0.3, 0.5});
  const Factors f = build_betting(SymMat::diagonal({0.9, 0.1}), m, SymMat::identity(2), 0.0);
  EXPECT_EQ(f.e, SymMat::identity(2));
  EXPECT_EQ(f.a, SymMat::identity(2));
}

TEST(Builders, BettingRange) {
  const SymMat m = SymMat::diagonal({0.25, 0.5});
  const SymMat b = SymMat::identity(2);
  const auto [lo, hi] = betting_gamma_range(m, b);
  EXPECT_NEAR(lo, -4.0 / 3.0, 1e-14);
  EXPECT_NEAR(hi, 2.0, 1e-14);
  EXPECT_THROW(build_betting(m, m, b, 2.0), GammaOutOfRange);
  EXPECT_THROW(build_betting(m, m, b, -2.5), GammaOutOfRange);
  EXPECT_NO_THROW(build_betting(m, m, b, 1.9));
}

TEST(Builders, MgfScalarGaussian) {
  const double g = 0.8, mu = 1.0, x = 1.7;
  MgfParams row{MgfKind::UniGaussian, SymMat::identity(1), {}, {}};
  const Factors f = build_mgf(SymMat::diagonal({x}), SymMat::diagonal({mu}), row, g);
  EXPECT_NEAR(f.e(0, 0), std::exp(g * (x - mu)), 1e-14);
  EXPECT_NEAR(f.a(0, 0), std::exp(-g * g / 2), 1e-14);
}

TEST(Builders, SelfNormalizedAtMean) {
  const SymMat m = SymMat::from_rows({{1, 0.2}, {0.2, 0.5}});
  const SymMat v = SymMat::identity(2);
  const double g = 0.6;
  const Factors f = build_self_normalized(m, m, v, g);
  EXPECT_LT(op_dist(f.e, SymMat::identity(2)), 1e-15);
  EXPECT_LT(op_dist(f.a, SymMat::scaled_identity(2, std::exp(-g * g / 3))), 1e-15);
  MatSupermartingale y(2);
  for (int i = 0; i < 5; ++i) y.step(f);
  EXPECT_LT(op_dist(y.value(), SymMat::scaled_identity(2, std::exp(-5 * g * g / 3))), 1e-14);
}

TEST(Builders, Symmetric) {
  const SymMat d = SymMat::from_rows({{0.4, 0.1}, {0.1, -0.2}});
  const Factors f = build_symmetric(d, SymMat::zero(2), 1.5);
  EXPECT_LT(op_dist(f.e, mat_exp(1.5 * d - (1.5 * 1.5 / 2) * mat_square(d))), 1e-14);
  EXPECT_EQ(f.a, SymMat::identity(2));
}

TEST(Supermartingale, IdentityFactors) {
  MatSupermartingale y(3);
  EXPECT_EQ(y.value(), SymMat::identity(3));
  for (int i = 0; i < 10; ++i) y.step(SymMat::identity(3), SymMat::identity(3));
  EXPECT_LT(op_dist(y.value(), SymMat::identity(3)), 1e-15);
  EXPECT_EQ(y.n(), 10);
}

TEST(Supermartingale, ScalarCollapse) {
  MatSupermartingale y(1);
  double prod = 1;
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const double e = 0.5 + open_uniform(rng), a = 0.5 + open_uniform(rng);
    y.step(SymMat::diagonal({e}), SymMat::diagonal({a}));
    prod *= e * a;
  }
  EXPECT_NEAR(y.value()(0, 0), prod, 1e-12 * prod);
}

TEST(Supermartingale, RejectsNonPsdFactor) {
  MatSupermartingale y(2);
  EXPECT_THROW(y.step(SymMat::diagonal({1.0, -0.5}), SymMat::identity(2)), DomainError);
  EXPECT_THROW(y.step(SymMat::identity(2), SymMat::diagonal({1.0, 0.0})), DomainError);
}

TEST(Supermartingale, IncrementalMatchesFromScratch) {
  Rng rng(5);
  const auto g = make_gaussian_scaled(SymMat::from_rows({{0.5, 0.2, 0}, {0.2, 0.3, 0.1}, {0, 0.1, 0.4}}),
                                      SymMat::zero(3));
  for (int path = 0; path < 20; ++path) {
    MatSupermartingale y(3);
    std::vector<Factors> fs;
    for (int i = 0; i < 20; ++i) {
      const Factors f = build_self_normalized(g->draw(rng), SymMat::zero(3), *g->variance(), 0.4);
      fs.push_back(f);
      y.step(f);
      EXPECT_TRUE(is_psd(y.value()));
    }
    const SymMat ref = supermartingale_from_scratch(fs);
    EXPECT_LE(op_dist(y.value(), ref), 1e-8 * std::max(1.0, spectral_norm(ref)));
  }
}

TEST(Supermartingale, OneStepMgfRademacher) {
  Rng rng(6);
  const SymMat c = SymMat::from_rows({{1, 0.3}, {0.3, 0.5}});
  const auto g = make_rademacher_scaled(c, SymMat::zero(2));
  MgfParams row{MgfKind::Rademacher, c, {}, {}};
  const int draws = 100000;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2), s2q = Eigen::MatrixXd::Zero(2, 2);
  std::vector<Eigen::VectorXd> vs;
  for (int k = 0; k < 100; ++k) vs.push_back(matconc::testing::random_unit(2, rng));
  std::vector<double> sum(100, 0), sum2(100, 0);
  for (int t = 0; t < draws; ++t) {
    MatSupermartingale y(2);
    y.step(build_mgf(g->draw(rng), SymMat::zero(2), row, 0.9));
    const SymMat v = y.value();
    for (int k = 0; k < 100; ++k) {
      const double q = vs[k].dot(v.matrix() * vs[k]);
      sum[k] += q;
      sum2[k] += q * q;
    }
  }
  for (int k = 0; k < 100; ++k) {
    const double m = sum[k] / draws;
    const double se = std::sqrt((sum2[k] / draws - m * m) / draws);
    EXPECT_LE(m, 1.0 + 3 * se);
  }
}

TEST(Ville, Examples) {
  const double alpha = 0.1;
  EXPECT_NEAR(ville_bound(SymMat::identity(4), SymMat::scaled_identity(4, 4 / alpha)), alpha, 1e-15);
  const SymMat a = SymMat::from_rows({{3, 1}, {1, 2}});
  EXPECT_FALSE(ville_event(a, a, SymMat::identity(2)));
  EXPECT_TRUE(ville_event(a, a, SymMat::scaled_identity(2, 0.9)));
}

TEST(EprocessMin, Examples) {
  const SymMat a = SymMat::from_rows({{2, 0.5}, {0.5, 1}});
  std::vector<SymMat> one{a};
  EXPECT_EQ(eprocess_min(one), a);
  std::vector<SymMat> two{a, a};
  EXPECT_EQ(eprocess_min(two), a);
  std::vector<SymMat> bad{a, SymMat::identity(3)};
  EXPECT_THROW(eprocess_min(bad), DimMismatch);
  std::vector<SymMat> ab{SymMat::diagonal({2.0, 0.0}), SymMat::diagonal({0.0, 2.0})};
  const SymMat r = eprocess_min(ab);
  EXPECT_TRUE(loewner_leq(r, ab[0]));
  EXPECT_TRUE(loewner_leq(r, ab[1]));
}

TEST(Doob, Examples) {
  std::vector<SymMat> zeros(5, SymMat::zero(2));
  EXPECT_FALSE(doob_event(zeros, SymMat::identity(2)));
  std::vector<SymMat> single{SymMat::diagonal({2.0, 0.0})};
  EXPECT_EQ(doob_event(single, SymMat::identity(2)), ummi_event(single[0], SymMat::identity(2), SymMat::identity(2)));
  EXPECT_NEAR(doob_bound(SymMat::diagonal({0.1, 0.2}), SymMat::identity(2)), 0.3, 1e-15);
}

TEST(Xmci, Examples) {
  // Scalar exchangeable Chebyshev: σ²/a²
  EXPECT_NEAR(xmci_bound(SymMat::diagonal({2.0}), SymMat::diagonal({4.0})), 2.0 / 16.0, 1e-16);
  EXPECT_NEAR(xmci2_bound(SymMat::diagonal({2.0}), SymMat::diagonal({4.0}), 10), 2.0 / 160.0, 1e-16);
  EXPECT_EQ(xmci_bound(SymMat::zero(2), SymMat::identity(2)), 0.0);
  const SymMat m = SymMat::diagonal({1.0, 2.0});
  std::vector<SymMat> xs(50, m);
  EXPECT_FALSE(xmci_event(xs, m, SymMat::scaled_identity(2, 1e-6), 50));
  std::vector<SymMat> ys{SymMat::diagonal({3.0, 2.0}), SymMat::diagonal({-1.0, 2.0})};
  EXPECT_TRUE(xmci_event(ys, m, SymMat::identity(2), 2, 1));
  EXPECT_FALSE(xmci_event(ys, m, SymMat::identity(2), 2, 2));
}

TEST(Xmpci, Examples) {
  const double c = 0.7, p = 1.5;
  std::vector<SymMat> xs(30, SymMat::scaled_identity(3, c));
  EXPECT_FALSE(xmpci_event(xs, SymMat::scaled_identity(3, 2 * c), p, 30));
  EXPECT_NEAR(xmpci_bound(SymMat::scaled_identity(3, std::pow(c, p)), SymMat::scaled_identity(3, 2 * c), p),
              3 * std::pow(2.0, -p), 1e-14);
  // Exchangeable Markov at p = 1, d = 1
  EXPECT_NEAR(xmpci_bound(SymMat::diagonal({0.3}), SymMat::diagonal({2.0}), 1.0), 0.15, 1e-16);
}

TEST(TracePCheb, Examples) {
  const SymMat m = SymMat::zero(2);
  std::vector<SymMat> xs(10, SymMat::diagonal({1.0, -1.0}));
  // tr abs(X - M)^p = 2
  EXPECT_TRUE(trace_pcheb_event(xs, m, std::pow(2.0, 1 / 1.2) - 1e-9, 1.2, 10));
  EXPECT_FALSE(trace_pcheb_event(xs, m, std::pow(2.0, 1 / 1.2) + 1e-9, 1.2, 10));
  EXPECT_NEAR(trace_pcheb_bound(3.0, 2.0, 2.0), 0.75, 1e-16);
  EXPECT_NEAR(trace_abs_pow(SymMat::diagonal({-2.0, 1.0}), 2.0), 5.0, 1e-14);
}

TEST(Exchangeable, RunningAverage) {
  ExchangeableAvg avg(2);
  avg.push(SymMat::diagonal({1.0, 0.0}));
  avg.push(SymMat::diagonal({3.0, 2.0}));
  EXPECT_EQ(avg.n(), 2);
  EXPECT_LT(op_dist(avg.mean(), SymMat::diagonal({2.0, 1.0})), 1e-15);
}

TEST(Exchangeable, BackwardSubmartingale) {
  Rng rng(8);
  const auto g = make_gaussian_scaled(SymMat::from_rows({{1, 0.3}, {0.3, 0.6}}), SymMat::zero(2));
  const int n = 6;
  for (int t = 0; t < 20; ++t) {
    const auto xs = g->path(n + 1, rng);
    const SymMat cond = exchangeable_conditional_mean(xs, SymMat::zero(2), 2.0, 200, rng);
    ExchangeableAvg avg(2);
    for (const auto& x : xs) avg.push(x);
    const SymMat r_next = mat_square(avg.mean());
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd v = matconc::testing::random_unit(2, rng);
      // Sampled permutations: allow a small estimator slack
      EXPECT_GE(v.dot(cond.matrix() * v), v.dot(r_next.matrix() * v) - 0.05 * std::max(1.0, spectral_norm(r_next)));
    }
  }
}

TEST(Doob, TraceLpInequality) {
  Rng rng(10);
  const auto g = make_rademacher_scaled(SymMat::from_rows({{1, 0.2}, {0.2, 0.5}}), SymMat::zero(2));
  const int paths = 5000, big_n = 50;
  double lhs = 0, lhs2 = 0, rhs = 0;
  for (int t = 0; t < paths; ++t) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
    double sup = 0, last = 0;
    for (int i = 0; i < big_n; ++i) {
      s += g->draw(rng).matrix();
      // S_n² is a PSD submartingale
      last = trace(mat_square(SymMat(s)));
      sup = std::max(sup, last);
    }
    lhs += sup * sup;
    lhs2 += sup * sup * sup * sup;
    rhs += last * last;
  }
  lhs /= paths;
  rhs /= paths;
  const double se = std::sqrt((lhs2 / paths - lhs * lhs) / paths);
  EXPECT_LE(lhs, 4 * rhs + 3 * se);
}

TEST(OptionalStopping, BoundedStoppingTime) {
  Rng rng(12);
  const SymMat c = SymMat::from_rows({{0.6, 0.1}, {0.1, 0.4}});
  const auto g = make_rademacher_scaled(c, SymMat::zero(2));
  FactorStream proto({BuilderKind::Symmetric, SymMat::zero(2), {}, {}, {}}, GammaSchedule::constant(0.8));
  const int paths = 20000;
  const Eigen::VectorXd v = matconc::testing::random_unit(2, rng);
  double s = 0, s2 = 0;
  for (int t = 0; t < paths; ++t) {
    FactorStream fs = proto;
    MatSupermartingale y(2);
    for (int i = 0; i < 15; ++i) {
      y.step(fs.next(g->draw(rng)));
      if (lambda_max(y.value()) > 1.5) break;
    }
    const double q = v.dot(y.value().matrix() * v);
    s += q;
    s2 += q * q;
  }
  const double m = s / paths;
  EXPECT_LE(m, 1.0 + 3 * std::sqrt((s2 / paths - m * m) / paths));
}

TEST(Builders, Names) {
  for (auto k : {BuilderKind::Mgf, BuilderKind::Betting, BuilderKind::SelfNormalized, BuilderKind::Symmetric})
    EXPECT_EQ(parse_builder_kind(to_string(k)), k);
}
