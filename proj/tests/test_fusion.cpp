#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evfuse/fusion.hpp"

using namespace evfuse;

namespace {

StudentT random_st(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0), s(0.05, 5.0), v(2.05, 30.0);
  return StudentT(u(rng), s(rng), v(rng));
}

}  // namespace

TEST(ConfidenceWeights, Values) {
  auto w = confidence_weights(4, 4);
  EXPECT_DOUBLE_EQ(w.c1, 0.5);
  EXPECT_DOUBLE_EQ(w.c2, 0.5);
  w = confidence_weights(2.5, 7.5);
  EXPECT_DOUBLE_EQ(w.c1, 0.25);
  EXPECT_DOUBLE_EQ(w.c2, 0.75);
  w = confidence_weights(6, 3);
  EXPECT_DOUBLE_EQ(w.c1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.c2, 1.0 / 3.0);
  EXPECT_THROW(confidence_weights(2.0, 4.0), std::domain_error);
}

TEST(FuseStudentT, SymmetricPair) {
  const StudentT f = fuse_student_t(StudentT(0, 1, 4), StudentT(2, 1, 4));
  EXPECT_DOUBLE_EQ(f.u(), 1.0);
  EXPECT_DOUBLE_EQ(f.sigma(), 1.0);
  EXPECT_DOUBLE_EQ(f.v(), 4.0);
}

TEST(FuseStudentT, WorkedExample) {
  const StudentT a(0, 1, 4), b(1, 2, 8);
  const auto w = confidence_weights(a.v(), b.v());
  EXPECT_DOUBLE_EQ(w.c1, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.c2, 2.0 / 3.0);
  for (const StudentT& f : {fuse_student_t(a, b), fuse_student_t(b, a)}) {
    EXPECT_DOUBLE_EQ(f.u(), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(f.sigma(), 7.0 / 6.0);
    EXPECT_EQ(f.v(), 4.0);
  }
}

TEST(FuseStudentT, OrderInvarianceAndConvexity) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const StudentT a = random_st(rng), b = random_st(rng);
    const StudentT ab = fuse_student_t(a, b), ba = fuse_student_t(b, a);
    EXPECT_NEAR(ab.u(), ba.u(), 1e-12);
    EXPECT_NEAR(ab.sigma(), ba.sigma(), 1e-12);
    EXPECT_EQ(ab.v(), ba.v());
    EXPECT_EQ(ab.v(), std::min(a.v(), b.v()));
    EXPECT_GE(ab.u(), std::min(a.u(), b.u()) - 1e-12);
    EXPECT_LE(ab.u(), std::max(a.u(), b.u()) + 1e-12);
    const auto w = confidence_weights(a.v(), b.v());
    EXPECT_NEAR(w.c1 + w.c2, 1.0, 1e-15);
  }
}

TEST(FuseStudentT, IdenticalInputsAreFixedPoint) {
  const StudentT a(0.7, 1.3, 5.0);
  const StudentT f = fuse_student_t(a, a);
  EXPECT_DOUBLE_EQ(f.u(), 0.7);
  EXPECT_DOUBLE_EQ(f.sigma(), 1.3);
  EXPECT_DOUBLE_EQ(f.v(), 5.0);
}

TEST(FusePerClass, IdenticalHeadsKeepGamma) {
  const std::vector<NIGParams> h{{0.2, 1, 2, 1}, {-0.4, 2, 3, 1}, {1.1, 1, 4, 2}};
  const auto r = fuse_per_class(h, h);
  ASSERT_EQ(r.prediction.class_means.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_DOUBLE_EQ(r.prediction.class_means[k], h[k].gamma);
  EXPECT_EQ(r.prediction.predicted_class, 2);
}

TEST(FusePerClass, ArgmaxTwoClasses) {
  const std::vector<NIGParams> h{{1.0, 1, 2, 1}, {0.0, 1, 2, 1}};
  EXPECT_EQ(fuse_per_class(h, h).prediction.predicted_class, 0);
}

TEST(FusePerClass, MatchesIndependentRecomposition) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> g(-2, 2), d(0.1, 4), a(1.05, 8), b(0.1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<NIGParams> m1, m2;
    for (int k = 0; k < 4; ++k) {
      m1.push_back({g(rng), d(rng), a(rng), b(rng)});
      m2.push_back({g(rng), d(rng), a(rng), b(rng)});
    }
    const auto r = fuse_per_class(m1, m2);
    int best = 0;
    double best_u = -1e300, best_var = 0;
    for (int k = 0; k < 4; ++k) {
      // St parameters, then the dof-weighted mixture written out longhand.
      const double v1 = 2 * m1[k].alpha, v2 = 2 * m2[k].alpha;
      const double s1 = m1[k].beta * (1 + m1[k].delta) / (m1[k].delta * m1[k].alpha);
      const double s2 = m2[k].beta * (1 + m2[k].delta) / (m2[k].delta * m2[k].alpha);
      const double u = (v1 * m1[k].gamma + v2 * m2[k].gamma) / (v1 + v2);
      double s;
      if (v1 <= v2) s = 0.5 * (s1 + v2 * (v1 - 2) / (v1 * (v2 - 2)) * s2);
      else s = 0.5 * (s2 + v1 * (v2 - 2) / (v2 * (v1 - 2)) * s1);
      const double vf = std::min(v1, v2);
      EXPECT_NEAR(r.fused[k].u(), u, 1e-12);
      EXPECT_NEAR(r.fused[k].sigma(), s, 1e-12 * s);
      if (u > best_u) {
        best_u = u;
        best = k;
        best_var = s * vf / (vf - 2);
      }
    }
    EXPECT_EQ(r.prediction.predicted_class, best);
    EXPECT_NEAR(r.prediction.uncertainty, best_var, 1e-12 * best_var);
  }
}

TEST(FusePerClass, RejectsBadShapes) {
  const std::vector<NIGParams> two(2), three(3), one(1);
  EXPECT_THROW(fuse_per_class(two, three), std::invalid_argument);
  EXPECT_THROW(fuse_per_class(one, one), std::invalid_argument);
}

TEST(Argmax, FirstWinsTies) {
  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(v), 1);
}
