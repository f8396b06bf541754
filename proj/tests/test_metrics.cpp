#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "evfuse/metrics.hpp"
#include "oracles.hpp"

using namespace evfuse;

namespace {

EvalRecord rec(int label, int predicted, double confidence = 0.5) {
  EvalRecord r;
  r.label = label;
  r.predicted = predicted;
  r.confidence = confidence;
  return r;
}

std::vector<EvalRecord> from_confusion(const std::vector<std::vector<double>>& c) {
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      for (int n = 0; n < static_cast<int>(c[i][j]); ++n) out.push_back(rec(static_cast<int>(i), static_cast<int>(j)));
    }
  }
  return out;
}

// 20 records spread over several bins, with distinct confidences.
std::vector<EvalRecord> fixture20(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(0.34, 0.99);
  std::bernoulli_distribution ok(0.7);
  std::vector<EvalRecord> out;
  for (int i = 0; i < 20; ++i) out.push_back(rec(i % 3, ok(rng) ? i % 3 : (i + 1) % 3, c(rng)));
  return out;
}

}  // namespace

TEST(Accuracy, Counting) {
  std::vector<EvalRecord> r;
  for (int i = 0; i < 10; ++i) r.push_back(rec(0, i < 7 ? 0 : 1));
  EXPECT_DOUBLE_EQ(accuracy(r), 0.7);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<EvalRecord>{rec(1, 1), rec(2, 2)}), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(std::vector<EvalRecord>{rec(1, 0), rec(2, 1)}), 0.0);
  EXPECT_THROW(accuracy(std::vector<EvalRecord>{}), std::invalid_argument);
}

TEST(Kappa, PerfectAndChance) {
  EXPECT_DOUBLE_EQ(cohen_kappa(from_confusion({{5, 0, 0}, {0, 5, 0}, {0, 0, 5}})), 1.0);
  // Independent predictions with matched marginals.
  EXPECT_NEAR(cohen_kappa(from_confusion({{4, 4}, {4, 4}})), 0.0, 1e-15);
  // A single class everywhere: p_e = 1.
  EXPECT_EQ(cohen_kappa(from_confusion({{6, 0}, {0, 0}})), 0.0);
}

TEST(Kappa, MatchesConfusionOracle) {
  const std::vector<std::vector<double>> c{{2, 1, 0}, {0, 3, 0}, {1, 0, 3}};
  EXPECT_NEAR(cohen_kappa(from_confusion(c)), oracle::kappa_from_confusion(c), 1e-12);
  // p_o = 8/10, p_e = (3*3 + 3*4 + 4*3) / 100 = 0.33.
  EXPECT_NEAR(cohen_kappa(from_confusion(c)), (0.8 - 0.33) / 0.67, 1e-12);
}

TEST(Ece, SimpleCases) {
  std::vector<EvalRecord> all_right, half_right;
  for (int i = 0; i < 10; ++i) {
    all_right.push_back(rec(0, 0, 1.0));
    half_right.push_back(rec(0, i % 2, 1.0));
  }
  EXPECT_DOUBLE_EQ(ece(all_right), 0.0);
  EXPECT_DOUBLE_EQ(ece(half_right), 0.5);
}

TEST(Ece, TwoBinsByHand) {
  // Bin of 0.95: 2 right, 1 wrong; bin of 0.55: 1 right, 1 wrong.
  std::vector<EvalRecord> r{rec(0, 0, 0.95), rec(0, 0, 0.95), rec(0, 1, 0.95), rec(0, 0, 0.55), rec(0, 1, 0.55)};
  const double expected = 0.6 * std::abs(2.0 / 3.0 - 0.95) + 0.4 * std::abs(0.5 - 0.55);
  EXPECT_NEAR(ece(r), expected, 1e-15);
}

TEST(Ece, MatchesBinningOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = fixture20(seed);
    EXPECT_EQ(ece(r), oracle::ece(r, 15));
    EXPECT_EQ(ece(r, 10), oracle::ece(r, 10));
  }
}

TEST(Aurc, SimpleCases) {
  std::vector<EvalRecord> right, wrong, one_error;
  for (int i = 0; i < 10; ++i) {
    right.push_back(rec(0, 0, 0.5 + 0.01 * i));
    wrong.push_back(rec(0, 1, 0.5 + 0.01 * i));
    one_error.push_back(rec(0, i == 0 ? 1 : 0, 0.5 + 0.01 * i));
  }
  EXPECT_DOUBLE_EQ(aurc(right), 0.0);
  EXPECT_DOUBLE_EQ(aurc(wrong), 1.0);
  EXPECT_NEAR(aurc(one_error), 0.01, 1e-15);
}

TEST(Aurc, MatchesCoverageOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = fixture20(seed);
    EXPECT_EQ(aurc(r), oracle::aurc(r));
    // Ties resolve by original position.
    for (auto& x : r) x.confidence = std::round(x.confidence * 4) / 4;
    EXPECT_EQ(aurc(r), oracle::aurc(r));
  }
}

TEST(Density, Cases) {
  const std::vector<double> edges{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> same(7, 0.3);
  const auto h = density_summary(same, edges);
  EXPECT_EQ(h.mass, (std::vector<double>{0, 1, 0, 0}));
  EXPECT_EQ(h.edges, edges);

  const std::vector<double> outside{-5.0, 7.0, 1.0};
  EXPECT_EQ(density_summary(outside, edges).mass, (std::vector<double>{1.0 / 3, 0, 0, 2.0 / 3}));
  EXPECT_EQ(density_summary(std::vector<double>{}, edges).mass, (std::vector<double>(4, 0.0)));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(40000);
  for (auto& x : xs) x = u(rng);
  const auto uh = density_summary(xs, confidence_bin_edges());
  double chi2 = 0.0, total = 0.0;
  const double expect = xs.size() / 20.0;
  for (double m : uh.mass) {
    chi2 += std::pow(m * xs.size() - expect, 2) / expect;
    total += m;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_LT(chi2, 43.8);  // 99.9% quantile, 19 dof
}

TEST(Density, EdgeGrids) {
  const auto c = confidence_bin_edges();
  ASSERT_EQ(c.size(), 21u);
  EXPECT_EQ(c.front(), 0.0);
  EXPECT_EQ(c.back(), 1.0);
  const auto u = uncertainty_bin_edges();
  ASSERT_EQ(u.size(), 25u);
  EXPECT_NEAR(u.front(), 1e-4, 1e-18);
  EXPECT_NEAR(u.back(), 1e2, 1e-12);
}

TEST(Summarize, AgreesWithPieces) {
  auto r = fixture20(3);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i].epistemic = 0.01 * i;
    r[i].modality_predicted = {r[i].label, 0};
  }
  const auto s = summarize(r);
  EXPECT_EQ(s.acc, accuracy(r));
  EXPECT_EQ(s.kappa, cohen_kappa(r));
  EXPECT_EQ(s.ece, ece(r));
  EXPECT_EQ(s.aurc, aurc(r));
  EXPECT_NEAR(s.mean_epistemic, 0.095, 1e-15);
  EXPECT_DOUBLE_EQ(s.modality_acc[0], 1.0);
  EXPECT_EQ(s.confidence_density.mass.size(), 20u);
  EXPECT_EQ(s.uncertainty_density.mass.size(), 24u);
}

TEST(Evaluate, RecordsFollowForwardPass) {
  SyntheticConfig dc;
  dc.n = 40;
  const Dataset d = generate(dc);
  const ModelParams p = ModelParams::initialize(ModelConfig{}, 4);
  const auto records = evaluate(p, d.test);
  ASSERT_EQ(records.size(), d.test.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto f = forward(p, d.test[i]);
    const auto& r = records[i];
    EXPECT_EQ(r.label, d.test[i].label);
    EXPECT_EQ(r.predicted, f.prediction.predicted_class);
    EXPECT_EQ(r.confidence, f.prediction.confidence);
    EXPECT_NEAR(r.epistemic, f.weights.c1 * f.uncertainties[0].epistemic + f.weights.c2 * f.uncertainties[1].epistemic,
                1e-15);
    EXPECT_EQ(r.modality_confidence[1], f.modality_confidence[1]);
  }
}
