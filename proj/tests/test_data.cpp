#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "evfuse/data.hpp"

using namespace evfuse;
namespace fs = std::filesystem;

namespace {

std::vector<Sample> all_samples(const Dataset& d) {
  std::vector<Sample> out(d.train);
  out.insert(out.end(), d.val.begin(), d.val.end());
  out.insert(out.end(), d.test.begin(), d.test.end());
  return out;
}

// Nearest class mean on concatenated features, fitted on the training split.
double nearest_mean_accuracy(const Dataset& d) {
  const int K = d.config.classes;
  const std::size_t dim = d.train.front().x1.size() + d.train.front().x2.size();
  std::vector<std::vector<double>> mean(K, std::vector<double>(dim, 0.0));
  std::vector<int> count(K, 0);
  const auto concat = [](const Sample& s) {
    std::vector<double> x(s.x1);
    x.insert(x.end(), s.x2.begin(), s.x2.end());
    return x;
  };
  for (const auto& s : d.train) {
    const auto x = concat(s);
    for (std::size_t j = 0; j < dim; ++j) mean[s.label][j] += x[j];
    ++count[s.label];
  }
  for (int k = 0; k < K; ++k) {
    for (auto& v : mean[k]) v /= count[k];
  }
  int correct = 0;
  for (const auto& s : d.test) {
    const auto x = concat(s);
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < K; ++k) {
      double dist = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dist += (x[j] - mean[k][j]) * (x[j] - mean[k][j]);
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    correct += best == s.label;
  }
  return static_cast<double>(correct) / d.test.size();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("evfuse_test_data_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Generate, SplitSizesAndBalance) {
  const Dataset d = generate(SyntheticConfig{});
  EXPECT_EQ(d.train.size(), 1600u);
  EXPECT_EQ(d.val.size(), 200u);
  EXPECT_EQ(d.test.size(), 200u);
  std::map<int, int> counts;
  for (const auto& s : all_samples(d)) ++counts[s.label];
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [k, c] : counts) EXPECT_LE(std::abs(c - 2000.0 / 3.0), 1.0) << k;
  EXPECT_EQ(split_sizes(15), (std::array<int, 3>{12, 1, 2}));
}

TEST(Generate, Deterministic) {
  SyntheticConfig c;
  c.n = 300;
  const Dataset a = generate(c), b = generate(c);
  EXPECT_EQ(all_samples(a), all_samples(b));
  c.seed = 1;
  EXPECT_NE(all_samples(a), all_samples(generate(c)));
}

TEST(Generate, TrainSplitIsStandardized) {
  const Dataset d = generate(SyntheticConfig{});
  for (std::size_t j = 0; j < d.train.front().x2.size(); ++j) {
    double m = 0, v = 0;
    for (const auto& s : d.train) m += s.x2[j] / d.train.size();
    for (const auto& s : d.train) v += (s.x2[j] - m) * (s.x2[j] - m) / d.train.size();
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

TEST(Generate, NearestMeanOracle) {
  EXPECT_GE(nearest_mean_accuracy(generate(SyntheticConfig{})), 0.9);
  SyntheticConfig flat;
  flat.separation = 0.0;
  EXPECT_NEAR(nearest_mean_accuracy(generate(flat)), 1.0 / 3.0, 0.12);
}

TEST(Generate, RejectsInvalidConfig) {
  SyntheticConfig c;
  c.n = 5;
  EXPECT_THROW(generate(c), std::invalid_argument);
  c = {};
  c.sigma1 = 0;
  EXPECT_THROW(generate(c), std::invalid_argument);
  c = {};
  c.informativeness2 = 1.5;
  EXPECT_THROW(generate(c), std::invalid_argument);
  c = {};
  c.classes = 1;
  EXPECT_THROW(generate(c), std::invalid_argument);
}

TEST(Corrupt, IdentityAndNoiseScale) {
  const std::vector<double> x(100000, 1.5);
  EXPECT_EQ(corrupt_gaussian(x, 0.0, 3), x);
  const auto y = corrupt_gaussian(x, 0.3, 3);
  double m = 0, v = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m += (y[i] - x[i]) / x.size();
  for (std::size_t i = 0; i < x.size(); ++i) v += (y[i] - x[i] - m) * (y[i] - x[i] - m) / x.size();
  EXPECT_NEAR(std::sqrt(v), 0.3, 0.01);
  EXPECT_NE(corrupt_gaussian(x, 0.3, 4), y);
  EXPECT_EQ(corrupt_gaussian(x, 0.3, 3), y);
  EXPECT_THROW(corrupt_gaussian(x, -0.1, 3), std::invalid_argument);
}

TEST(Corrupt, SplitTouchesOnlyOneModality) {
  SyntheticConfig c;
  c.n = 100;
  const Dataset d = generate(c);
  const auto noisy = corrupt_split(d.test, Modality::kSecond, 0.5, 1);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    EXPECT_EQ(noisy[i].x1, d.test[i].x1);
    EXPECT_NE(noisy[i].x2, d.test[i].x2);
    EXPECT_EQ(noisy[i].label, d.test[i].label);
  }
  // Per-sample streams: a sub-span sees the same noise as the full split.
  const auto head = corrupt_split(std::span(d.test).first(3), Modality::kSecond, 0.5, 1);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(head[i], noisy[i]);
}

TEST(Mask, Properties) {
  const Sample s{{1, 2}, {3, 4, 5}, 1};
  const Sample m = mask_modality(s, Modality::kFirst);
  EXPECT_EQ(m.x1, (std::vector<double>{0, 0}));
  EXPECT_EQ(m.x2, s.x2);
  EXPECT_EQ(mask_modality(m, Modality::kFirst), m);
  const Sample both = mask_modality(m, Modality::kSecond);
  for (double v : both.x2) EXPECT_EQ(v, 0.0);
}

TEST(NearOod, SameConfigIsIdentity) {
  SyntheticConfig c;
  c.n = 200;
  const Dataset d = generate(c);
  const Dataset same = make_near_ood(d, c, Modality::kSecond);
  EXPECT_EQ(all_samples(same), all_samples(d));
}

TEST(NearOod, SubstitutesOnlyOneModality) {
  SyntheticConfig c;
  c.n = 10000;
  const Dataset d = generate(c);
  SyntheticConfig foreign = c;
  foreign.seed = 77;
  const Dataset ood = make_near_ood(d, foreign, Modality::kSecond);
  const auto src = all_samples(d), sub = all_samples(ood);
  for (std::size_t i = 0; i < src.size(); ++i) {
    ASSERT_EQ(sub[i].x1, src[i].x1);
    ASSERT_EQ(sub[i].label, src[i].label);
  }

  // Class means of the substituted modality, mapped back to raw units,
  // sit near the foreign generator's class means, not the source's.
  const Dataset fd = generate(foreign);
  const auto fsamples = all_samples(fd);
  const std::size_t dim = c.d2;
  const auto raw_means = [&](const std::vector<Sample>& xs, const Standardizer& st) {
    std::vector<std::vector<double>> m(c.classes, std::vector<double>(dim, 0.0));
    std::vector<int> n(c.classes, 0);
    for (const auto& s : xs) {
      for (std::size_t j = 0; j < dim; ++j) m[s.label][j] += s.x2[j] * st.scale[1][j] + st.mean[1][j];
      ++n[s.label];
    }
    for (int k = 0; k < c.classes; ++k) {
      for (auto& v : m[k]) v /= n[k];
    }
    return m;
  };
  const auto ms = raw_means(src, d.standardizer), mo = raw_means(sub, d.standardizer),
             mf = raw_means(fsamples, fd.standardizer);
  for (int k = 0; k < c.classes; ++k) {
    double to_foreign = 0, to_source = 0;
    for (std::size_t j = 0; j < dim; ++j) {
      to_foreign += (mo[k][j] - mf[k][j]) * (mo[k][j] - mf[k][j]);
      to_source += (mo[k][j] - ms[k][j]) * (mo[k][j] - ms[k][j]);
    }
    EXPECT_LT(to_foreign, 0.1 * to_source) << "class " << k;
  }
}

TEST(NearOod, RejectsDimensionMismatch) {
  SyntheticConfig c;
  c.n = 50;
  const Dataset d = generate(c);
  SyntheticConfig f = c;
  f.d2 = 4;
  EXPECT_THROW(make_near_ood(d, f, Modality::kSecond), std::invalid_argument);
}

TEST(Files, RoundTrip) {
  SyntheticConfig c;
  c.n = 120;
  c.seed = 9;
  const Dataset d = generate(c);
  const fs::path dir = scratch("roundtrip");
  save_dataset(dir, d);
  for (const char* f : {"train.csv", "val.csv", "test.csv", "meta.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(back.config, d.config);
  EXPECT_EQ(all_samples(back), all_samples(d));
  EXPECT_EQ(back.standardizer.mean, d.standardizer.mean);
  EXPECT_EQ(back.standardizer.scale, d.standardizer.scale);

  const fs::path dir2 = scratch("roundtrip2");
  save_dataset(dir2, generate(c));
  for (const char* f : {"train.csv", "val.csv", "test.csv", "meta.json"}) {
    EXPECT_EQ(read_file(dir / f), read_file(dir2 / f)) << f;
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST(Files, RejectsMalformedInput) {
  const fs::path dir = scratch("bad");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "a.csv") << "label,x1_0,x2_0\n0,1.0\n";
    std::ofstream(dir / "b.csv") << "label,x1_0,x2_0\n0,abc,1\n";
    std::ofstream(dir / "c.csv") << "lbl,x1_0\n";
  }
  EXPECT_ANY_THROW(read_samples(dir / "a.csv"));
  EXPECT_ANY_THROW(read_samples(dir / "b.csv"));
  EXPECT_ANY_THROW(read_samples(dir / "c.csv"));
  EXPECT_ANY_THROW(read_samples(dir / "missing.csv"));
  EXPECT_ANY_THROW(load_dataset(dir));
  fs::remove_all(dir);
}

TEST(Modality, Parse) {
  EXPECT_EQ(parse_modality("1"), Modality::kFirst);
  EXPECT_EQ(parse_modality("m2"), Modality::kSecond);
  EXPECT_EQ(modality_name(Modality::kSecond), "m2");
  EXPECT_THROW(parse_modality("3"), std::invalid_argument);
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}
