#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace evfuse {

/// One paired two-modality record.
struct Sample {
  std::vector<double> x1;
  std::vector<double> x2;
  int label = 0;

  bool operator==(const Sample&) const = default;
};

enum class Modality { kFirst = 1, kSecond = 2 };

/// Parses "1"/"2" (also accepts "m1"/"m2").
Modality parse_modality(const std::string& text);
std::string modality_name(Modality m);

/// Synthetic two-modality classification data. Every class owns one
/// prototype per modality drawn uniformly on a sphere of radius
/// `separation`; a sample of class k in modality m is
///   informativeness_m * prototype_{k,m} + sigma_m * N(0, I).
/// The default makes modality 1 the more informative one.
struct SyntheticConfig {
  int classes = 3;
  int d1 = 16;
  int d2 = 16;
  double separation = 2.0;
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double informativeness1 = 1.0;
  double informativeness2 = 0.6;
  int n = 2000;
  std::uint64_t seed = 0;

  void validate() const;
  int dim(Modality m) const { return m == Modality::kFirst ? d1 : d2; }

  bool operator==(const SyntheticConfig&) const = default;
};

/// Per-feature affine map fitted on the training split.
struct Standardizer {
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> scale;

  static Standardizer fit(std::span<const std::vector<double>> x1,
                          std::span<const std::vector<double>> x2);
  void apply_in_place(std::vector<double>& x, Modality m) const;
};

/// Train/val/test splits in generation order (train first), standardized
/// with statistics of the training split.
struct Dataset {
  SyntheticConfig config;
  Standardizer standardizer;
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

/// Split sizes for an 8:1:1 partition of n samples.
std::array<int, 3> split_sizes(int n);

Dataset generate(const SyntheticConfig& config);

/// x + N(0, sigma^2 I); sigma = 0 returns x unchanged.
std::vector<double> corrupt_gaussian(std::span<const double> x, double sigma, std::uint64_t seed);

/// Corrupts one modality of every sample. Sample i uses its own stream
/// derived from (seed, i), so results do not depend on evaluation order.
std::vector<Sample> corrupt_split(std::span<const Sample> samples, Modality which, double sigma,
                                  std::uint64_t seed);

/// Zero-fills one modality.
Sample mask_modality(Sample sample, Modality which);

/// Replaces modality `which` of every sample with features drawn from a
/// foreign generator, keeping labels. The foreign features pass through the
/// source standardizer, as a deployed model would see them.
Dataset make_near_ood(const Dataset& source, const SyntheticConfig& foreign, Modality which);

/// Stream derivation shared by every seeded component.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Text format: one header row "label,x1_0..x1_{d1-1},x2_0..x2_{d2-1}", then
// one comma-separated sample per line. Reals are written in shortest
// round-trip form, so reading back reproduces every bit.
void write_samples(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> read_samples(const std::filesystem::path& path);

/// Writes train.csv, val.csv, test.csv and meta.json into `dir`.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace evfuse
