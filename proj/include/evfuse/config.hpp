#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "evfuse/data.hpp"
#include "evfuse/experiments.hpp"
#include "evfuse/model.hpp"

namespace evfuse {

struct GradCheckConfig {
  int batch_size = 4;
  /// Optimizer steps taken before the second comparison.
  int steps = 10;
  double step = kGradCheckStep;
  double threshold = 1e-4;
  std::uint64_t seed = 0;
};

/// Everything a CLI run needs. Every section and key is optional; omitted
/// entries keep the defaults below.
struct ExperimentConfig {
  SyntheticConfig data;
  /// Only `hidden` is read from the file; classes and dimensions follow `data`.
  ModelConfig model;
  TrainConfig train;
  NoiseSweepConfig noise_sweep;
  OodConfig ood;
  AblationConfig ablate;
  GradCheckConfig grad_check;

  /// Empty paths resolve against the output directory: <out>/data and
  /// <out>/model.ckpt.
  std::string data_dir;
  std::string checkpoint;

  /// Sets data.seed, train.seed and every protocol seed.
  void apply_seed(std::uint64_t seed);
  /// Copies classes and dimensions from `data` into `model`, then validates.
  void finalize();

  std::filesystem::path data_path(const std::filesystem::path& out) const;
  std::filesystem::path checkpoint_path(const std::filesystem::path& out) const;
};

/// Parses a JSON config; unknown keys anywhere raise ConfigError.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string dump_experiment_config(const ExperimentConfig& config);

}  // namespace evfuse
