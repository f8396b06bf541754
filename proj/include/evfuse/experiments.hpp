#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evfuse/baseline.hpp"
#include "evfuse/data.hpp"
#include "evfuse/metrics.hpp"
#include "evfuse/model.hpp"

namespace evfuse {

/// One evaluated condition. `sigma` is the corruption level (0 when none).
struct ConditionResult {
  std::string condition;
  double sigma = 0.0;
  EvalReport report;
};

struct NoiseSweepConfig {
  std::vector<double> sigmas{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<Modality> modalities{Modality::kFirst, Modality::kSecond};
  int repeats = 10;
  std::uint64_t seed = 0;
};

struct OodConfig {
  std::vector<double> sigmas{0.0, 0.1, 0.3, 0.5};
  int repeats = 10;
  std::uint64_t seed = 0;
  /// Seed of the foreign generator that supplies near-OOD features.
  std::uint64_t foreign_seed = 1000;
  Modality near_ood_modality = Modality::kSecond;
};

struct AblationConfig {
  std::vector<double> lambda_f{0.0, 0.1, 0.2, 0.5, 0.7, 1.0};
  std::vector<double> lambda_c{0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 15.0};
  bool loss_terms = true;
  bool uni_modal = true;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  /// Secondary evaluation of every run with this modality corrupted.
  double noise_sigma = 0.3;
  Modality noise_modality = Modality::kSecond;
};

/// Row labels: "clean" (sigma 0), then per modality and sigma "noise-m1",
/// each emitted twice: "<name>-mean" and "<name>-std" over the repeats.
/// Cell (modality, sigma, repeat) corrupts with stream derive_seed(seed, cell).
std::vector<ConditionResult> run_noise_sweep(const ModelParams& params, const Dataset& dataset,
                                             const NoiseSweepConfig& config);

/// Mean fused test report under corruption of one modality, averaged over
/// `repeats` noise draws. Histograms come from the first draw.
EvalReport corrupted_report(const ModelParams& params, std::span<const Sample> samples, Modality which,
                            double sigma, int repeats, std::uint64_t seed);
EvalReport corrupted_report(const BaselineModel& model, std::span<const Sample> samples, Modality which,
                            double sigma, int repeats, std::uint64_t seed);

/// "clean", "missing-m1", "missing-m2". Throws std::logic_error if a masked
/// modality is not all zero before the forward pass.
std::vector<ConditionResult> run_missing(const ModelParams& params, const Dataset& dataset);

/// "id"; "shifted-m1"/"shifted-m2" per sigma (mean over repeats); "near-ood-m2"
/// (or -m1); and "delta-*" rows holding OOD minus ID for each metric.
std::vector<ConditionResult> run_ood(const ModelParams& params, const Dataset& dataset,
                                     const OodConfig& config);

struct AblationRun {
  std::string condition;
  std::uint64_t seed = 0;
  EvalReport clean;
  EvalReport noisy;
  double noise_sigma = 0.0;
};

/// One run per (grid point, seed). Grid points, in order: "lambda_f=<v>" for
/// each lambda_f, "lambda_c=<v>" for each lambda_c, then with loss_terms
/// "baseline-concat", "nig", "nig+st", "nig+st+ranking", then with
/// uni_modal "uni-m1", "uni-m2".
std::vector<AblationRun> run_ablation(const TrainConfig& base, const ModelConfig& model,
                                      const Dataset& dataset, const AblationConfig& config);

/// Number of grid points run_ablation visits per seed.
std::size_t ablation_grid_size(const AblationConfig& config);

// CSV schemas (header row first, one row per result, reals in shortest
// round-trip form):
//   metrics:    condition,sigma,acc,kappa,ece,aurc
//   summaries:  condition,sigma,mean_confidence,mean_m1_confidence,mean_m2_confidence,
//               mean_aleatoric,mean_epistemic,mean_m1_epistemic,mean_m2_epistemic,
//               mean_fused_uncertainty
//   histograms: condition,sigma,quantity,bin_lower,bin_upper,mass
//   train log:  epoch,per_modality_nig_1,per_modality_nig_2,fused_st,ranking,total,
//               lambda_m,lambda_f,lambda_c,val_acc
void write_metrics_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows);
void write_histogram_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows);
void write_report_json(const std::filesystem::path& path, const std::vector<ConditionResult>& rows);
void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

/// Ablation rows flattened to "<grid point>/seed=<s>" conditions; the sigma
/// column is the corruption level of the evaluated split.
std::vector<ConditionResult> ablation_rows(const std::vector<AblationRun>& runs, bool noisy);

}  // namespace evfuse
