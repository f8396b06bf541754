#pragma once

#include <array>
#include <span>
#include <vector>

#include "evfuse/baseline.hpp"
#include "evfuse/model.hpp"

namespace evfuse {

/// Per-sample outcome that every metric is computed from.
struct EvalRecord {
  int label = 0;
  int predicted = 0;
  double confidence = 0.0;
  /// Aleatoric and epistemic uncertainty of the predicted class, combined
  /// across modalities with the fusion confidences C1, C2.
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double fused_uncertainty = 0.0;

  std::array<int, 2> modality_predicted{};
  std::array<double, 2> modality_confidence{};
  std::array<double, 2> modality_epistemic{};
};

struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;
};

struct EvalReport {
  double acc = 0.0;
  double kappa = 0.0;
  double ece = 0.0;
  double aurc = 0.0;
  double mean_confidence = 0.0;
  double mean_aleatoric = 0.0;
  double mean_epistemic = 0.0;
  double mean_fused_uncertainty = 0.0;
  std::array<double, 2> modality_acc{};
  std::array<double, 2> modality_mean_confidence{};
  std::array<double, 2> modality_mean_epistemic{};
  Histogram confidence_density;
  Histogram uncertainty_density;
};

inline constexpr int kDefaultEceBins = 15;

/// Throws std::invalid_argument on empty input.
double accuracy(std::span<const EvalRecord> records);

/// Unweighted Cohen's kappa (p_o - p_e) / (1 - p_e); 0 when p_e = 1.
double cohen_kappa(std::span<const EvalRecord> records);

/// Expected calibration error over `bins` equal-width confidence bins on
/// [0, 1]. A confidence c lands in bin min(floor(c * bins), bins - 1).
double ece(std::span<const EvalRecord> records, int bins = kDefaultEceBins);

/// Area under the risk-coverage curve: records sorted by descending
/// confidence (stable for ties), risk at coverage k/N is the error rate of
/// the top k, and the area is the mean risk over k = 1..N.
double aurc(std::span<const EvalRecord> records);

/// Fraction of values per bin. Values below the first or above the last
/// edge count toward the nearest end bin, so the masses always sum to 1.
Histogram density_summary(std::span<const double> values, std::span<const double> edges);

/// 20 equal-width bins on [0, 1].
std::vector<double> confidence_bin_edges();
/// 24 log-spaced bins from 1e-4 to 1e2, four per decade.
std::vector<double> uncertainty_bin_edges();

EvalReport summarize(std::span<const EvalRecord> records, int ece_bins = kDefaultEceBins);

std::vector<EvalRecord> evaluate(const ModelParams& params, std::span<const Sample> samples);
std::vector<EvalRecord> evaluate(const BaselineModel& model, std::span<const Sample> samples);

}  // namespace evfuse
