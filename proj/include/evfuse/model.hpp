#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evfuse/data.hpp"
#include "evfuse/evidential.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/losses.hpp"
#include "evfuse/network.hpp"

namespace evfuse {

/// Architecture of the two-branch evidential model.
struct ModelConfig {
  int classes = 3;
  int d1 = 16;
  int d2 = 16;
  std::vector<int> hidden{32, 32};

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Weights of both branches in one flat vector: branch 1 (encoder layers,
/// then the 4K-wide head) followed by branch 2.
class ModelParams {
 public:
  explicit ModelParams(ModelConfig config);

  /// Glorot-initialized parameters; identical seeds give identical weights.
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const MlpLayout& branch(Modality m) const { return branches_[m == Modality::kFirst ? 0 : 1]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const ModelParams& other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  ModelConfig config_;
  std::array<MlpLayout, 2> branches_;
  std::vector<double> values_;
};

struct TrainConfig {
  LossWeights weights;
  LossTerms terms;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct ForwardOutput {
  std::vector<NIGParams> heads_m1;
  std::vector<NIGParams> heads_m2;
  std::vector<StudentT> fused;
  FusedPrediction prediction;
  /// Per modality, evaluated at the fused predicted class.
  std::array<UncertaintyReport, 2> uncertainties;
  /// Argmax and max-softmax of each modality's gamma vector.
  std::array<int, 2> modality_predicted{};
  std::array<double, 2> modality_confidence{};
  /// Eq.-8 confidences of the predicted class.
  FusionWeights weights;
};

inline constexpr double kEvidenceFloor = 1e-6;

/// Maps 4K raw head outputs, laid out [gamma | delta | alpha | beta] with K
/// entries each, onto valid NIG parameters:
///   delta = softplus + 1e-6, alpha = softplus + 1 + 1e-6, beta = softplus + 1e-6.
std::vector<NIGParams> activate_head(std::span<const double> raw);

ForwardOutput forward(const ModelParams& params, const Sample& sample);

/// Batch-mean objective without gradients.
LossBreakdown batch_loss(const ModelParams& params, std::span<const Sample> batch,
                         const LossWeights& weights = {}, const LossTerms& terms = {});

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<double> gradient;
};

/// Batch-mean objective and its exact gradient with respect to every
/// parameter. The ranking gate is treated as a constant.
LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const Sample> batch,
                                  const LossWeights& weights = {}, const LossTerms& terms = {});

std::vector<double> backward(const ModelParams& params, std::span<const Sample> batch,
                             const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  LossBreakdown train;
  double val_acc = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

/// Mini-batch Adam over the training split, keeping the epoch with the best
/// validation accuracy (earliest epoch on ties).
TrainResult train(const TrainConfig& config, const ModelConfig& model, const Dataset& dataset);

/// Same, starting from given parameters for a fixed number of optimizer
/// steps, without checkpoint selection. Used by tests and the gradient check.
ModelParams train_steps(const TrainConfig& config, ModelParams params, std::span<const Sample> data,
                        int steps);

struct GradCheckTerm {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t parameters = 0;
  /// Samples whose ranking gate is open with at least one active hinge.
  int active_hinge_samples = 0;
  std::vector<GradCheckTerm> terms;
};

inline constexpr double kGradCheckStep = 1e-4;
/// Gradients smaller than this are compared on an absolute scale, so that
/// round-off in the central difference of an exactly-zero gradient (for
/// example first-layer weights under all-zero input) is not read as error.
inline constexpr double kGradCheckScaleFloor = 1e-6;

/// Relative disagreement |a - n| / max(|a|, |n|, kGradCheckScaleFloor).
double gradient_relative_error(double analytic, double numeric);

/// Compares analytic gradients with central differences (step h) for the
/// full objective and for each term (modality NIG, fused St, ranking) alone.
GradCheckReport gradient_check(const ModelParams& params, std::span<const Sample> batch,
                               const LossWeights& weights = {}, double h = kGradCheckStep);

}  // namespace evfuse
