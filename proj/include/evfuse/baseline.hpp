#pragma once

#include <span>
#include <vector>

#include "evfuse/data.hpp"
#include "evfuse/model.hpp"
#include "evfuse/network.hpp"

namespace evfuse {

/// Which inputs a plain classifier sees: both modalities concatenated, or
/// one modality alone.
enum class BaselineInput { kConcat, kFirstOnly, kSecondOnly };

/// Dense tanh network with a softmax output trained by cross-entropy alone:
/// no evidential heads, no fusion, no ranking term.
class BaselineModel {
 public:
  BaselineModel(const ModelConfig& config, BaselineInput input, std::uint64_t seed);

  BaselineInput input() const { return input_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::vector<double> features(const Sample& sample) const;
  std::vector<double> logits(const Sample& sample) const;

  /// Mean cross-entropy over `batch` and its gradient.
  double loss_and_gradient(std::span<const Sample> batch, std::vector<double>& grad) const;

 private:
  ModelConfig config_;
  BaselineInput input_;
  MlpLayout layout_;
  std::vector<double> values_;
};

struct BaselineTrainResult {
  BaselineModel model;
  std::vector<double> val_acc;
  int best_epoch = 0;
};

/// Adam with the same schedule and checkpoint rule as the evidential model.
BaselineTrainResult train_baseline(const TrainConfig& config, const ModelConfig& model,
                                   BaselineInput input, const Dataset& dataset);

}  // namespace evfuse
