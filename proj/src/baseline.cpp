#include "evfuse/baseline.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "evfuse/fusion.hpp"
#include "evfuse/special.hpp"

namespace evfuse {

namespace {

constexpr std::uint64_t kBaselineInitStream = 0x62617365;
constexpr std::uint64_t kBaselineShuffleStream = 0x62736866;

int input_width(const ModelConfig& c, BaselineInput input) {
  switch (input) {
    case BaselineInput::kConcat: return c.d1 + c.d2;
    case BaselineInput::kFirstOnly: return c.d1;
    case BaselineInput::kSecondOnly: return c.d2;
  }
  throw std::invalid_argument("unknown baseline input");
}

double accuracy_of(const BaselineModel& model, std::span<const Sample> samples) {
  int correct = 0;
  for (const auto& s : samples) correct += argmax(model.logits(s)) == s.label;
  return samples.empty() ? 0.0 : static_cast<double>(correct) / samples.size();
}

}  // namespace

BaselineModel::BaselineModel(const ModelConfig& config, BaselineInput input, std::uint64_t seed)
    : config_(config),
      input_(input),
      layout_(input_width(config, input), config.hidden, config.classes, 0),
      values_(layout_.size(), 0.0) {
  std::mt19937_64 rng(derive_seed(seed, kBaselineInitStream));
  mlp_initialize(layout_, values_, rng);
}

std::vector<double> BaselineModel::features(const Sample& sample) const {
  if (static_cast<int>(sample.x1.size()) != config_.d1 || static_cast<int>(sample.x2.size()) != config_.d2) {
    throw std::invalid_argument("sample dimensions do not match the baseline model");
  }
  std::vector<double> x;
  if (input_ != BaselineInput::kSecondOnly) x.insert(x.end(), sample.x1.begin(), sample.x1.end());
  if (input_ != BaselineInput::kFirstOnly) x.insert(x.end(), sample.x2.begin(), sample.x2.end());
  return x;
}

std::vector<double> BaselineModel::logits(const Sample& sample) const {
  const Eigen::VectorXd z = mlp_forward(layout_, values_, features(sample));
  return {z.data(), z.data() + z.size()};
}

double BaselineModel::loss_and_gradient(std::span<const Sample> batch, std::vector<double>& grad) const {
  grad.assign(values_.size(), 0.0);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  MlpTrace trace;
  for (const auto& s : batch) {
    const Eigen::VectorXd z = mlp_forward(layout_, values_, features(s), &trace);
    const std::vector<double> logits(z.data(), z.data() + z.size());
    loss += scale * (special::log_sum_exp(logits) - logits[s.label]);
    const auto p = special::softmax(logits);
    Eigen::VectorXd g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      g[i] = scale * (p[i] - (static_cast<int>(i) == s.label ? 1.0 : 0.0));
    }
    mlp_backward(layout_, values_, trace, g, grad);
  }
  return loss;
}

BaselineTrainResult train_baseline(const TrainConfig& config, const ModelConfig& model,
                                   BaselineInput input, const Dataset& dataset) {
  config.validate();
  if (model.d1 != dataset.config.d1 || model.d2 != dataset.config.d2 ||
      model.classes != dataset.config.classes) {
    throw std::invalid_argument("baseline configuration does not match the dataset");
  }
  BaselineModel current(model, input, config.seed);
  BaselineTrainResult result{current, {}, 0};
  double best = -1.0;

  Adam adam(current.values().size(), config.learning_rate);
  std::mt19937_64 rng(derive_seed(config.seed, kBaselineShuffleStream));
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> batch;
  std::vector<double> grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset.train[order[i]]);
      current.loss_and_gradient(batch, grad);
      adam.step(current.values(), grad);
    }
    const double acc = accuracy_of(current, dataset.val);
    result.val_acc.push_back(acc);
    if (acc > best) {
      best = acc;
      result.best_epoch = epoch;
      result.model = current;
    }
  }
  return result;
}

}  // namespace evfuse
