#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace evfuse {

/// Placement of a dense tanh network inside a flat parameter vector. Hidden
/// layers apply tanh; the last layer is affine. Each layer stores its
/// row-major weight matrix (out x in) followed by its bias.
class MlpLayout {
 public:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  MlpLayout() = default;
  MlpLayout(int inputs, const std::vector<int>& hidden, int outputs, std::size_t offset);

  int inputs() const { return layers_.front().in; }
  int outputs() const { return layers_.back().out; }
  std::size_t offset() const { return offset_; }
  std::size_t size() const { return size_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::vector<Layer> layers_;
  std::size_t offset_ = 0;
  std::size_t size_ = 0;
};

/// Post-activation values of every layer, input first. Needed by backprop.
struct MlpTrace {
  std::vector<Eigen::VectorXd> activations;
};

Eigen::VectorXd mlp_forward(const MlpLayout& layout, std::span<const double> params,
                            std::span<const double> input, MlpTrace* trace = nullptr);

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
void mlp_backward(const MlpLayout& layout, std::span<const double> params, const MlpTrace& trace,
                  const Eigen::VectorXd& grad_output, std::span<double> grad);

/// Glorot-uniform weights, zero biases.
void mlp_initialize(const MlpLayout& layout, std::span<double> params, std::mt19937_64& rng);

/// Adam with bias correction.
class Adam {
 public:
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(std::span<double> params, std::span<const double> grad);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace evfuse
