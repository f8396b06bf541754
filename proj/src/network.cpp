#include "evfuse/network.hpp"

#include <cmath>
#include <stdexcept>

namespace evfuse {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

MlpLayout::MlpLayout(int inputs, const std::vector<int>& hidden, int outputs, std::size_t offset)
    : offset_(offset) {
  if (inputs < 1 || outputs < 1) throw std::invalid_argument("MLP needs at least one input and output");
  std::size_t cursor = offset;
  int prev = inputs;
  auto add = [&](int width) {
    if (width < 1) throw std::invalid_argument("MLP layer width must be >= 1");
    Layer layer{prev, width, cursor, cursor + static_cast<std::size_t>(prev) * width};
    cursor = layer.bias_offset + width;
    layers_.push_back(layer);
    prev = width;
  };
  for (int width : hidden) add(width);
  add(outputs);
  size_ = cursor - offset;
}

Eigen::VectorXd mlp_forward(const MlpLayout& layout, std::span<const double> params,
                            std::span<const double> input, MlpTrace* trace) {
  if (static_cast<int>(input.size()) != layout.inputs()) {
    throw std::invalid_argument("MLP input has " + std::to_string(input.size()) + " features, expected " +
                                std::to_string(layout.inputs()));
  }
  Eigen::VectorXd x = ConstVectorMap(input.data(), input.size());
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(x);
  }
  const auto& layers = layout.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    ConstMatrixMap w(params.data() + l.weight_offset, l.out, l.in);
    ConstVectorMap b(params.data() + l.bias_offset, l.out);
    Eigen::VectorXd z = w * x + b;
    if (i + 1 < layers.size()) z = z.array().tanh();
    x = std::move(z);
    if (trace) trace->activations.push_back(x);
  }
  return x;
}

void mlp_backward(const MlpLayout& layout, std::span<const double> params, const MlpTrace& trace,
                  const Eigen::VectorXd& grad_output, std::span<double> grad) {
  const auto& layers = layout.layers();
  Eigen::VectorXd delta = grad_output;  // d loss / d pre-activation of the current layer
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& l = layers[i];
    const Eigen::VectorXd& in = trace.activations[i];
    MatrixMap gw(grad.data() + l.weight_offset, l.out, l.in);
    VectorMap gb(grad.data() + l.bias_offset, l.out);
    gw.noalias() += delta * in.transpose();
    gb += delta;
    if (i == 0) break;
    ConstMatrixMap w(params.data() + l.weight_offset, l.out, l.in);
    Eigen::VectorXd upstream = w.transpose() * delta;
    // `in` is a tanh output here, so d tanh = 1 - in^2.
    delta = upstream.array() * (1.0 - in.array().square());
  }
}

void mlp_initialize(const MlpLayout& layout, std::span<double> params, std::mt19937_64& rng) {
  for (const auto& l : layout.layers()) {
    const double limit = std::sqrt(6.0 / (l.in + l.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t j = 0; j < static_cast<std::size_t>(l.in) * l.out; ++j) {
      params[l.weight_offset + j] = dist(rng);
    }
    for (int j = 0; j < l.out; ++j) params[l.bias_offset + j] = 0.0;
  }
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace evfuse
