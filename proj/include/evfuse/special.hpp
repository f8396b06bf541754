#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace evfuse::special {

// Boost.Math backs both; unlike std::lgamma it does not touch the global
// signgam, so these are safe to call from concurrent workers.
double log_gamma(double x);
double digamma(double x);

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> logits);

double log_sum_exp(std::span<const double> logits);

}  // namespace evfuse::special
