#pragma once

#include <span>
#include <utility>
#include <vector>

#include "evfuse/evidential.hpp"

namespace evfuse {

/// Per-modality confidences proportional to degrees of freedom.
struct FusionWeights {
  double c1 = 0.5;
  double c2 = 0.5;
};

struct FusedPrediction {
  std::vector<double> class_means;
  int predicted_class = 0;
  /// Variance of the fused distribution of the predicted class.
  double uncertainty = 0.0;
  /// Max softmax probability over class_means.
  double confidence = 0.0;
};

FusionWeights confidence_weights(double v1, double v2);

/// Mixture-of-t fusion of two Student's t distributions into one.
///
/// The fused dof is the smaller of the two (the heavier tail survives). The
/// location is the dof-weighted average with weights taken in argument order.
/// The scale pulls the higher-dof scale onto the lower-dof variance footing:
///   sigma_F = 0.5 (sigma_a + v_b (v_a - 2) / (v_a (v_b - 2)) sigma_b)
/// with v_a <= v_b; on a dof tie `st1` plays the role of a.
StudentT fuse_student_t(const StudentT& st1, const StudentT& st2);

struct PerClassFusion {
  std::vector<StudentT> fused;
  FusedPrediction prediction;
};

/// Fuses class k of modality 1 with class k of modality 2 for every k.
/// Throws std::invalid_argument if the arrays differ in length or K < 2.
PerClassFusion fuse_per_class(std::span<const NIGParams> m1, std::span<const NIGParams> m2);

/// Index of the largest value; the first one wins ties.
int argmax(std::span<const double> values);

}  // namespace evfuse
