#include "evfuse/fusion.hpp"

#include <stdexcept>

#include "evfuse/losses.hpp"

namespace evfuse {

FusionWeights confidence_weights(double v1, double v2) {
  if (!(v1 > 2.0) || !(v2 > 2.0)) {
    throw std::domain_error("confidence weights need degrees of freedom > 2");
  }
  const double total = v1 + v2;
  return {v1 / total, v2 / total};
}

StudentT fuse_student_t(const StudentT& st1, const StudentT& st2) {
  const auto w = confidence_weights(st1.v(), st2.v());
  const double u = w.c1 * st1.u() + w.c2 * st2.u();

  const bool first_heavier = st1.v() <= st2.v();
  const StudentT& a = first_heavier ? st1 : st2;
  const StudentT& b = first_heavier ? st2 : st1;
  // 0.5 (sigma_a + ratio sigma_b) over one common denominator: a single
  // final rounding, exact for small integer inputs.
  const double sigma = (a.sigma() * a.v() * (b.v() - 2.0) + b.v() * (a.v() - 2.0) * b.sigma()) /
                       (2.0 * a.v() * (b.v() - 2.0));
  return StudentT(u, sigma, a.v());
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

PerClassFusion fuse_per_class(std::span<const NIGParams> m1, std::span<const NIGParams> m2) {
  if (m1.size() != m2.size()) {
    throw std::invalid_argument("per-class fusion needs the same number of classes per modality");
  }
  if (m1.size() < 2) throw std::invalid_argument("per-class fusion needs at least two classes");

  PerClassFusion out;
  out.fused.reserve(m1.size());
  out.prediction.class_means.reserve(m1.size());
  for (std::size_t k = 0; k < m1.size(); ++k) {
    out.fused.push_back(fuse_student_t(nig_to_student_t(m1[k]), nig_to_student_t(m2[k])));
    out.prediction.class_means.push_back(out.fused.back().u());
  }
  auto& pred = out.prediction;
  pred.predicted_class = argmax(pred.class_means);
  pred.uncertainty = st_variance(out.fused[pred.predicted_class]);
  pred.confidence = confidence(pred.class_means);
  return out;
}

}  // namespace evfuse
