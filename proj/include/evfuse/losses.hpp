#pragma once

#include <array>
#include <span>

#include "evfuse/evidential.hpp"

namespace evfuse {

inline constexpr int kModalities = 2;

/// Balance factors of the training objective.
struct LossWeights {
  double lambda_m = 0.01;
  double lambda_f = 0.5;
  double lambda_c = 10.0;

  bool operator==(const LossWeights&) const = default;
};

/// Which objective terms participate. Used by the loss-term ablation and the
/// per-term gradient check; everything on is the full objective.
struct LossTerms {
  bool modality = true;
  bool fused = true;
  bool ranking = true;

  bool operator==(const LossTerms&) const = default;
};

struct LossBreakdown {
  std::array<double, kModalities> per_modality_nig{};
  double fused_st = 0.0;
  double ranking = 0.0;
  double total = 0.0;
  double lambda_m = 0.0;
  double lambda_f = 0.0;
  double lambda_c = 0.0;
};

/// Negative log marginal likelihood of y under the NIG prior.
double nig_nll(const NIGParams& p, double y);

/// alpha + delta + 1 / beta.
double evidence(const NIGParams& p);

/// -log softmax(class_means)[label]. Throws std::out_of_range on a bad label.
double cross_entropy(std::span<const double> class_means, int label);

/// Sum over classes of the NIG NLL against the one-hot target, plus
/// lambda_m * CE(gamma) * mean class evidence.
double modality_loss(std::span<const NIGParams> heads, int label, double lambda_m);

/// Negative log density of the fused Student's t at y.
double fused_st_nll(const StudentT& st, double y);

/// Sum over classes of the fused St NLL against the one-hot target, plus
/// lambda_f * CE(u_F).
double fused_loss(std::span<const StudentT> per_class, int label, double lambda_f);

/// Max softmax probability.
double confidence(std::span<const double> class_means);

/// Hinge penalty sum_m max(0, conf_m - conf_F), applied only when the fused
/// prediction is correct.
double ranking_loss(std::span<const double> conf_modalities, double conf_fused, bool fused_correct);

/// Single-sample objective. The fused St array and the two head arrays must
/// share one length K.
LossBreakdown total_loss(std::span<const NIGParams> heads_m1, std::span<const NIGParams> heads_m2,
                         std::span<const StudentT> fused, int label, const LossWeights& weights = {},
                         const LossTerms& terms = {});

}  // namespace evfuse
