#include "evfuse/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "evfuse/fusion.hpp"
#include "evfuse/special.hpp"

namespace evfuse {

namespace {

double onehot(std::size_t k, int label) { return static_cast<int>(k) == label ? 1.0 : 0.0; }

void check_label(std::size_t classes, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw std::out_of_range("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(classes) + ")");
  }
}

}  // namespace

double nig_nll(const NIGParams& p, double y) {
  const double omega = 2.0 * p.beta * (1.0 + p.delta);
  const double r = y - p.gamma;
  return 0.5 * std::log(std::numbers::pi / p.delta) - p.alpha * std::log(omega) +
         (p.alpha + 0.5) * std::log(r * r * p.delta + omega) + special::log_gamma(p.alpha) -
         special::log_gamma(p.alpha + 0.5);
}

double evidence(const NIGParams& p) { return p.alpha + p.delta + 1.0 / p.beta; }

double cross_entropy(std::span<const double> class_means, int label) {
  check_label(class_means.size(), label);
  return special::log_sum_exp(class_means) - class_means[label];
}

double modality_loss(std::span<const NIGParams> heads, int label, double lambda_m) {
  check_label(heads.size(), label);
  double nll = 0.0;
  double eta = 0.0;
  std::vector<double> gammas;
  gammas.reserve(heads.size());
  for (std::size_t k = 0; k < heads.size(); ++k) {
    nll += nig_nll(heads[k], onehot(k, label));
    eta += evidence(heads[k]);
    gammas.push_back(heads[k].gamma);
  }
  eta /= static_cast<double>(heads.size());
  return nll + lambda_m * cross_entropy(gammas, label) * eta;
}

double fused_st_nll(const StudentT& st, double y) {
  const double v = st.v();
  const double r = y - st.u();
  return 0.5 * std::log(st.sigma()) + special::log_gamma(0.5 * v) -
         special::log_gamma(0.5 * (v + 1.0)) + 0.5 * std::log(v * std::numbers::pi) +
         0.5 * (v + 1.0) * std::log1p(r * r / (v * st.sigma()));
}

double fused_loss(std::span<const StudentT> per_class, int label, double lambda_f) {
  check_label(per_class.size(), label);
  double nll = 0.0;
  std::vector<double> means;
  means.reserve(per_class.size());
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    nll += fused_st_nll(per_class[k], onehot(k, label));
    means.push_back(per_class[k].u());
  }
  return nll + lambda_f * cross_entropy(means, label);
}

double confidence(std::span<const double> class_means) {
  const double lse = special::log_sum_exp(class_means);
  double hi = class_means[0];
  for (double z : class_means) hi = std::max(hi, z);
  return std::exp(hi - lse);
}

double ranking_loss(std::span<const double> conf_modalities, double conf_fused, bool fused_correct) {
  if (!fused_correct) return 0.0;
  double penalty = 0.0;
  for (double c : conf_modalities) penalty += std::max(0.0, c - conf_fused);
  return penalty;
}

LossBreakdown total_loss(std::span<const NIGParams> heads_m1, std::span<const NIGParams> heads_m2,
                         std::span<const StudentT> fused, int label, const LossWeights& weights,
                         const LossTerms& terms) {
  if (heads_m1.size() != heads_m2.size() || heads_m1.size() != fused.size()) {
    throw std::invalid_argument("total_loss: class counts differ between heads and fused output");
  }
  LossBreakdown out;
  out.lambda_m = weights.lambda_m;
  out.lambda_f = weights.lambda_f;
  out.lambda_c = weights.lambda_c;

  if (terms.modality) {
    out.per_modality_nig[0] = modality_loss(heads_m1, label, weights.lambda_m);
    out.per_modality_nig[1] = modality_loss(heads_m2, label, weights.lambda_m);
  }
  if (terms.fused) out.fused_st = fused_loss(fused, label, weights.lambda_f);

  if (terms.ranking) {
    std::vector<double> g1, g2, uf;
    for (std::size_t k = 0; k < fused.size(); ++k) {
      g1.push_back(heads_m1[k].gamma);
      g2.push_back(heads_m2[k].gamma);
      uf.push_back(fused[k].u());
    }
    const std::array<double, kModalities> conf{confidence(g1), confidence(g2)};
    out.ranking = ranking_loss(conf, confidence(uf), argmax(uf) == label);
  }

  out.total = out.per_modality_nig[0] + out.per_modality_nig[1] + out.fused_st +
              weights.lambda_c * out.ranking;
  return out;
}

}  // namespace evfuse
