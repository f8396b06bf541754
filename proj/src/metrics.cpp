#include "evfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evfuse/special.hpp"

namespace evfuse {

namespace {

void require_nonempty(std::span<const EvalRecord> records) {
  if (records.empty()) throw std::invalid_argument("metrics need at least one record");
}

template <typename F>
double mean_of(std::span<const EvalRecord> records, F&& f) {
  double acc = 0.0;
  for (const auto& r : records) acc += f(r);
  return acc / static_cast<double>(records.size());
}

}  // namespace

double accuracy(std::span<const EvalRecord> records) {
  require_nonempty(records);
  return mean_of(records, [](const EvalRecord& r) { return r.predicted == r.label ? 1.0 : 0.0; });
}

double cohen_kappa(std::span<const EvalRecord> records) {
  require_nonempty(records);
  int classes = 0;
  for (const auto& r : records) classes = std::max({classes, r.label + 1, r.predicted + 1});
  std::vector<double> label_count(classes, 0.0), pred_count(classes, 0.0);
  double agree = 0.0;
  for (const auto& r : records) {
    label_count[r.label] += 1.0;
    pred_count[r.predicted] += 1.0;
    agree += r.label == r.predicted;
  }
  const double n = static_cast<double>(records.size());
  const double p_o = agree / n;
  double p_e = 0.0;
  for (int k = 0; k < classes; ++k) p_e += (label_count[k] / n) * (pred_count[k] / n);
  if (p_e >= 1.0) return 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

double ece(std::span<const EvalRecord> records, int bins) {
  require_nonempty(records);
  if (bins < 1) throw std::invalid_argument("ECE needs at least one bin");
  std::vector<double> count(bins, 0.0), correct(bins, 0.0), conf(bins, 0.0);
  for (const auto& r : records) {
    const int b = std::clamp(static_cast<int>(std::floor(r.confidence * bins)), 0, bins - 1);
    count[b] += 1.0;
    correct[b] += r.predicted == r.label;
    conf[b] += r.confidence;
  }
  double total = 0.0;
  const double n = static_cast<double>(records.size());
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0.0) continue;
    total += (count[b] / n) * std::abs(correct[b] / count[b] - conf[b] / count[b]);
  }
  return total;
}

double aurc(std::span<const EvalRecord> records) {
  require_nonempty(records);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].confidence > records[b].confidence;
  });
  double errors = 0.0;
  double area = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& r = records[order[k]];
    errors += r.predicted != r.label;
    area += errors / static_cast<double>(k + 1);
  }
  return area / static_cast<double>(records.size());
}

Histogram density_summary(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw std::invalid_argument("histogram needs at least two edges");
  Histogram h{{edges.begin(), edges.end()}, std::vector<double>(edges.size() - 1, 0.0)};
  if (values.empty()) return h;
  for (double v : values) {
    // upper_bound gives the first edge > v, so v sits in the bin just left of it.
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    const auto idx = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
    const auto bin = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(h.mass.size()) - 1);
    h.mass[bin] += 1.0;
  }
  for (auto& m : h.mass) m /= static_cast<double>(values.size());
  return h;
}

std::vector<double> confidence_bin_edges() {
  std::vector<double> edges(21);
  for (int i = 0; i <= 20; ++i) edges[i] = i / 20.0;
  return edges;
}

std::vector<double> uncertainty_bin_edges() {
  std::vector<double> edges(25);
  for (int i = 0; i <= 24; ++i) edges[i] = std::pow(10.0, -4.0 + i / 4.0);
  return edges;
}

EvalReport summarize(std::span<const EvalRecord> records, int ece_bins) {
  require_nonempty(records);
  EvalReport rep;
  rep.acc = accuracy(records);
  rep.kappa = cohen_kappa(records);
  rep.ece = ece(records, ece_bins);
  rep.aurc = aurc(records);
  rep.mean_confidence = mean_of(records, [](const EvalRecord& r) { return r.confidence; });
  rep.mean_aleatoric = mean_of(records, [](const EvalRecord& r) { return r.aleatoric; });
  rep.mean_epistemic = mean_of(records, [](const EvalRecord& r) { return r.epistemic; });
  rep.mean_fused_uncertainty = mean_of(records, [](const EvalRecord& r) { return r.fused_uncertainty; });
  for (int m = 0; m < 2; ++m) {
    rep.modality_acc[m] = mean_of(records, [m](const EvalRecord& r) {
      return r.modality_predicted[m] == r.label ? 1.0 : 0.0;
    });
    rep.modality_mean_confidence[m] =
        mean_of(records, [m](const EvalRecord& r) { return r.modality_confidence[m]; });
    rep.modality_mean_epistemic[m] =
        mean_of(records, [m](const EvalRecord& r) { return r.modality_epistemic[m]; });
  }
  std::vector<double> conf, unc;
  for (const auto& r : records) {
    conf.push_back(r.confidence);
    unc.push_back(r.fused_uncertainty);
  }
  rep.confidence_density = density_summary(conf, confidence_bin_edges());
  rep.uncertainty_density = density_summary(unc, uncertainty_bin_edges());
  return rep;
}

std::vector<EvalRecord> evaluate(const ModelParams& params, std::span<const Sample> samples) {
  std::vector<EvalRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) {
    const auto out = forward(params, s);
    EvalRecord r;
    r.label = s.label;
    r.predicted = out.prediction.predicted_class;
    r.confidence = out.prediction.confidence;
    const double c1 = out.weights.c1, c2 = out.weights.c2;
    r.aleatoric = c1 * out.uncertainties[0].aleatoric + c2 * out.uncertainties[1].aleatoric;
    r.epistemic = c1 * out.uncertainties[0].epistemic + c2 * out.uncertainties[1].epistemic;
    r.fused_uncertainty = out.prediction.uncertainty;
    r.modality_predicted = out.modality_predicted;
    r.modality_confidence = out.modality_confidence;
    r.modality_epistemic = {out.uncertainties[0].epistemic, out.uncertainties[1].epistemic};
    records.push_back(r);
  }
  return records;
}

std::vector<EvalRecord> evaluate(const BaselineModel& model, std::span<const Sample> samples) {
  std::vector<EvalRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) {
    const auto z = model.logits(s);
    EvalRecord r;
    r.label = s.label;
    r.predicted = argmax(z);
    r.confidence = confidence(z);
    r.modality_predicted = {r.predicted, r.predicted};
    r.modality_confidence = {r.confidence, r.confidence};
    records.push_back(r);
  }
  return records;
}

}  // namespace evfuse
