#include "evfuse/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "evfuse/special.hpp"

namespace evfuse {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;
constexpr std::uint64_t kShuffleStream = 0x73687566;

std::vector<double> gammas_of(std::span<const NIGParams> heads) {
  std::vector<double> g;
  g.reserve(heads.size());
  for (const auto& h : heads) g.push_back(h.gamma);
  return g;
}

/// d(max softmax)/d(logits), scaled by `upstream`, accumulated into `out`.
void add_confidence_grad(std::span<const double> logits, double upstream, std::span<double> out) {
  const auto p = special::softmax(logits);
  const int j = argmax(logits);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] += upstream * p[j] * ((static_cast<int>(i) == j ? 1.0 : 0.0) - p[i]);
  }
}

/// d CE / d logits = softmax - onehot, scaled by `upstream`.
void add_cross_entropy_grad(std::span<const double> logits, int label, double upstream,
                            std::span<double> out) {
  const auto p = special::softmax(logits);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] += upstream * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));
  }
}

struct NigGrad {
  double gamma = 0.0, delta = 0.0, alpha = 0.0, beta = 0.0;
};

struct StGrad {
  double u = 0.0, sigma = 0.0, v = 0.0;
};

NigGrad nig_nll_grad(const NIGParams& p, double y) {
  const double omega = 2.0 * p.beta * (1.0 + p.delta);
  const double r = y - p.gamma;
  const double denom = r * r * p.delta + omega;
  NigGrad g;
  g.gamma = -(p.alpha + 0.5) * 2.0 * p.delta * r / denom;
  g.delta = -0.5 / p.delta - p.alpha / (1.0 + p.delta) +
            (p.alpha + 0.5) * (r * r + 2.0 * p.beta) / denom;
  g.alpha = std::log(denom) - std::log(omega) + special::digamma(p.alpha) -
            special::digamma(p.alpha + 0.5);
  g.beta = -p.alpha / p.beta + (p.alpha + 0.5) * 2.0 * (1.0 + p.delta) / denom;
  return g;
}

StGrad st_nll_grad(const StudentT& st, double y) {
  const double v = st.v();
  const double s = st.sigma();
  const double r = y - st.u();
  const double q = 1.0 + r * r / (v * s);
  StGrad g;
  g.u = -(v + 1.0) * r / (v * s * q);
  g.sigma = 0.5 / s - (v + 1.0) * r * r / (2.0 * v * s * s * q);
  g.v = 0.5 * special::digamma(0.5 * v) - 0.5 * special::digamma(0.5 * (v + 1.0)) + 0.5 / v +
        0.5 * std::log(q) - (v + 1.0) * r * r / (2.0 * v * v * s * q);
  return g;
}

struct Branches {
  std::array<MlpTrace, 2> traces;
  std::array<std::vector<double>, 2> raw;
};

struct SampleState {
  std::array<std::vector<NIGParams>, 2> heads;
  std::array<std::vector<StudentT>, 2> st;
  std::vector<StudentT> fused;
};

SampleState evaluate_heads(const ModelParams& params, const Sample& sample, Branches* branches) {
  const auto& cfg = params.config();
  if (static_cast<int>(sample.x1.size()) != cfg.d1 || static_cast<int>(sample.x2.size()) != cfg.d2) {
    throw std::invalid_argument("sample dimensions (" + std::to_string(sample.x1.size()) + ", " +
                                std::to_string(sample.x2.size()) + ") do not match the model (" +
                                std::to_string(cfg.d1) + ", " + std::to_string(cfg.d2) + ")");
  }
  SampleState s;
  for (int m = 0; m < 2; ++m) {
    const Modality mod = m == 0 ? Modality::kFirst : Modality::kSecond;
    const auto& x = m == 0 ? sample.x1 : sample.x2;
    MlpTrace* trace = branches ? &branches->traces[m] : nullptr;
    const Eigen::VectorXd raw = mlp_forward(params.branch(mod), params.values(), x, trace);
    std::vector<double> raw_vec(raw.data(), raw.data() + raw.size());
    s.heads[m] = activate_head(raw_vec);
    for (const auto& h : s.heads[m]) s.st[m].push_back(nig_to_student_t(h));
    if (branches) branches->raw[m] = std::move(raw_vec);
  }
  for (int k = 0; k < cfg.classes; ++k) s.fused.push_back(fuse_student_t(s.st[0][k], s.st[1][k]));
  return s;
}

/// Adds d(total)/d(raw head outputs) for one sample into raw_grad[m], each
/// entry pre-scaled by `scale`. Returns the sample's loss breakdown.
LossBreakdown sample_raw_gradient(const SampleState& s, const Branches& b, int label,
                                  const LossWeights& w, const LossTerms& terms, double scale,
                                  std::array<std::vector<double>, 2>& raw_grad) {
  const int K = static_cast<int>(s.fused.size());
  const LossBreakdown loss = total_loss(s.heads[0], s.heads[1], s.fused, label, w, terms);

  std::array<std::vector<NigGrad>, 2> nig_grad{std::vector<NigGrad>(K), std::vector<NigGrad>(K)};
  std::array<std::vector<double>, 2> gamma_grad{std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)};
  std::vector<StGrad> fused_grad(K);
  std::vector<double> uf_grad(K, 0.0);

  std::vector<double> uf(K);
  for (int k = 0; k < K; ++k) uf[k] = s.fused[k].u();

  if (terms.modality) {
    for (int m = 0; m < 2; ++m) {
      const auto& heads = s.heads[m];
      const auto g = gammas_of(heads);
      double eta = 0.0;
      for (const auto& h : heads) eta += evidence(h);
      eta /= K;
      const double ce = cross_entropy(g, label);
      for (int k = 0; k < K; ++k) {
        const NigGrad ng = nig_nll_grad(heads[k], k == label ? 1.0 : 0.0);
        auto& acc = nig_grad[m][k];
        acc.gamma += ng.gamma;
        acc.delta += ng.delta + w.lambda_m * ce / K;
        acc.alpha += ng.alpha + w.lambda_m * ce / K;
        acc.beta += ng.beta - w.lambda_m * ce / (K * heads[k].beta * heads[k].beta);
      }
      add_cross_entropy_grad(g, label, w.lambda_m * eta, gamma_grad[m]);
    }
  }

  if (terms.fused) {
    for (int k = 0; k < K; ++k) {
      const StGrad sg = st_nll_grad(s.fused[k], k == label ? 1.0 : 0.0);
      fused_grad[k].sigma += sg.sigma;
      fused_grad[k].v += sg.v;
      uf_grad[k] += sg.u;
    }
    add_cross_entropy_grad(uf, label, w.lambda_f, uf_grad);
  }

  if (terms.ranking && w.lambda_c != 0.0 && argmax(uf) == label) {
    const double conf_f = confidence(uf);
    for (int m = 0; m < 2; ++m) {
      const auto g = gammas_of(s.heads[m]);
      if (confidence(g) > conf_f) {
        add_confidence_grad(g, w.lambda_c, gamma_grad[m]);
        add_confidence_grad(uf, -w.lambda_c, uf_grad);
      }
    }
  }

  // Fusion: (u_F, sigma_F, v_F) per class back onto each modality's St.
  std::array<std::vector<StGrad>, 2> st_grad{std::vector<StGrad>(K), std::vector<StGrad>(K)};
  for (int k = 0; k < K; ++k) {
    const StudentT& s1 = s.st[0][k];
    const StudentT& s2 = s.st[1][k];
    const double vsum = s1.v() + s2.v();
    const double uF = s.fused[k].u();
    st_grad[0][k].u += uf_grad[k] * s1.v() / vsum;
    st_grad[1][k].u += uf_grad[k] * s2.v() / vsum;
    st_grad[0][k].v += uf_grad[k] * (s1.u() - uF) / vsum;
    st_grad[1][k].v += uf_grad[k] * (s2.u() - uF) / vsum;

    const int a = s1.v() <= s2.v() ? 0 : 1;
    const int bi = 1 - a;
    const StudentT& sa = s.st[a][k];
    const StudentT& sb = s.st[bi][k];
    const double va = sa.v(), vb = sb.v();
    const double ratio = vb * (va - 2.0) / (va * (vb - 2.0));
    const double dratio_dva = vb / (vb - 2.0) * 2.0 / (va * va);
    const double dratio_dvb = (va - 2.0) / va * (-2.0 / ((vb - 2.0) * (vb - 2.0)));
    const double gs = fused_grad[k].sigma;
    st_grad[a][k].sigma += 0.5 * gs;
    st_grad[bi][k].sigma += 0.5 * ratio * gs;
    st_grad[a][k].v += 0.5 * sb.sigma() * dratio_dva * gs + fused_grad[k].v;
    st_grad[bi][k].v += 0.5 * sb.sigma() * dratio_dvb * gs;
  }

  for (int m = 0; m < 2; ++m) {
    for (int k = 0; k < K; ++k) {
      const NIGParams& p = s.heads[m][k];
      const StGrad& sg = st_grad[m][k];
      NigGrad& ng = nig_grad[m][k];
      // u = gamma, sigma = beta (1 + delta) / (delta alpha), v = 2 alpha.
      ng.gamma += sg.u + gamma_grad[m][k];
      ng.beta += sg.sigma * (1.0 + p.delta) / (p.delta * p.alpha);
      ng.delta += sg.sigma * (-p.beta / (p.alpha * p.delta * p.delta));
      ng.alpha += sg.sigma * (-s.st[m][k].sigma() / p.alpha) + 2.0 * sg.v;

      const auto& raw = b.raw[m];
      auto& out = raw_grad[m];
      out[k] += scale * ng.gamma;
      out[K + k] += scale * ng.delta * special::sigmoid(raw[K + k]);
      out[2 * K + k] += scale * ng.alpha * special::sigmoid(raw[2 * K + k]);
      out[3 * K + k] += scale * ng.beta * special::sigmoid(raw[3 * K + k]);
    }
  }
  return loss;
}

void accumulate(LossBreakdown& acc, const LossBreakdown& x, double scale) {
  acc.per_modality_nig[0] += scale * x.per_modality_nig[0];
  acc.per_modality_nig[1] += scale * x.per_modality_nig[1];
  acc.fused_st += scale * x.fused_st;
  acc.ranking += scale * x.ranking;
  acc.total += scale * x.total;
  acc.lambda_m = x.lambda_m;
  acc.lambda_f = x.lambda_f;
  acc.lambda_c = x.lambda_c;
}

double validation_accuracy(const ModelParams& params, std::span<const Sample> samples) {
  int correct = 0;
  for (const auto& s : samples) correct += forward(params, s).prediction.predicted_class == s.label;
  return samples.empty() ? 0.0 : static_cast<double>(correct) / samples.size();
}

}  // namespace

void ModelConfig::validate() const {
  if (classes < 2) throw std::invalid_argument("model needs at least two classes");
  if (d1 < 1 || d2 < 1) throw std::invalid_argument("model input dimensions must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be >= 1");
  }
}

void TrainConfig::validate() const {
  if (!(weights.lambda_m >= 0.0) || !(weights.lambda_f >= 0.0) || !(weights.lambda_c >= 0.0)) {
    throw std::invalid_argument("loss weights must be >= 0");
  }
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

ModelParams::ModelParams(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  branches_[0] = MlpLayout(config_.d1, config_.hidden, 4 * config_.classes, 0);
  branches_[1] = MlpLayout(config_.d2, config_.hidden, 4 * config_.classes, branches_[0].size());
  values_.assign(branches_[0].size() + branches_[1].size(), 0.0);
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  std::mt19937_64 rng(derive_seed(seed, kInitStream));
  mlp_initialize(p.branches_[0], p.values_, rng);
  mlp_initialize(p.branches_[1], p.values_, rng);
  return p;
}

std::vector<NIGParams> activate_head(std::span<const double> raw) {
  if (raw.size() % 4 != 0 || raw.empty()) {
    throw std::invalid_argument("evidential head output must have 4K entries");
  }
  const std::size_t K = raw.size() / 4;
  std::vector<NIGParams> heads(K);
  for (std::size_t k = 0; k < K; ++k) {
    heads[k].gamma = raw[k];
    heads[k].delta = special::softplus(raw[K + k]) + kEvidenceFloor;
    heads[k].alpha = special::softplus(raw[2 * K + k]) + 1.0 + kEvidenceFloor;
    heads[k].beta = special::softplus(raw[3 * K + k]) + kEvidenceFloor;
  }
  return heads;
}

ForwardOutput forward(const ModelParams& params, const Sample& sample) {
  SampleState s = evaluate_heads(params, sample, nullptr);
  ForwardOutput out;
  out.heads_m1 = std::move(s.heads[0]);
  out.heads_m2 = std::move(s.heads[1]);
  out.fused = std::move(s.fused);
  out.prediction.class_means.reserve(out.fused.size());
  for (const auto& f : out.fused) out.prediction.class_means.push_back(f.u());
  out.prediction.predicted_class = argmax(out.prediction.class_means);
  const int k = out.prediction.predicted_class;
  out.prediction.uncertainty = st_variance(out.fused[k]);
  out.prediction.confidence = confidence(out.prediction.class_means);

  const std::array<const std::vector<NIGParams>*, 2> heads{&out.heads_m1, &out.heads_m2};
  for (int m = 0; m < 2; ++m) {
    const auto g = gammas_of(*heads[m]);
    out.modality_predicted[m] = argmax(g);
    out.modality_confidence[m] = confidence(g);
    out.uncertainties[m].aleatoric = aleatoric((*heads[m])[k]);
    out.uncertainties[m].epistemic = epistemic((*heads[m])[k]);
    out.uncertainties[m].fused_uncertainty = out.prediction.uncertainty;
  }
  out.weights = confidence_weights(2.0 * out.heads_m1[k].alpha, 2.0 * out.heads_m2[k].alpha);
  return out;
}

LossBreakdown batch_loss(const ModelParams& params, std::span<const Sample> batch,
                         const LossWeights& weights, const LossTerms& terms) {
  if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
  LossBreakdown acc;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    const SampleState s = evaluate_heads(params, sample, nullptr);
    accumulate(acc, total_loss(s.heads[0], s.heads[1], s.fused, sample.label, weights, terms), scale);
  }
  return acc;
}

LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const Sample> batch,
                                  const LossWeights& weights, const LossTerms& terms) {
  if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
  const int K = params.config().classes;
  LossAndGradient out;
  out.gradient.assign(params.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Branches b;
  for (const auto& sample : batch) {
    const SampleState s = evaluate_heads(params, sample, &b);
    std::array<std::vector<double>, 2> raw_grad{std::vector<double>(4 * K, 0.0),
                                                std::vector<double>(4 * K, 0.0)};
    accumulate(out.loss, sample_raw_gradient(s, b, sample.label, weights, terms, scale, raw_grad), scale);
    for (int m = 0; m < 2; ++m) {
      const Modality mod = m == 0 ? Modality::kFirst : Modality::kSecond;
      const Eigen::Map<const Eigen::VectorXd> g(raw_grad[m].data(), raw_grad[m].size());
      mlp_backward(params.branch(mod), params.values(), b.traces[m], g, out.gradient);
    }
  }
  return out;
}

std::vector<double> backward(const ModelParams& params, std::span<const Sample> batch,
                             const TrainConfig& config) {
  return loss_and_gradient(params, batch, config.weights, config.terms).gradient;
}

ModelParams train_steps(const TrainConfig& config, ModelParams params, std::span<const Sample> data,
                        int steps) {
  config.validate();
  Adam adam(params.size(), config.learning_rate);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, kShuffleStream));
  std::size_t cursor = order.size();
  std::vector<Sample> batch;
  for (int step = 0; step < steps; ++step) {
    batch.clear();
    while (batch.size() < static_cast<std::size_t>(config.batch_size) && batch.size() < data.size()) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }
    const auto lg = loss_and_gradient(params, batch, config.weights, config.terms);
    adam.step(params.values(), lg.gradient);
  }
  return params;
}

TrainResult train(const TrainConfig& config, const ModelConfig& model, const Dataset& dataset) {
  config.validate();
  if (model.d1 != dataset.config.d1 || model.d2 != dataset.config.d2 ||
      model.classes != dataset.config.classes) {
    throw std::invalid_argument("model configuration does not match the dataset");
  }
  if (dataset.train.empty() || dataset.val.empty()) {
    throw std::invalid_argument("training needs nonempty train and validation splits");
  }

  ModelParams params = ModelParams::initialize(model, config.seed);
  Adam adam(params.size(), config.learning_rate);
  std::mt19937_64 rng(derive_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result{params, {}, 0, -1.0};
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_loss;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset.train[order[i]]);
      const auto lg = loss_and_gradient(params, batch, config.weights, config.terms);
      accumulate(epoch_loss, lg.loss, static_cast<double>(batch.size()) / order.size());
      adam.step(params.values(), lg.gradient);
    }
    const double val_acc = validation_accuracy(params, dataset.val);
    result.log.push_back({epoch, epoch_loss, val_acc});
    if (val_acc > result.best_val_acc) {
      result.best_val_acc = val_acc;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

double gradient_relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckScaleFloor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(const ModelParams& params, std::span<const Sample> batch,
                               const LossWeights& weights, double h) {
  GradCheckReport report;
  report.parameters = params.size();

  for (const auto& sample : batch) {
    const auto out = forward(params, sample);
    if (out.prediction.predicted_class != sample.label) continue;
    if (out.modality_confidence[0] > out.prediction.confidence ||
        out.modality_confidence[1] > out.prediction.confidence) {
      ++report.active_hinge_samples;
    }
  }

  struct Variant {
    std::string name;
    LossWeights weights;
    LossTerms terms;
  };
  std::vector<Variant> variants{
      {"total", weights, {true, true, true}},
      {"modality_nig", weights, {true, false, false}},
      {"fused_st", weights, {false, true, false}},
      {"ranking", weights, {false, false, true}},
  };

  ModelParams probe = params;
  for (const auto& variant : variants) {
    const auto analytic = loss_and_gradient(params, batch, variant.weights, variant.terms).gradient;
    GradCheckTerm term{variant.name, 0.0, 0};
    double worst_a = 0.0, worst_n = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double original = probe.values()[i];
      probe.values()[i] = original + h;
      const double up = batch_loss(probe, batch, variant.weights, variant.terms).total;
      probe.values()[i] = original - h;
      const double down = batch_loss(probe, batch, variant.weights, variant.terms).total;
      probe.values()[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double err = gradient_relative_error(analytic[i], numeric);
      if (err > term.max_rel_error) {
        term.max_rel_error = err;
        term.worst_index = i;
        worst_a = analytic[i];
        worst_n = numeric;
      }
    }
    if (variant.name == "total") {
      report.max_rel_error = term.max_rel_error;
      report.worst_index = term.worst_index;
      report.analytic_at_worst = worst_a;
      report.numeric_at_worst = worst_n;
    }
    report.terms.push_back(term);
  }
  return report;
}

}  // namespace evfuse
