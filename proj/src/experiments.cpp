#include "evfuse/experiments.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "evfuse/format.hpp"

namespace evfuse {

namespace {

// Scalar fields of EvalReport, in a fixed order, for averaging.
template <class F>
void for_each_scalar(EvalReport& r, F&& f) {
  f(r.acc);
  f(r.kappa);
  f(r.ece);
  f(r.aurc);
  f(r.mean_confidence);
  f(r.mean_aleatoric);
  f(r.mean_epistemic);
  f(r.mean_fused_uncertainty);
  for (int m = 0; m < 2; ++m) {
    f(r.modality_acc[m]);
    f(r.modality_mean_confidence[m]);
    f(r.modality_mean_epistemic[m]);
  }
}

std::vector<double> flatten(EvalReport r) {
  std::vector<double> out;
  for_each_scalar(r, [&](double& v) { out.push_back(v); });
  return out;
}

EvalReport unflatten(EvalReport shape, const std::vector<double>& values) {
  std::size_t i = 0;
  for_each_scalar(shape, [&](double& v) { v = values[i++]; });
  return shape;
}

// Mean and (population) standard deviation over repeats. Histograms are
// taken from the first report.
std::pair<EvalReport, EvalReport> mean_and_std(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to aggregate");
  const auto n = static_cast<double>(reports.size());
  std::vector<double> mean(flatten(reports.front()).size(), 0.0);
  for (const auto& r : reports) {
    const auto v = flatten(r);
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i] / n;
  }
  std::vector<double> var(mean.size(), 0.0);
  for (const auto& r : reports) {
    const auto v = flatten(r);
    for (std::size_t i = 0; i < v.size(); ++i) var[i] += (v[i] - mean[i]) * (v[i] - mean[i]) / n;
  }
  for (auto& v : var) v = std::sqrt(v);
  EvalReport sd = unflatten(reports.front(), var);
  sd.confidence_density = {};
  sd.uncertainty_density = {};
  return {unflatten(reports.front(), mean), sd};
}

EvalReport difference(const EvalReport& a, const EvalReport& b) {
  auto x = flatten(a);
  const auto y = flatten(b);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= y[i];
  EvalReport out = unflatten(EvalReport{}, x);
  return out;
}

template <class Model>
EvalReport corrupted_impl(const Model& model, std::span<const Sample> samples, Modality which,
                          double sigma, int repeats, std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (sigma == 0.0) return summarize(evaluate(model, samples));
  std::vector<EvalReport> reports;
  for (int r = 0; r < repeats; ++r) {
    const auto noisy = corrupt_split(samples, which, sigma, derive_seed(seed, static_cast<std::uint64_t>(r)));
    reports.push_back(summarize(evaluate(model, noisy)));
  }
  return mean_and_std(reports).first;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

nlohmann::json histogram_json(const Histogram& h) { return {{"edges", h.edges}, {"mass", h.mass}}; }

std::string grid_label(const char* name, double v) { return std::string(name) + "=" + format_real(v); }

}  // namespace

EvalReport corrupted_report(const ModelParams& params, std::span<const Sample> samples, Modality which,
                            double sigma, int repeats, std::uint64_t seed) {
  return corrupted_impl(params, samples, which, sigma, repeats, seed);
}

EvalReport corrupted_report(const BaselineModel& model, std::span<const Sample> samples, Modality which,
                            double sigma, int repeats, std::uint64_t seed) {
  return corrupted_impl(model, samples, which, sigma, repeats, seed);
}

std::vector<ConditionResult> run_noise_sweep(const ModelParams& params, const Dataset& dataset,
                                             const NoiseSweepConfig& config) {
  if (config.repeats < 1) throw std::invalid_argument("noise_sweep.repeats must be >= 1");
  std::vector<ConditionResult> rows;
  rows.push_back({"clean", 0.0, summarize(evaluate(params, dataset.test))});
  std::uint64_t cell = 0;
  for (Modality m : config.modalities) {
    for (double sigma : config.sigmas) {
      if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
      const std::uint64_t cell_seed = derive_seed(config.seed, cell++);
      std::vector<EvalReport> reports;
      for (int r = 0; r < config.repeats; ++r) {
        const auto noisy =
            corrupt_split(dataset.test, m, sigma, derive_seed(cell_seed, static_cast<std::uint64_t>(r)));
        reports.push_back(summarize(evaluate(params, noisy)));
      }
      auto [mean, sd] = mean_and_std(reports);
      const std::string name = "noise-" + modality_name(m);
      rows.push_back({name + "-mean", sigma, std::move(mean)});
      rows.push_back({name + "-std", sigma, std::move(sd)});
    }
  }
  return rows;
}

std::vector<ConditionResult> run_missing(const ModelParams& params, const Dataset& dataset) {
  std::vector<ConditionResult> rows;
  rows.push_back({"clean", 0.0, summarize(evaluate(params, dataset.test))});
  for (Modality m : {Modality::kFirst, Modality::kSecond}) {
    std::vector<Sample> masked;
    masked.reserve(dataset.test.size());
    for (const auto& s : dataset.test) {
      masked.push_back(mask_modality(s, m));
      const auto& x = m == Modality::kFirst ? masked.back().x1 : masked.back().x2;
      for (double v : x) {
        if (v != 0.0) throw std::logic_error("masked modality is not all zero");
      }
    }
    rows.push_back({"missing-" + modality_name(m), 0.0, summarize(evaluate(params, masked))});
  }
  return rows;
}

std::vector<ConditionResult> run_ood(const ModelParams& params, const Dataset& dataset,
                                     const OodConfig& config) {
  std::vector<ConditionResult> shifted;
  const EvalReport id = summarize(evaluate(params, dataset.test));
  std::uint64_t cell = 0;
  for (Modality m : {Modality::kFirst, Modality::kSecond}) {
    for (double sigma : config.sigmas) {
      shifted.push_back({"shifted-" + modality_name(m), sigma,
                         corrupted_report(params, dataset.test, m, sigma, config.repeats,
                                          derive_seed(config.seed, cell++))});
    }
  }
  SyntheticConfig foreign = dataset.config;
  foreign.seed = config.foreign_seed;
  const Dataset near = make_near_ood(dataset, foreign, config.near_ood_modality);
  shifted.push_back({"near-ood-" + modality_name(config.near_ood_modality), 0.0,
                     summarize(evaluate(params, near.test))});

  std::vector<ConditionResult> rows;
  rows.push_back({"id", 0.0, id});
  for (const auto& r : shifted) rows.push_back(r);
  for (const auto& r : shifted) rows.push_back({"delta-" + r.condition, r.sigma, difference(r.report, id)});
  return rows;
}

std::size_t ablation_grid_size(const AblationConfig& config) {
  return config.lambda_f.size() + config.lambda_c.size() + (config.loss_terms ? 4 : 0) +
         (config.uni_modal ? 2 : 0);
}

std::vector<AblationRun> run_ablation(const TrainConfig& base, const ModelConfig& model,
                                      const Dataset& dataset, const AblationConfig& config) {
  std::vector<AblationRun> runs;
  const auto noisy_test = [&](std::uint64_t seed) {
    return corrupt_split(dataset.test, config.noise_modality, config.noise_sigma, derive_seed(seed, 7));
  };
  const auto run_evidential = [&](const std::string& name, TrainConfig tc, std::uint64_t seed) {
    tc.seed = seed;
    const auto result = train(tc, model, dataset);
    runs.push_back({name, seed, summarize(evaluate(result.params, dataset.test)),
                    summarize(evaluate(result.params, noisy_test(seed))), config.noise_sigma});
  };
  const auto run_baseline = [&](const std::string& name, BaselineInput input, std::uint64_t seed) {
    TrainConfig tc = base;
    tc.seed = seed;
    const auto result = train_baseline(tc, model, input, dataset);
    runs.push_back({name, seed, summarize(evaluate(result.model, dataset.test)),
                    summarize(evaluate(result.model, noisy_test(seed))), config.noise_sigma});
  };

  for (double lf : config.lambda_f) {
    for (auto seed : config.seeds) {
      TrainConfig tc = base;
      tc.weights.lambda_f = lf;
      run_evidential(grid_label("lambda_f", lf), tc, seed);
    }
  }
  for (double lc : config.lambda_c) {
    for (auto seed : config.seeds) {
      TrainConfig tc = base;
      tc.weights.lambda_c = lc;
      run_evidential(grid_label("lambda_c", lc), tc, seed);
    }
  }
  if (config.loss_terms) {
    for (auto seed : config.seeds) run_baseline("baseline-concat", BaselineInput::kConcat, seed);
    for (auto seed : config.seeds) {
      TrainConfig tc = base;
      tc.terms = {true, false, false};
      run_evidential("nig", tc, seed);
    }
    for (auto seed : config.seeds) {
      TrainConfig tc = base;
      tc.terms = {true, true, false};
      tc.weights.lambda_c = 0.0;
      run_evidential("nig+st", tc, seed);
    }
    for (auto seed : config.seeds) {
      TrainConfig tc = base;
      tc.terms = {true, true, true};
      run_evidential("nig+st+ranking", tc, seed);
    }
  }
  if (config.uni_modal) {
    for (auto seed : config.seeds) run_baseline("uni-m1", BaselineInput::kFirstOnly, seed);
    for (auto seed : config.seeds) run_baseline("uni-m2", BaselineInput::kSecondOnly, seed);
  }
  return runs;
}

std::vector<ConditionResult> ablation_rows(const std::vector<AblationRun>& runs, bool noisy) {
  std::vector<ConditionResult> rows;
  rows.reserve(runs.size());
  for (const auto& r : runs) {
    rows.push_back({r.condition + "/seed=" + std::to_string(r.seed), noisy ? r.noise_sigma : 0.0,
                    noisy ? r.noisy : r.clean});
  }
  return rows;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows) {
  auto out = open_output(path);
  out << "condition,sigma,acc,kappa,ece,aurc\n";
  for (const auto& r : rows) {
    out << r.condition << ',' << format_real(r.sigma) << ',' << format_real(r.report.acc) << ','
        << format_real(r.report.kappa) << ',' << format_real(r.report.ece) << ',' << format_real(r.report.aurc)
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows) {
  auto out = open_output(path);
  out << "condition,sigma,mean_confidence,mean_m1_confidence,mean_m2_confidence,mean_aleatoric,"
         "mean_epistemic,mean_m1_epistemic,mean_m2_epistemic,mean_fused_uncertainty\n";
  for (const auto& r : rows) {
    const auto& e = r.report;
    out << r.condition << ',' << format_real(r.sigma) << ',' << format_real(e.mean_confidence) << ','
        << format_real(e.modality_mean_confidence[0]) << ',' << format_real(e.modality_mean_confidence[1]) << ','
        << format_real(e.mean_aleatoric) << ',' << format_real(e.mean_epistemic) << ','
        << format_real(e.modality_mean_epistemic[0]) << ',' << format_real(e.modality_mean_epistemic[1]) << ','
        << format_real(e.mean_fused_uncertainty) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_histogram_csv(const std::filesystem::path& path, const std::vector<ConditionResult>& rows) {
  auto out = open_output(path);
  out << "condition,sigma,quantity,bin_lower,bin_upper,mass\n";
  const auto emit = [&](const ConditionResult& r, const char* quantity, const Histogram& h) {
    for (std::size_t b = 0; b < h.mass.size(); ++b) {
      out << r.condition << ',' << format_real(r.sigma) << ',' << quantity << ',' << format_real(h.edges[b])
          << ',' << format_real(h.edges[b + 1]) << ',' << format_real(h.mass[b]) << '\n';
    }
  };
  for (const auto& r : rows) {
    emit(r, "confidence", r.report.confidence_density);
    emit(r, "epistemic", r.report.uncertainty_density);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_report_json(const std::filesystem::path& path, const std::vector<ConditionResult>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& e = r.report;
    doc.push_back({{"condition", r.condition},
                   {"sigma", r.sigma},
                   {"acc", e.acc},
                   {"kappa", e.kappa},
                   {"ece", e.ece},
                   {"aurc", e.aurc},
                   {"mean_confidence", e.mean_confidence},
                   {"mean_aleatoric", e.mean_aleatoric},
                   {"mean_epistemic", e.mean_epistemic},
                   {"mean_fused_uncertainty", e.mean_fused_uncertainty},
                   {"modality_acc", e.modality_acc},
                   {"modality_mean_confidence", e.modality_mean_confidence},
                   {"modality_mean_epistemic", e.modality_mean_epistemic},
                   {"confidence_density", histogram_json(e.confidence_density)},
                   {"uncertainty_density", histogram_json(e.uncertainty_density)}});
  }
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_train_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  auto out = open_output(path);
  out << "epoch,per_modality_nig_1,per_modality_nig_2,fused_st,ranking,total,lambda_m,lambda_f,lambda_c,val_acc\n";
  for (const auto& e : log) {
    const auto& t = e.train;
    out << e.epoch << ',' << format_real(t.per_modality_nig[0]) << ',' << format_real(t.per_modality_nig[1])
        << ',' << format_real(t.fused_st) << ',' << format_real(t.ranking) << ',' << format_real(t.total) << ','
        << format_real(t.lambda_m) << ',' << format_real(t.lambda_f) << ',' << format_real(t.lambda_c) << ','
        << format_real(e.val_acc) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace evfuse
