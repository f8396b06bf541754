// evfuse: experiment driver. See README.md for the config format and the
// CSV schemas of every output file.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "evfuse/checkpoint.hpp"
#include "evfuse/config.hpp"
#include "evfuse/experiments.hpp"
#include "evfuse/format.hpp"
#include "evfuse/json_io.hpp"

namespace fs = std::filesystem;
using namespace evfuse;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr int kConfig = 3;
constexpr int kRuntime = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<double> threshold;
};

// Failures of the command's own check (grad-check), not of the run.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

int fail(const std::string& command, const char* kind, const std::string& message, int code) {
  std::cerr << "evfuse-error command=" << (command.empty() ? "-" : command) << " kind=" << kind
            << " message=" << one_line(message) << '\n';
  return code;
}

ExperimentConfig load_config(const Options& opt) {
  ExperimentConfig c = opt.config.empty() ? ExperimentConfig{} : load_experiment_config(opt.config);
  if (opt.seed) c.apply_seed(*opt.seed);
  if (opt.threshold) c.grad_check.threshold = *opt.threshold;
  c.finalize();
  return c;
}

Dataset load_data(const ExperimentConfig& c, const fs::path& out) {
  const fs::path dir = c.data_path(out);
  if (!fs::exists(dir / "meta.json")) {
    throw std::runtime_error("dataset not found in " + dir.string() + " (run gen-data first)");
  }
  Dataset d = load_dataset(dir);
  if (d.config.classes != c.model.classes || d.config.d1 != c.model.d1 || d.config.d2 != c.model.d2) {
    throw std::runtime_error("dimension mismatch: dataset in " + dir.string() +
                             " does not match the configured classes/d1/d2");
  }
  return d;
}

ModelParams load_model(const ExperimentConfig& c, const fs::path& out, const Dataset& d) {
  const fs::path path = c.checkpoint_path(out);
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string() + " (run train first)");
  Checkpoint cp = load_checkpoint(path);
  const auto& mc = cp.params.config();
  if (mc.classes != d.config.classes || mc.d1 != d.config.d1 || mc.d2 != d.config.d2) {
    throw std::runtime_error("dimension mismatch between checkpoint " + path.string() + " and dataset");
  }
  return cp.params;
}

void write_reports(const fs::path& out, const std::string& stem, const std::vector<ConditionResult>& rows) {
  write_metrics_csv(out / (stem + "_metrics.csv"), rows);
  write_summary_csv(out / (stem + "_summary.csv"), rows);
  write_histogram_csv(out / (stem + "_histograms.csv"), rows);
  write_report_json(out / (stem + "_report.json"), rows);
}

void print_rows(const std::vector<ConditionResult>& rows) {
  for (const auto& r : rows) {
    std::cout << r.condition << " sigma=" << format_real(r.sigma) << " acc=" << format_real(r.report.acc)
              << " kappa=" << format_real(r.report.kappa) << " ece=" << format_real(r.report.ece)
              << " aurc=" << format_real(r.report.aurc) << '\n';
  }
}

void cmd_gen_data(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = generate(c.data);
  const fs::path dir = c.data_path(out);
  save_dataset(dir, d);
  std::cout << "train " << d.train.size() << "\nval " << d.val.size() << "\ntest " << d.test.size() << '\n';
}

void cmd_train(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const TrainResult r = train(c.train, c.model, d);
  const fs::path ckpt = c.checkpoint_path(out);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  save_checkpoint(ckpt, {r.params, c.train, r.best_epoch, r.best_val_acc});
  write_train_log_csv(out / "train_log.csv", r.log);
  std::cout << "best_epoch " << r.best_epoch << "\nbest_val_acc " << format_real(r.best_val_acc)
            << "\ncheckpoint " << ckpt.string() << '\n';
}

void cmd_eval(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const ModelParams p = load_model(c, out, d);
  const std::vector<ConditionResult> rows{{"test", 0.0, summarize(evaluate(p, d.test))}};
  write_reports(out, "eval", rows);
  print_rows(rows);
}

void cmd_noise_sweep(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const auto rows = run_noise_sweep(load_model(c, out, d), d, c.noise_sweep);
  write_reports(out, "noise_sweep", rows);
  print_rows(rows);
}

void cmd_missing(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const auto rows = run_missing(load_model(c, out, d), d);
  write_reports(out, "missing", rows);
  print_rows(rows);
}

void cmd_ood(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const auto rows = run_ood(load_model(c, out, d), d, c.ood);
  write_reports(out, "ood", rows);
  print_rows(rows);
}

void cmd_ablate(const ExperimentConfig& c, const fs::path& out) {
  const Dataset d = load_data(c, out);
  const auto runs = run_ablation(c.train, c.model, d, c.ablate);
  const auto clean = ablation_rows(runs, false);
  write_metrics_csv(out / "ablate_metrics.csv", clean);
  write_metrics_csv(out / "ablate_noisy_metrics.csv", ablation_rows(runs, true));
  std::cout << "runs " << runs.size() << '\n';
  print_rows(clean);
}

void cmd_grad_check(const ExperimentConfig& c, const fs::path& out) {
  const auto& g = c.grad_check;
  const Dataset d = generate(c.data);
  if (static_cast<std::size_t>(g.batch_size) > d.train.size()) throw std::invalid_argument("batch larger than train split");
  const std::span<const Sample> batch(d.train.data(), static_cast<std::size_t>(g.batch_size));

  ModelParams params = ModelParams::initialize(c.model, g.seed);
  const GradCheckReport at_init = gradient_check(params, batch, c.train.weights, g.step);
  TrainConfig tc = c.train;
  tc.seed = g.seed;
  params = train_steps(tc, std::move(params), d.train, g.steps);
  const GradCheckReport trained = gradient_check(params, batch, c.train.weights, g.step);

  fs::create_directories(out);
  std::ofstream csv(out / "grad_check.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open " + (out / "grad_check.csv").string() + " for writing");
  csv << "stage,term,max_rel_error,worst_index,threshold,pass\n";
  bool ok = true;
  const auto emit = [&](const std::string& stage, const GradCheckReport& r) {
    for (const auto& t : r.terms) {
      const bool pass = t.max_rel_error < g.threshold;
      ok = ok && pass;
      csv << stage << ',' << t.name << ',' << format_real(t.max_rel_error) << ',' << t.worst_index << ','
          << format_real(g.threshold) << ',' << (pass ? 1 : 0) << '\n';
    }
    std::cout << stage << " max_rel_error=" << format_real(r.max_rel_error) << " worst_index=" << r.worst_index
              << " analytic=" << format_real(r.analytic_at_worst) << " numeric=" << format_real(r.numeric_at_worst)
              << " parameters=" << r.parameters << " active_hinge_samples=" << r.active_hinge_samples << '\n';
  };
  emit("init", at_init);
  emit("after_" + std::to_string(g.steps) + "_steps", trained);
  if (!csv) throw std::runtime_error("write failed for grad_check.csv");
  std::cout << (ok ? "PASS" : "FAIL") << " threshold=" << format_real(g.threshold) << '\n';
  if (!ok) {
    throw CheckFailure("max relative error " +
                       format_real(std::max(at_init.max_rel_error, trained.max_rel_error)) +
                       " exceeds threshold " + format_real(g.threshold));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential two-modality fusion: data generation, training and experiment protocols"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "JSON experiment config (all keys optional)")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "master seed: overrides data, train and protocol seeds");
  app.add_option("--out", opt.out, "output directory")->capture_default_str();

  using Handler = std::function<void(const ExperimentConfig&, const fs::path&)>;
  const std::vector<std::tuple<const char*, const char*, Handler>> commands{
      {"gen-data", "write train/val/test CSV files and meta.json", cmd_gen_data},
      {"train", "train the fused model; writes the checkpoint and train_log.csv", cmd_train},
      {"eval", "evaluate a checkpoint on the test split", cmd_eval},
      {"noise-sweep", "Gaussian corruption of each modality over the sigma grid", cmd_noise_sweep},
      {"missing", "evaluate with each modality zero-filled", cmd_missing},
      {"ood", "shifted and near-OOD protocols with density tables", cmd_ood},
      {"ablate", "lambda grids and loss-term ablation", cmd_ablate},
      {"grad-check", "compare analytic and finite-difference gradients", cmd_grad_check},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, help, handler] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (std::string(name) == "grad-check") {
      sub->add_option("--threshold", opt.threshold, "maximum relative error (default 1e-4)");
    }
    subs.emplace_back(sub, handler);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("", "usage", e.what(), kUsage);
  }

  std::string command;
  for (const auto& [sub, handler] : subs) {
    if (!sub->parsed()) continue;
    command = sub->get_name();
    try {
      const ExperimentConfig config = load_config(opt);
      handler(config, fs::path(opt.out));
    } catch (const ConfigError& e) {
      return fail(command, "config", e.what(), kConfig);
    } catch (const CheckFailure& e) {
      return fail(command, "check", e.what(), kCheckFailed);
    } catch (const std::exception& e) {
      return fail(command, "runtime", e.what(), kRuntime);
    }
  }
  return kOk;
}
