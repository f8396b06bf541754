#include "evfuse/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evfuse/json_io.hpp"

namespace evfuse {

namespace {

std::vector<Modality> read_modalities(const nlohmann::json& j, const std::string& where) {
  std::vector<Modality> out;
  if (!j.is_array()) throw ConfigError(where + ": expected an array of modalities");
  for (const auto& v : j) {
    try {
      out.push_back(parse_modality(v.is_string() ? v.get<std::string>() : std::to_string(v.get<int>())));
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

Modality read_modality(const nlohmann::json& j, const char* key, Modality fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return read_modalities(nlohmann::json::array({j.at(key)}), where + "." + key).front();
}

int modality_number(Modality m) { return m == Modality::kFirst ? 1 : 2; }

void read_noise_sweep(const nlohmann::json& j, NoiseSweepConfig& c) {
  const std::string where = "noise_sweep";
  require_known_keys(j, {"sigmas", "modalities", "repeats", "seed"}, where);
  read_if(j, "sigmas", c.sigmas, where);
  if (j.contains("modalities")) c.modalities = read_modalities(j.at("modalities"), where + ".modalities");
  read_if(j, "repeats", c.repeats, where);
  read_if(j, "seed", c.seed, where);
}

void read_ood(const nlohmann::json& j, OodConfig& c) {
  const std::string where = "ood";
  require_known_keys(j, {"sigmas", "repeats", "seed", "foreign_seed", "near_ood_modality"}, where);
  read_if(j, "sigmas", c.sigmas, where);
  read_if(j, "repeats", c.repeats, where);
  read_if(j, "seed", c.seed, where);
  read_if(j, "foreign_seed", c.foreign_seed, where);
  c.near_ood_modality = read_modality(j, "near_ood_modality", c.near_ood_modality, where);
}

void read_ablate(const nlohmann::json& j, AblationConfig& c) {
  const std::string where = "ablate";
  require_known_keys(j, {"lambda_f", "lambda_c", "loss_terms", "uni_modal", "seeds", "noise_sigma",
                         "noise_modality"},
                     where);
  read_if(j, "lambda_f", c.lambda_f, where);
  read_if(j, "lambda_c", c.lambda_c, where);
  read_if(j, "loss_terms", c.loss_terms, where);
  read_if(j, "uni_modal", c.uni_modal, where);
  read_if(j, "seeds", c.seeds, where);
  read_if(j, "noise_sigma", c.noise_sigma, where);
  c.noise_modality = read_modality(j, "noise_modality", c.noise_modality, where);
}

void read_grad_check(const nlohmann::json& j, GradCheckConfig& c) {
  const std::string where = "grad_check";
  require_known_keys(j, {"batch_size", "steps", "step", "threshold", "seed"}, where);
  read_if(j, "batch_size", c.batch_size, where);
  read_if(j, "steps", c.steps, where);
  read_if(j, "step", c.step, where);
  read_if(j, "threshold", c.threshold, where);
  read_if(j, "seed", c.seed, where);
}

}  // namespace

void ExperimentConfig::apply_seed(std::uint64_t seed) {
  data.seed = seed;
  train.seed = seed;
  noise_sweep.seed = seed;
  ood.seed = seed;
  grad_check.seed = seed;
}

void ExperimentConfig::finalize() {
  model.classes = data.classes;
  model.d1 = data.d1;
  model.d2 = data.d2;
  try {
    data.validate();
    model.validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (noise_sweep.repeats < 1 || ood.repeats < 1) throw ConfigError("repeats must be >= 1");
  for (double s : noise_sweep.sigmas) {
    if (!(s >= 0.0)) throw ConfigError("noise_sweep.sigmas must be >= 0");
  }
  for (double s : ood.sigmas) {
    if (!(s >= 0.0)) throw ConfigError("ood.sigmas must be >= 0");
  }
  if (!(ablate.noise_sigma >= 0.0)) throw ConfigError("ablate.noise_sigma must be >= 0");
  if (grad_check.batch_size < 1 || grad_check.steps < 0) throw ConfigError("grad_check batch/steps invalid");
  if (!(grad_check.step > 0.0) || !(grad_check.threshold > 0.0)) {
    throw ConfigError("grad_check.step and grad_check.threshold must be > 0");
  }
}

std::filesystem::path ExperimentConfig::data_path(const std::filesystem::path& out) const {
  return data_dir.empty() ? out / "data" : std::filesystem::path(data_dir);
}

std::filesystem::path ExperimentConfig::checkpoint_path(const std::filesystem::path& out) const {
  return checkpoint.empty() ? out / "model.ckpt" : std::filesystem::path(checkpoint);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  require_known_keys(j, {"data", "model", "train", "noise_sweep", "ood", "ablate", "grad_check", "data_dir",
                         "checkpoint"},
                     "config");
  if (j.contains("data")) from_json(j.at("data"), c.data);
  if (j.contains("model")) {
    require_known_keys(j.at("model"), {"hidden"}, "model");
    read_if(j.at("model"), "hidden", c.model.hidden, "model");
  }
  if (j.contains("train")) from_json(j.at("train"), c.train);
  if (j.contains("noise_sweep")) read_noise_sweep(j.at("noise_sweep"), c.noise_sweep);
  if (j.contains("ood")) read_ood(j.at("ood"), c.ood);
  if (j.contains("ablate")) read_ablate(j.at("ablate"), c.ablate);
  if (j.contains("grad_check")) read_grad_check(j.at("grad_check"), c.grad_check);
  read_if(j, "data_dir", c.data_dir, "config");
  read_if(j, "checkpoint", c.checkpoint, "config");
  c.finalize();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str());
}

std::string dump_experiment_config(const ExperimentConfig& c) {
  std::vector<int> modalities;
  for (Modality m : c.noise_sweep.modalities) modalities.push_back(modality_number(m));
  nlohmann::json j{
      {"data", c.data},
      {"model", {{"hidden", c.model.hidden}}},
      {"train", c.train},
      {"noise_sweep",
       {{"sigmas", c.noise_sweep.sigmas}, {"modalities", modalities}, {"repeats", c.noise_sweep.repeats},
        {"seed", c.noise_sweep.seed}}},
      {"ood",
       {{"sigmas", c.ood.sigmas}, {"repeats", c.ood.repeats}, {"seed", c.ood.seed},
        {"foreign_seed", c.ood.foreign_seed}, {"near_ood_modality", modality_number(c.ood.near_ood_modality)}}},
      {"ablate",
       {{"lambda_f", c.ablate.lambda_f}, {"lambda_c", c.ablate.lambda_c}, {"loss_terms", c.ablate.loss_terms},
        {"uni_modal", c.ablate.uni_modal}, {"seeds", c.ablate.seeds}, {"noise_sigma", c.ablate.noise_sigma},
        {"noise_modality", modality_number(c.ablate.noise_modality)}}},
      {"grad_check",
       {{"batch_size", c.grad_check.batch_size}, {"steps", c.grad_check.steps}, {"step", c.grad_check.step},
        {"threshold", c.grad_check.threshold}, {"seed", c.grad_check.seed}}},
      {"data_dir", c.data_dir},
      {"checkpoint", c.checkpoint}};
  return j.dump(2) + "\n";
}

}  // namespace evfuse
