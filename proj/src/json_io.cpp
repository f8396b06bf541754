#include "evfuse/json_io.hpp"

#include <algorithm>
#include <cstring>

namespace evfuse {

namespace {

void require_object(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

}  // namespace

void require_known_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = {{"classes", c.classes},       {"d1", c.d1},
       {"d2", c.d2},                 {"separation", c.separation},
       {"sigma1", c.sigma1},         {"sigma2", c.sigma2},
       {"informativeness1", c.informativeness1},
       {"informativeness2", c.informativeness2},
       {"n", c.n},                   {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  const std::string where = "data";
  require_known_keys(j, {"classes", "d1", "d2", "separation", "sigma1", "sigma2", "informativeness1",
                         "informativeness2", "n", "seed"},
                     where);
  read_if(j, "classes", c.classes, where);
  read_if(j, "d1", c.d1, where);
  read_if(j, "d2", c.d2, where);
  read_if(j, "separation", c.separation, where);
  read_if(j, "sigma1", c.sigma1, where);
  read_if(j, "sigma2", c.sigma2, where);
  read_if(j, "informativeness1", c.informativeness1, where);
  read_if(j, "informativeness2", c.informativeness2, where);
  read_if(j, "n", c.n, where);
  read_if(j, "seed", c.seed, where);
}

void to_json(nlohmann::json& j, const Standardizer& s) {
  j = {{"mean1", s.mean[0]}, {"scale1", s.scale[0]}, {"mean2", s.mean[1]}, {"scale2", s.scale[1]}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
  require_known_keys(j, {"mean1", "scale1", "mean2", "scale2"}, "standardizer");
  s.mean[0] = j.at("mean1").get<std::vector<double>>();
  s.scale[0] = j.at("scale1").get<std::vector<double>>();
  s.mean[1] = j.at("mean2").get<std::vector<double>>();
  s.scale[1] = j.at("scale2").get<std::vector<double>>();
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = {{"lambda_m", w.lambda_m}, {"lambda_f", w.lambda_f}, {"lambda_c", w.lambda_c}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  require_known_keys(j, {"lambda_m", "lambda_f", "lambda_c"}, "weights");
  read_if(j, "lambda_m", w.lambda_m, "weights");
  read_if(j, "lambda_f", w.lambda_f, "weights");
  read_if(j, "lambda_c", w.lambda_c, "weights");
}

void to_json(nlohmann::json& j, const LossTerms& t) {
  j = {{"modality", t.modality}, {"fused", t.fused}, {"ranking", t.ranking}};
}

void from_json(const nlohmann::json& j, LossTerms& t) {
  require_known_keys(j, {"modality", "fused", "ranking"}, "terms");
  read_if(j, "modality", t.modality, "terms");
  read_if(j, "fused", t.fused, "terms");
  read_if(j, "ranking", t.ranking, "terms");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"classes", c.classes}, {"d1", c.d1}, {"d2", c.d2}, {"hidden", c.hidden}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  require_known_keys(j, {"classes", "d1", "d2", "hidden"}, "model");
  read_if(j, "classes", c.classes, "model");
  read_if(j, "d1", c.d1, "model");
  read_if(j, "d2", c.d2, "model");
  read_if(j, "hidden", c.hidden, "model");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"lambda_m", c.weights.lambda_m},
       {"lambda_f", c.weights.lambda_f},
       {"lambda_c", c.weights.lambda_c},
       {"terms", c.terms},
       {"learning_rate", c.learning_rate},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const std::string where = "train";
  require_known_keys(j, {"lambda_m", "lambda_f", "lambda_c", "terms", "learning_rate", "epochs",
                         "batch_size", "seed"},
                     where);
  read_if(j, "lambda_m", c.weights.lambda_m, where);
  read_if(j, "lambda_f", c.weights.lambda_f, where);
  read_if(j, "lambda_c", c.weights.lambda_c, where);
  if (j.contains("terms")) c.terms = j.at("terms").get<LossTerms>();
  read_if(j, "learning_rate", c.learning_rate, where);
  read_if(j, "epochs", c.epochs, where);
  read_if(j, "batch_size", c.batch_size, where);
  read_if(j, "seed", c.seed, where);
}

}  // namespace evfuse
