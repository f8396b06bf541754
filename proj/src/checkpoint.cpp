#include "evfuse/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "evfuse/format.hpp"
#include "evfuse/json_io.hpp"

namespace evfuse {

namespace {
constexpr const char* kMagic = "evfuse-checkpoint 1";
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  nlohmann::json meta{{"model", checkpoint.params.config()},
                      {"train", checkpoint.train},
                      {"best_epoch", checkpoint.best_epoch},
                      {"best_val_acc", checkpoint.best_val_acc}};
  out << kMagic << '\n' << meta.dump() << '\n' << "parameters " << checkpoint.params.size() << '\n';
  for (double v : checkpoint.params.values()) out << format_real(v) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw std::runtime_error(path.string() + ": not a version-1 evfuse checkpoint");
  }
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": truncated header");
  const auto meta = nlohmann::json::parse(line);

  Checkpoint cp{ModelParams(meta.at("model").get<ModelConfig>()), meta.at("train").get<TrainConfig>(),
                meta.at("best_epoch").get<int>(), meta.at("best_val_acc").get<double>()};

  if (!std::getline(in, line) || line.rfind("parameters ", 0) != 0) {
    throw std::runtime_error(path.string() + ": missing parameter count");
  }
  const auto count = static_cast<std::size_t>(std::stoull(line.substr(11)));
  if (count != cp.params.size()) {
    throw std::runtime_error(path.string() + ": parameter count " + std::to_string(count) +
                             " does not match the model layout (" + std::to_string(cp.params.size()) + ")");
  }
  auto values = cp.params.values();
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": truncated parameters");
    values[i] = parse_real(line);
  }
  return cp;
}

}  // namespace evfuse
