#pragma once

#include <filesystem>

#include "evfuse/model.hpp"

namespace evfuse {

struct Checkpoint {
  ModelParams params;
  TrainConfig train;
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

// Text format, version 1:
//   line 1: "evfuse-checkpoint 1"
//   line 2: one-line JSON {"model": ..., "train": ..., "best_epoch": ..., "best_val_acc": ...}
//   line 3: "parameters <count>"
//   then one parameter per line in shortest round-trip form.
// Loading a saved checkpoint reproduces every parameter bit for bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evfuse
