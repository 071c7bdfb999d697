#pragma once

#include <filesystem>
#include <string>

#include "nfq/json.hpp"
#include "nfq/qfunc.hpp"

namespace nfq {

struct CheckpointInfo {
  int episode = 0;
  int td_rounds = 0;
  int lookback = 1;
  std::string cost_id;
};

struct Checkpoint {
  QFunction qf;
  CheckpointInfo info;
  Json manifest;
};

// Writes dir/manifest.json and dir/weights.bin. The weights file holds
// little-endian float64 values: every layer's weight matrix row-major, then
// every layer's bias vector.
void save_checkpoint(const std::filesystem::path& dir, const QFunction& qf,
                     const CheckpointInfo& info);

// Throws IoError when files are missing or disagree with the manifest.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace nfq
