#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tse/datagen.hpp"
#include "tse/network.hpp"
#include "tse/optimizer.hpp"

namespace tse {

// Serialized training state. Magic "TSE1", a version integer, the config
// snapshot, then length-prefixed little-endian float64 arrays in declared
// layer order. save(load(save(x))) is byte-identical.
struct Checkpoint {
  std::uint32_t version = 1;
  std::string config_text;
  std::uint64_t iteration = 0;
  NetworkParams params;
  AdamState adam;
  bool has_clock_stream = false;
  ClockStream clock_stream;
  double wall_seconds = 0.0;   // cumulative training wall time
  double last_f_total = 0.0;   // most recent objective value
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tse
