#pragma once

#include <optional>
#include <string>

#include "reft/model.hpp"
#include "reft/optim.hpp"

namespace reft {

// Versioned binary container: model config, all parameters in the flat
// Params::all() order, optional optimizer state, the RNG state, and a step
// counter. Loading restores sampling behavior bit-exactly in single-threaded
// mode.
struct CheckpointData {
  Model model;
  std::optional<AdamW> optimizer;
  std::string rng_state;  // empty if none was saved
  int64_t step = 0;
};

void save_checkpoint(const std::string& path, const Model& model,
                     const AdamW* optimizer = nullptr,
                     const std::string& rng_state = "", int64_t step = 0);

CheckpointData load_checkpoint(const std::string& path);

}  // namespace reft
