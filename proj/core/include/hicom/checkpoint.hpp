// Single-file parameter checkpoint: "HCKP" magic, u32 version, u32 header
// length, JSON header (model config, class count, ordered array shapes),
// then each array as little-endian float32, row-major, in header order.
#pragma once

#include "hicom/model.hpp"
#include "hicom/trainer.hpp"

#include <string>

namespace hicom {

void save_checkpoint(const std::string& path, const CompressorParams& params,
                     const ClassifierHead& head);

struct Checkpoint {
  CompressorParams params;
  ClassifierHead head;
};

// Malformed or truncated files raise FormatError. Values come back through
// float32, so a save/load cycle is idempotent bit-wise.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hicom
