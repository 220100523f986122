#pragma once
// Checkpoint format: magic "ACLM", u32 format version, u64 JSON header
// length, JSON header (model config + vocabulary), u64 tensor count, then
// per tensor in sorted-name order: u32 name length, name bytes, u32 ndim,
// i64 dims, raw little-endian float32 data. Round-trips bit-exactly.

#include <string>

#include "ac/model.hpp"
#include "ac/vocab.hpp"

namespace ac {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const DecoderModel& model, const Vocabulary& vocab,
                     const std::string& path);

struct LoadedModel {
    DecoderModel model;
    Vocabulary vocab;
};

// Throws with distinct messages on bad magic, version mismatch, truncation,
// name/shape mismatches against the config's allocation plan.
LoadedModel load_checkpoint(const std::string& path);

}  // namespace ac
