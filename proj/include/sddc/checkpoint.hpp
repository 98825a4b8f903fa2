#pragma once

#include <filesystem>

#include "json.hpp"
#include "sddc/model.hpp"

namespace sddc {

// Checkpoint layout (all integers little-endian):
//   "SDDCCKPT"  u32 version  u32 meta_len  meta (JSON, holds "model" config)
//   u32 count, then per tensor:
//     u16 name_len, name, u8 dtype (0 = float32), u8 ndim, i64 dims[ndim],
//     u64 byte_len, raw bytes
inline constexpr uint32_t kCheckpointVersion = 1;

/// Writes atomically (temporary file + rename); an existing file is left
/// untouched if anything fails.
void save_checkpoint(const std::filesystem::path& path, VideoCodec& model, nlohmann::json metadata = {});

struct LoadedCheckpoint {
  VideoCodec model{nullptr};
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sddc
