#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "saekit/types.hpp"

namespace saekit {

// SAEACT01 activation shard:
//   8 bytes  magic "SAEACT01"
//   u32      d_model
//   u32      dtype_code (0 = f32)
//   u64      n_rows
//   n_rows * d_model little-endian f32, row-major
inline constexpr char kShardMagic[9] = "SAEACT01";
inline constexpr std::size_t kShardHeaderBytes = 24;
inline constexpr std::uint32_t kDtypeF32 = 0;
inline constexpr const char* kShardExtension = ".saeact";

struct ShardHeader {
    std::uint32_t d_model = 0;
    std::uint32_t dtype_code = kDtypeF32;
    std::uint64_t n_rows = 0;
};

// Entries are rounded to f32 on write. Rejects empty or non-finite batches.
void write_shard(const std::filesystem::path& path, const ActivationBatch& batch);
ActivationBatch read_shard(const std::filesystem::path& path);

// Validates the header against the file length without reading the payload.
ShardHeader read_shard_header(const std::filesystem::path& path);

// Optional `<shard>.meta.json` sidecar.
std::filesystem::path shard_meta_path(const std::filesystem::path& shard);
void write_shard_meta(const std::filesystem::path& shard, const nlohmann::json& meta);
std::optional<nlohmann::json> read_shard_meta(const std::filesystem::path& shard);

// All `*.saeact` files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_shards(const std::filesystem::path& dir);

// s = sqrt(mean over rows of ||x||^2); dividing rows by s gives unit mean
// squared norm.
double normalization_factor(const Eigen::Ref<const Matrix>& rows);
double normalization_factor(const ActivationBatch& batch);

}  // namespace saekit
