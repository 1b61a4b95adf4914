#pragma once

#include <filesystem>

#include <json.hpp>

#include "saekit/sae_model.hpp"

namespace saekit {

// SAEMDL01 model file:
//   8 bytes  magic "SAEMDL01"
//   u32 n, u32 M
//   w_enc (M*n), b_enc (M), w_dec (n*M), b_dec (n), theta (M)
//            little-endian f32, row-major
//   UTF-8 JSON trailer (config, normalization factor, provenance)
inline constexpr char kModelMagic[9] = "SAEMDL01";
inline constexpr const char* kModelExtension = ".saemdl";

struct ModelFile {
    SaeParams params;
    nlohmann::json metadata = nlohmann::json::object();
};

// Parameters are rounded to f32.
void write_model(const std::filesystem::path& path, const SaeParams& params,
                 const nlohmann::json& metadata = nlohmann::json::object());

// Checks the magic, the payload length, and that the trailer parses. Thresholds
// are not required to be positive here so ground-truth files load too.
ModelFile read_model(const std::filesystem::path& path);

// Rounds every parameter to the nearest f32, i.e. what a write/read cycle keeps.
SaeParams round_to_f32(const SaeParams& params);

}  // namespace saekit
