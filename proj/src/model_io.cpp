#include "saekit/model_io.hpp"

#include <cstring>

#include "byte_io.hpp"
#include "saekit/errors.hpp"

namespace saekit {

void write_model(const std::filesystem::path& path, const SaeParams& params, const nlohmann::json& metadata) {
    params.validate();
    std::string bytes(kModelMagic, 8);
    detail::put_u32(bytes, static_cast<std::uint32_t>(params.input_dim()));
    detail::put_u32(bytes, static_cast<std::uint32_t>(params.dict_size()));
    for (auto block : params.blocks()) {
        for (double v : block) detail::put_f32(bytes, static_cast<float>(v));
    }
    bytes += metadata.dump();
    detail::write_file(path.string(), bytes);
}

ModelFile read_model(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path.string());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 16) throw FormatError("header", "file shorter than 16-byte header");
    if (std::memcmp(p, kModelMagic, 8) != 0) throw FormatError("magic", "expected SAEMDL01");
    const std::uint32_t n = detail::get_u32(p + 8);
    const std::uint32_t m = detail::get_u32(p + 12);
    if (n < 1) throw FormatError("n", "must be >= 1");
    if (m < 1) throw FormatError("M", "must be >= 1");

    const std::uint64_t floats = 2ull * n * m + m + n + m;
    const std::uint64_t payload_end = 16 + 4 * floats;
    if (bytes.size() < payload_end) {
        throw FormatError("payload", "expected " + std::to_string(payload_end) + " bytes of header+weights, file has " +
                                         std::to_string(bytes.size()));
    }

    ModelFile out;
    out.params = SaeParams::zeros(n, m);
    const unsigned char* cursor = p + 16;
    for (auto block : out.params.blocks()) {
        for (double& v : block) {
            v = detail::get_f32(cursor);
            cursor += 4;
        }
    }
    const std::string trailer = bytes.substr(payload_end);
    if (!trailer.empty()) {
        try {
            out.metadata = nlohmann::json::parse(trailer);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("trailer", e.what());
        }
    }
    return out;
}

SaeParams round_to_f32(const SaeParams& params) {
    SaeParams out = params;
    for (auto block : out.blocks()) {
        for (double& v : block) v = static_cast<double>(static_cast<float>(v));
    }
    return out;
}

}  // namespace saekit
