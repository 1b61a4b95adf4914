#include "saekit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "byte_io.hpp"
#include "saekit/errors.hpp"

namespace saekit {

namespace fs = std::filesystem;

void write_shard(const fs::path& path, const ActivationBatch& batch) {
    if (batch.size() == 0) throw ConfigError("refusing to write a shard with zero rows");
    if (batch.dim() == 0) throw ConfigError("refusing to write a shard with zero columns");
    if (!batch.rows.allFinite()) throw ConfigError("shard rows contain non-finite values");

    std::string bytes;
    bytes.reserve(kShardHeaderBytes + 4 * static_cast<std::size_t>(batch.rows.size()));
    bytes.append(kShardMagic, 8);
    detail::put_u32(bytes, static_cast<std::uint32_t>(batch.dim()));
    detail::put_u32(bytes, kDtypeF32);
    detail::put_u64(bytes, static_cast<std::uint64_t>(batch.size()));
    const double* data = batch.rows.data();
    for (Index i = 0; i < batch.rows.size(); ++i) detail::put_f32(bytes, static_cast<float>(data[i]));
    detail::write_file(path.string(), bytes);
}

namespace {

ShardHeader parse_header(const unsigned char* p, std::size_t available, std::uintmax_t file_size) {
    if (available < kShardHeaderBytes) throw FormatError("header", "file shorter than 24-byte header");
    if (std::memcmp(p, kShardMagic, 8) != 0) throw FormatError("magic", "expected SAEACT01");
    ShardHeader h;
    h.d_model = detail::get_u32(p + 8);
    h.dtype_code = detail::get_u32(p + 12);
    h.n_rows = detail::get_u64(p + 16);
    if (h.d_model < 1) throw FormatError("d_model", "must be >= 1");
    if (h.dtype_code != kDtypeF32) {
        throw FormatError("dtype_code", "unsupported dtype " + std::to_string(h.dtype_code));
    }
    const std::uintmax_t expected = kShardHeaderBytes + std::uintmax_t{4} * h.d_model * h.n_rows;
    if (expected != file_size) {
        throw FormatError("n_rows", "header declares " + std::to_string(h.n_rows) + " rows of width " +
                                        std::to_string(h.d_model) + " (" + std::to_string(expected) +
                                        " bytes) but file has " + std::to_string(file_size) + " bytes");
    }
    return h;
}

}  // namespace

ShardHeader read_shard_header(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open shard '" + path.string() + "'");
    unsigned char buf[kShardHeaderBytes] = {};
    in.read(reinterpret_cast<char*>(buf), kShardHeaderBytes);
    return parse_header(buf, static_cast<std::size_t>(in.gcount()), fs::file_size(path));
}

ActivationBatch read_shard(const fs::path& path) {
    const std::string bytes = detail::read_file(path.string());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const ShardHeader h = parse_header(p, bytes.size(), bytes.size());
    ActivationBatch batch;
    batch.rows.resize(static_cast<Index>(h.n_rows), static_cast<Index>(h.d_model));
    double* out = batch.rows.data();
    const unsigned char* payload = p + kShardHeaderBytes;
    for (Index i = 0; i < batch.rows.size(); ++i) out[i] = detail::get_f32(payload + 4 * i);
    batch.source_tag = path.filename().string();
    batch.row_ids.resize(h.n_rows);
    for (std::uint64_t i = 0; i < h.n_rows; ++i) batch.row_ids[i] = i;
    return batch;
}

fs::path shard_meta_path(const fs::path& shard) {
    fs::path p = shard;
    p += ".meta.json";
    return p;
}

void write_shard_meta(const fs::path& shard, const nlohmann::json& meta) {
    detail::write_file(shard_meta_path(shard).string(), meta.dump(2) + "\n");
}

std::optional<nlohmann::json> read_shard_meta(const fs::path& shard) {
    const fs::path p = shard_meta_path(shard);
    if (!fs::exists(p)) return std::nullopt;
    try {
        return nlohmann::json::parse(detail::read_file(p.string()));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("meta.json", e.what());
    }
}

std::vector<fs::path> list_shards(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("shard directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == kShardExtension) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double normalization_factor(const Eigen::Ref<const Matrix>& rows) {
    if (rows.rows() < 1) throw ConfigError("normalization needs a nonempty batch");
    const double mean_sq = rows.squaredNorm() / static_cast<double>(rows.rows());
    if (!(mean_sq > 0.0)) throw DegenerateInputError("all-zero batch has no normalization factor");
    return std::sqrt(mean_sq);
}

double normalization_factor(const ActivationBatch& batch) { return normalization_factor(batch.rows); }

}  // namespace saekit
