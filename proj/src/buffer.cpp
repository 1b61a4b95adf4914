#include "saekit/buffer.hpp"

#include <algorithm>

#include "byte_io.hpp"
#include "saekit/data.hpp"
#include "saekit/errors.hpp"

namespace saekit {

namespace fs = std::filesystem;

MatrixSource::MatrixSource(ActivationBatch batch) : batch_(std::move(batch)) {
    if (batch_.row_ids.empty()) {
        batch_.row_ids.resize(static_cast<std::size_t>(batch_.size()));
        for (std::size_t i = 0; i < batch_.row_ids.size(); ++i) batch_.row_ids[i] = i;
    }
}

Index MatrixSource::read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) {
    const Index k = std::min(max_rows, batch_.size() - cursor_);
    if (k <= 0) return 0;
    dest.middleRows(first_row, k) = batch_.rows.middleRows(cursor_, k);
    for (Index i = 0; i < k; ++i) ids.push_back(batch_.row_ids[static_cast<std::size_t>(cursor_ + i)]);
    cursor_ += k;
    return k;
}

ShardDirectorySource::ShardDirectorySource(const fs::path& dir) : dir_(dir), shards_(list_shards(dir)) {
    if (shards_.empty()) throw IoError("no " + std::string(kShardExtension) + " shards in '" + dir.string() + "'");
    for (const auto& shard : shards_) {
        const ShardHeader h = read_shard_header(shard);
        if (dim_ == 0) {
            dim_ = static_cast<Index>(h.d_model);
        } else if (static_cast<Index>(h.d_model) != dim_) {
            throw FormatError("d_model", "shard '" + shard.string() + "' has width " +
                                             std::to_string(h.d_model) + ", expected " + std::to_string(dim_));
        }
        total_rows_ += h.n_rows;
    }
}

bool ShardDirectorySource::open_next() {
    while (next_shard_ < shards_.size()) {
        const fs::path& path = shards_[next_shard_++];
        const ShardHeader h = read_shard_header(path);
        current_ = std::ifstream(path, std::ios::binary);
        if (!current_) throw IoError("cannot open shard '" + path.string() + "'");
        current_.seekg(static_cast<std::streamoff>(kShardHeaderBytes));
        remaining_in_shard_ = h.n_rows;
        if (remaining_in_shard_ > 0) return true;
    }
    return false;
}

Index ShardDirectorySource::read(Matrix& dest, Index first_row, Index max_rows,
                                 std::vector<std::uint64_t>& ids) {
    Index written = 0;
    while (written < max_rows) {
        if (remaining_in_shard_ == 0 && !open_next()) break;
        const Index k = static_cast<Index>(
            std::min<std::uint64_t>(remaining_in_shard_, static_cast<std::uint64_t>(max_rows - written)));
        scratch_.resize(static_cast<std::size_t>(k * dim_) * 4);
        current_.read(scratch_.data(), static_cast<std::streamsize>(scratch_.size()));
        if (current_.gcount() != static_cast<std::streamsize>(scratch_.size())) {
            throw FormatError("payload", "shard truncated while reading");
        }
        const auto* p = reinterpret_cast<const unsigned char*>(scratch_.data());
        for (Index r = 0; r < k; ++r) {
            for (Index c = 0; c < dim_; ++c) {
                dest(first_row + written + r, c) = detail::get_f32(p + 4 * (r * dim_ + c));
            }
            ids.push_back(next_id_++);
        }
        remaining_in_shard_ -= static_cast<std::uint64_t>(k);
        written += k;
    }
    return written;
}

SyntheticSource::SyntheticSource(SyntheticGroundTruth gt, std::uint64_t seed,
                                 std::optional<std::uint64_t> limit)
    : gt_(std::move(gt)), sampler_(gt_, seed), limit_(limit) {}

Index SyntheticSource::read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) {
    Index k = max_rows;
    if (limit_) k = static_cast<Index>(std::min<std::uint64_t>(*limit_ - produced_, static_cast<std::uint64_t>(k)));
    for (Index r = 0; r < k; ++r) {
        sampler_.next(dest.row(first_row + r).data());
        ids.push_back(produced_++);
    }
    return k;
}

PrefetchingSource::PrefetchingSource(std::unique_ptr<RowSource> inner, Index chunk_rows, std::size_t max_chunks)
    : inner_(std::move(inner)),
      dim_(inner_->dim()),
      tag_(inner_->tag()),
      chunk_rows_(chunk_rows),
      max_chunks_(max_chunks) {
    if (chunk_rows_ < 1 || max_chunks_ < 1) throw ConfigError("prefetch needs positive chunk size and depth");
    worker_ = std::thread([this] { produce(); });
}

PrefetchingSource::~PrefetchingSource() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void PrefetchingSource::produce() {
    try {
        for (;;) {
            Chunk chunk;
            chunk.rows.resize(chunk_rows_, dim_);
            const Index k = inner_->read(chunk.rows, 0, chunk_rows_, chunk.ids);
            chunk.rows.conservativeResize(k, dim_);
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || queue_.size() < max_chunks_; });
            if (stop_) return;
            if (k == 0) {
                done_ = true;
                cv_.notify_all();
                return;
            }
            queue_.push_back(std::move(chunk));
            cv_.notify_all();
        }
    } catch (...) {
        std::lock_guard lock(mutex_);
        error_ = std::current_exception();
        done_ = true;
        cv_.notify_all();
    }
}

Index PrefetchingSource::read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) {
    Index written = 0;
    std::unique_lock lock(mutex_);
    while (written < max_rows) {
        cv_.wait(lock, [this] { return !queue_.empty() || done_; });
        if (queue_.empty()) {
            if (error_) std::rethrow_exception(error_);
            break;
        }
        Chunk& chunk = queue_.front();
        const Index k = std::min(max_rows - written, chunk.rows.rows() - chunk.consumed);
        dest.middleRows(first_row + written, k) = chunk.rows.middleRows(chunk.consumed, k);
        ids.insert(ids.end(), chunk.ids.begin() + chunk.consumed, chunk.ids.begin() + chunk.consumed + k);
        chunk.consumed += k;
        written += k;
        if (chunk.consumed == chunk.rows.rows()) {
            queue_.pop_front();
            cv_.notify_all();
        }
    }
    return written;
}

ActivationBuffer::ActivationBuffer(RowSource& source, Index capacity, std::uint64_t seed)
    : source_(&source), capacity_(capacity), rng_(make_rng(seed, "buffer/shuffle")) {
    if (capacity_ < 2) throw ConfigError("buffer capacity must be >= 2 rows");
    rows_.resize(capacity_, source.dim());
    ids_.reserve(static_cast<std::size_t>(capacity_));
}

void ActivationBuffer::refill() {
    if (!exhausted_ && size_ < capacity_) {
        ids_.resize(static_cast<std::size_t>(size_));
        while (size_ < capacity_) {
            const Index k = source_->read(rows_, size_, capacity_ - size_, ids_);
            if (k == 0) {
                exhausted_ = true;
                break;
            }
            size_ += k;
        }
    }
    ++refills_;
    // Fisher-Yates over the live rows.
    for (Index i = size_ - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng_() % static_cast<std::uint64_t>(i + 1));
        if (j != i) {
            rows_.row(i).swap(rows_.row(j));
            std::swap(ids_[static_cast<std::size_t>(i)], ids_[static_cast<std::size_t>(j)]);
        }
    }
}

Eigen::Ref<const Matrix> ActivationBuffer::prime() {
    if (refills_ == 0) refill();
    return std::as_const(rows_).topRows(size_);
}

std::optional<ActivationBatch> ActivationBuffer::next_batch(Index batch_rows) {
    if (batch_rows < 1) throw ConfigError("batch size must be >= 1");
    ActivationBatch out;
    out.rows.resize(batch_rows, rows_.cols());
    out.source_tag = source_->tag();
    out.row_ids.reserve(static_cast<std::size_t>(batch_rows));
    Index taken = 0;
    while (taken < batch_rows) {
        if (needs_refill() && !exhausted_) refill();
        if (size_ == 0) break;
        // Rows that can leave before the buffer drops to half full.
        const Index room = exhausted_ ? size_ : size_ - capacity_ / 2;
        const Index k = std::min(batch_rows - taken, room);
        out.rows.middleRows(taken, k) = rows_.middleRows(size_ - k, k);
        out.row_ids.insert(out.row_ids.end(), ids_.begin() + (size_ - k), ids_.begin() + size_);
        size_ -= k;
        ids_.resize(static_cast<std::size_t>(size_));
        taken += k;
    }
    if (taken == 0) return std::nullopt;
    out.rows.conservativeResize(taken, rows_.cols());
    return out;
}

}  // namespace saekit
