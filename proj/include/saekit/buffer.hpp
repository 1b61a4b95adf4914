#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "saekit/rng.hpp"
#include "saekit/synthetic.hpp"
#include "saekit/types.hpp"

namespace saekit {

// A sequential stream of activation rows.
class RowSource {
public:
    virtual ~RowSource() = default;

    virtual Index dim() const = 0;

    // Writes up to `max_rows` rows into `dest` starting at row `first_row` and
    // appends each row's source index to `ids`. Returns the number written;
    // zero means the source is exhausted.
    virtual Index read(Matrix& dest, Index first_row, Index max_rows,
                       std::vector<std::uint64_t>& ids) = 0;

    virtual std::string tag() const = 0;
};

// Serves the rows of an in-memory batch once.
class MatrixSource final : public RowSource {
public:
    explicit MatrixSource(ActivationBatch batch);

    Index dim() const override { return batch_.dim(); }
    Index read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) override;
    std::string tag() const override { return batch_.source_tag; }

private:
    ActivationBatch batch_;
    Index cursor_ = 0;
};

// Reads every SAEACT01 shard of a directory in name order, streaming rows.
// Row ids are global positions across the concatenated shards.
class ShardDirectorySource final : public RowSource {
public:
    explicit ShardDirectorySource(const std::filesystem::path& dir);

    Index dim() const override { return dim_; }
    Index read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) override;
    std::string tag() const override { return dir_.string(); }

    std::uint64_t total_rows() const { return total_rows_; }

private:
    bool open_next();

    std::filesystem::path dir_;
    std::vector<std::filesystem::path> shards_;
    std::size_t next_shard_ = 0;
    std::ifstream current_;
    std::uint64_t remaining_in_shard_ = 0;
    std::uint64_t next_id_ = 0;
    std::uint64_t total_rows_ = 0;
    Index dim_ = 0;
    std::vector<char> scratch_;
};

// Draws rows from a synthetic ground truth; unbounded when `limit` is empty.
class SyntheticSource final : public RowSource {
public:
    SyntheticSource(SyntheticGroundTruth gt, std::uint64_t seed,
                    std::optional<std::uint64_t> limit = std::nullopt);

    Index dim() const override { return gt_.input_dim(); }
    Index read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) override;
    std::string tag() const override { return "synthetic"; }

private:
    SyntheticGroundTruth gt_;
    SyntheticSampler sampler_;
    std::optional<std::uint64_t> limit_;
    std::uint64_t produced_ = 0;
};

// Reads ahead from another source on a background thread into a bounded queue
// of chunks. The row order is identical to reading the inner source directly.
class PrefetchingSource final : public RowSource {
public:
    PrefetchingSource(std::unique_ptr<RowSource> inner, Index chunk_rows, std::size_t max_chunks);
    ~PrefetchingSource() override;

    PrefetchingSource(const PrefetchingSource&) = delete;
    PrefetchingSource& operator=(const PrefetchingSource&) = delete;

    Index dim() const override { return dim_; }
    Index read(Matrix& dest, Index first_row, Index max_rows, std::vector<std::uint64_t>& ids) override;
    std::string tag() const override { return tag_; }

private:
    struct Chunk {
        Matrix rows;
        std::vector<std::uint64_t> ids;
        Index consumed = 0;
    };

    void produce();

    std::unique_ptr<RowSource> inner_;
    Index dim_;
    std::string tag_;
    Index chunk_rows_;
    std::size_t max_chunks_;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Chunk> queue_;
    bool done_ = false;
    bool stop_ = false;
    std::exception_ptr error_;
    std::thread worker_;
};

// Shuffling activation buffer. Holds up to `capacity` rows; whenever it is at
// most half full it is topped up to capacity from the source and the whole
// buffer is reshuffled. Batches are drawn without replacement, so every source
// row is yielded exactly once.
class ActivationBuffer {
public:
    ActivationBuffer(RowSource& source, Index capacity, std::uint64_t seed);

    // Returns std::nullopt once the source is exhausted and the buffer empty.
    // The final batch may be short.
    std::optional<ActivationBatch> next_batch(Index batch_rows);

    // Performs the initial fill if it has not happened and returns the rows
    // currently buffered.
    Eigen::Ref<const Matrix> prime();

    Index size() const { return size_; }
    Index capacity() const { return capacity_; }
    std::size_t refill_count() const { return refills_; }

private:
    bool needs_refill() const { return 2 * size_ <= capacity_; }
    void refill();

    RowSource* source_;
    Index capacity_;
    Matrix rows_;
    std::vector<std::uint64_t> ids_;
    Index size_ = 0;
    Rng rng_;
    bool exhausted_ = false;
    std::size_t refills_ = 0;
};

}  // namespace saekit
