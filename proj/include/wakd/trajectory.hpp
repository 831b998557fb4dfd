#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "wakd/nn.hpp"

namespace wakd {

// File layout (all little-endian):
//   bytes 0..3   magic "WAKD"
//   bytes 4..7   u32 version = 1
//   bytes 8..15  u64 iteration
//   bytes 16..23 u64 param_count
//   bytes 24..   param_count IEEE-754 float32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;
// Marks averaged models written outside any training iteration.
inline constexpr std::uint64_t kAveragedIteration = UINT64_MAX;

struct Checkpoint {
    std::uint64_t iteration = 0;
    ParamVector params;
};

// Low-level codec; the store wraps these with naming and a manifest.
void write_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

class CheckpointStore;

// Ascending iterator over stored checkpoints; loads one file per step.
class CheckpointStream {
public:
    std::optional<Checkpoint> next();

private:
    friend class CheckpointStore;
    CheckpointStream(std::filesystem::path dir, std::vector<std::uint64_t> iterations)
        : dir_(std::move(dir)), iterations_(std::move(iterations)) {}

    std::filesystem::path dir_;
    std::vector<std::uint64_t> iterations_;
    std::size_t pos_ = 0;
};

// One directory of <iteration>.wakd files. Writes go through a temp file and
// an atomic rename, so concurrent readers never observe partial checkpoints.
class CheckpointStore {
public:
    // Scans the directory for existing checkpoints; with create=true the
    // directory is created if missing.
    explicit CheckpointStore(std::filesystem::path dir, bool create = false);

    void write(const Checkpoint& ck);          // ConflictError on duplicate iteration
    Checkpoint read(std::uint64_t iteration) const; // NotFoundError if absent
    bool contains(std::uint64_t iteration) const;

    // Ascending iteration manifest.
    const std::vector<std::uint64_t>& iterations() const { return iterations_; }
    bool empty() const { return iterations_.empty(); }
    std::uint64_t max_iteration() const; // NotFoundError when empty

    // Checkpoints with from <= iteration <= to, ascending.
    CheckpointStream stream(std::uint64_t from, std::uint64_t to) const;

    const std::filesystem::path& directory() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::uint64_t> iterations_;
};

struct EvalRecord {
    std::uint64_t iteration = 0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

// Validation metrics recorded during training, ordered by iteration.
struct TrajectoryLog {
    std::vector<EvalRecord> records;

    // Enforces strictly increasing iterations, finite loss, accuracy in [0,1].
    void append(const EvalRecord& rec);

    // CSV with header "iteration,val_loss,val_accuracy", 9 significant digits.
    void save_csv(const std::filesystem::path& path) const;
    static TrajectoryLog load_csv(const std::filesystem::path& path);
};

} // namespace wakd
