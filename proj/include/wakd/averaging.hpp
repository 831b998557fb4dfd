#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "wakd/nn.hpp"
#include "wakd/trajectory.hpp"

namespace wakd {

// Segment-selection hyperparameters for SWAD.
struct SwadConfig {
    int n_s = 3;
    int n_e = 6;
    double r = 1.3;
};

// Inclusive range of training iterations.
struct Segment {
    std::uint64_t start_iteration = 0;
    std::uint64_t end_iteration = 0;
};

// Streaming mean with a float64 sum accumulator; mean(k items) equals the
// offline sum/k exactly.
class RunningMean {
public:
    void add(const ParamVector& params); // DomainError on length mismatch
    std::size_t count() const { return count_; }
    ParamVector mean() const;            // DomainError when empty; float32 result
    std::vector<double> mean_f64() const; // the same mean before float32 rounding

private:
    std::vector<double> sum_;
    std::size_t count_ = 0;
};

// Iteration of the record with the best val_accuracy; ties break to the
// earliest iteration.
std::uint64_t select_erm(const TrajectoryLog& log);

struct SwadSelection {
    Segment segment;
    std::size_t start_index = 0; // indices into log.records
    std::size_t end_index = 0;
};

// Start: first record whose loss is the minimum of the next n_s records
// (window truncated at the end of the log). End: the record just before the
// first full run of n_e records whose losses all exceed r * loss(start); if
// no such run exists the segment extends to the last record.
SwadSelection select_swad_segment(const TrajectoryLog& log, const SwadConfig& cfg);

// Mean of all stored checkpoints inside the segment (inclusive).
ParamVector average_segment(const CheckpointStore& store, const Segment& segment);

struct SmaSelection {
    std::uint64_t end_iteration = 0;
    ParamVector params;
    double val_accuracy = 0.0;
};

// Prefix averaging from start_iteration: at every evaluation record at or
// after the start, the mean of checkpoints in [start, t] is scored with
// val_accuracy_of; the best-scoring prefix wins (ties break to the earliest).
SmaSelection select_sma(const CheckpointStore& store, const TrajectoryLog& log,
                        std::uint64_t start_iteration,
                        const std::function<double(const ParamVector&)>& val_accuracy_of);

// ceil(start_frac * total_iterations) as an integer, robust to the usual
// binary representation of fractions like 0.1.
std::uint64_t averaging_start_iteration(std::uint64_t total_iterations, double start_frac);

// Mean of all checkpoints from ceil(start_frac * T) through T. Needs no
// validation data.
ParamVector select_wakd(const CheckpointStore& store, std::uint64_t total_iterations,
                        double start_frac = 0.1);

struct AveragedModelInfo {
    std::string strategy;
    std::uint64_t segment_start = 0;
    std::uint64_t segment_end = 0;
};

// Checkpoint file with the reserved iteration value plus a "<path>.json"
// sidecar carrying {strategy, segment_start, segment_end}.
void write_averaged_model(const std::filesystem::path& path, const ParamVector& params,
                          const AveragedModelInfo& info);

} // namespace wakd
