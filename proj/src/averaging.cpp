#include "wakd/averaging.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "wakd/errors.hpp"

namespace wakd {

void RunningMean::add(const ParamVector& params) {
    if (count_ == 0 && sum_.empty())
        sum_.assign(params.size(), 0.0);
    if (params.size() != sum_.size())
        throw DomainError("running mean: length " + std::to_string(params.size()) +
                          " does not match accumulator length " + std::to_string(sum_.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        sum_[i] += static_cast<double>(params[i]);
    ++count_;
}

ParamVector RunningMean::mean() const {
    const auto wide = mean_f64();
    ParamVector out(wide.size());
    for (std::size_t i = 0; i < wide.size(); ++i)
        out[i] = static_cast<float>(wide[i]);
    return out;
}

std::vector<double> RunningMean::mean_f64() const {
    if (count_ == 0)
        throw DomainError("running mean: no items added");
    std::vector<double> out(sum_.size());
    const double n = static_cast<double>(count_);
    for (std::size_t i = 0; i < sum_.size(); ++i)
        out[i] = sum_[i] / n;
    return out;
}

std::uint64_t select_erm(const TrajectoryLog& log) {
    if (log.records.empty())
        throw DomainError("select_erm: empty trajectory log");
    std::size_t best = 0;
    for (std::size_t i = 1; i < log.records.size(); ++i)
        if (log.records[i].val_accuracy > log.records[best].val_accuracy)
            best = i;
    return log.records[best].iteration;
}

SwadSelection select_swad_segment(const TrajectoryLog& log, const SwadConfig& cfg) {
    if (log.records.empty())
        throw DomainError("select_swad_segment: empty trajectory log");
    if (cfg.n_s < 1 || cfg.n_e < 1 || !(cfg.r > 1.0))
        throw DomainError("select_swad_segment: need n_s >= 1, n_e >= 1, r > 1");

    const std::size_t m = log.records.size();
    const auto loss = [&](std::size_t i) { return log.records[i].val_loss; };

    // Start: first index whose loss is not undercut within its n_s window.
    std::size_t start = m - 1;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t window_end = std::min(k + static_cast<std::size_t>(cfg.n_s), m);
        bool is_min = true;
        for (std::size_t j = k + 1; j < window_end; ++j)
            if (loss(j) < loss(k)) {
                is_min = false;
                break;
            }
        if (is_min) {
            start = k;
            break;
        }
    }

    // End: record before the first full n_e-run of losses above r * loss(start).
    const double threshold = cfg.r * loss(start);
    std::size_t end = m - 1;
    const std::size_t run = static_cast<std::size_t>(cfg.n_e);
    for (std::size_t b = start + 1; b + run <= m; ++b) {
        bool all_above = true;
        for (std::size_t j = b; j < b + run; ++j)
            if (!(loss(j) > threshold)) {
                all_above = false;
                break;
            }
        if (all_above) {
            end = b - 1;
            break;
        }
    }

    SwadSelection sel;
    sel.start_index = start;
    sel.end_index = end;
    sel.segment = {log.records[start].iteration, log.records[end].iteration};
    return sel;
}

ParamVector average_segment(const CheckpointStore& store, const Segment& segment) {
    if (segment.start_iteration > segment.end_iteration)
        throw DomainError("average_segment: start " + std::to_string(segment.start_iteration) +
                          " > end " + std::to_string(segment.end_iteration));
    RunningMean mean;
    auto stream = store.stream(segment.start_iteration, segment.end_iteration);
    while (auto ck = stream.next())
        mean.add(ck->params);
    if (mean.count() == 0)
        throw DomainError("average_segment: no checkpoints in [" +
                          std::to_string(segment.start_iteration) + ", " +
                          std::to_string(segment.end_iteration) + "]");
    return mean.mean();
}

SmaSelection select_sma(const CheckpointStore& store, const TrajectoryLog& log,
                        std::uint64_t start_iteration,
                        const std::function<double(const ParamVector&)>& val_accuracy_of) {
    if (log.records.empty())
        throw DomainError("select_sma: empty trajectory log");

    bool found = false;
    SmaSelection best;
    RunningMean mean;
    auto stream = store.stream(start_iteration, log.records.back().iteration);
    std::optional<Checkpoint> pending = stream.next();
    for (const auto& rec : log.records) {
        if (rec.iteration < start_iteration)
            continue;
        while (pending && pending->iteration <= rec.iteration) {
            mean.add(pending->params);
            pending = stream.next();
        }
        if (mean.count() == 0)
            continue; // no checkpoints up to this record yet
        ParamVector prefix = mean.mean();
        const double acc = val_accuracy_of(prefix);
        if (!found || acc > best.val_accuracy) {
            found = true;
            best.end_iteration = rec.iteration;
            best.params = std::move(prefix);
            best.val_accuracy = acc;
        }
    }
    if (!found)
        throw DomainError("select_sma: no evaluation records with checkpoints at or after iteration " +
                          std::to_string(start_iteration));
    return best;
}

std::uint64_t averaging_start_iteration(std::uint64_t total_iterations, double start_frac) {
    if (start_frac < 0.0 || start_frac > 1.0)
        throw DomainError("averaging start fraction must be in [0,1], got " + std::to_string(start_frac));
    const double raw = start_frac * static_cast<double>(total_iterations);
    // Nudge below the exact product so ceil(0.1 * 50000) stays 5000 despite
    // 0.1 not being representable.
    double start = std::ceil(raw - raw * 1e-12 - 1e-12);
    if (start < 0.0)
        start = 0.0;
    return static_cast<std::uint64_t>(start);
}

ParamVector select_wakd(const CheckpointStore& store, std::uint64_t total_iterations,
                        double start_frac) {
    if (total_iterations < 1)
        throw DomainError("select_wakd: total iterations must be >= 1");
    const std::uint64_t start = averaging_start_iteration(total_iterations, start_frac);
    RunningMean mean;
    auto stream = store.stream(start, total_iterations);
    while (auto ck = stream.next())
        mean.add(ck->params);
    if (mean.count() == 0)
        throw DomainError("select_wakd: no checkpoints in [" + std::to_string(start) + ", " +
                          std::to_string(total_iterations) + "]");
    return mean.mean();
}

void write_averaged_model(const std::filesystem::path& path, const ParamVector& params,
                          const AveragedModelInfo& info) {
    write_checkpoint_file(path, Checkpoint{kAveragedIteration, params});
    nlohmann::json sidecar{
        {"strategy", info.strategy},
        {"segment_start", info.segment_start},
        {"segment_end", info.segment_end},
    };
    const std::filesystem::path sidecar_path = path.string() + ".json";
    std::ofstream out(sidecar_path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + sidecar_path.string() + " for writing");
    out << sidecar.dump(2) << '\n';
}

} // namespace wakd
