#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wakd/averaging.hpp"
#include "wakd/data.hpp"
#include "wakd/nn.hpp"
#include "wakd/trajectory.hpp"

namespace wakd {

// Everything one teacher-train / distill / select / evaluate run needs.
struct ExperimentConfig {
    GeneratorSpec generator;
    std::vector<int> teacher_hidden = {64, 64};
    std::vector<int> student_hidden = {8};
    Activation activation = Activation::Tanh;
    std::uint64_t teacher_iterations = 5000;
    std::uint64_t distill_iterations = 50000;
    std::uint64_t eval_every = 100;
    std::uint64_t checkpoint_every = 1;
    int batch_size = 64;
    double learning_rate = 5e-5;
    double tau = 5.0;
    SwadConfig swad;
    double sma_start_frac = 0.1;
    double wakd_start_frac = 0.1;
    std::vector<std::string> strategies = {"erm", "swad", "sma", "wakd"};
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::string output_dir = "wakd-out";
    bool keep_teacher_checkpoints = false;

    void validate() const; // ConfigError, names the offending field
};

inline const std::vector<std::string> kStrategyNames = {"erm", "swad", "sma", "wakd"};

struct TrainSettings {
    std::uint64_t iterations = 0;
    std::uint64_t eval_every = 100;
    std::uint64_t checkpoint_every = 1;
    int batch_size = 64;
    double learning_rate = 5e-5;
};

// Per-batch training objective. Returns the mean loss over the batch; when
// d_logits is non-null it receives d(mean loss)/d(logits).
class Objective {
public:
    virtual ~Objective() = default;
    virtual double batch_loss(const Matrix& inputs, const Matrix& logits,
                              const std::vector<int>& labels, Matrix* d_logits) const = 0;
};

// Cross-entropy against the true labels.
class HardLabelObjective final : public Objective {
public:
    double batch_loss(const Matrix& inputs, const Matrix& logits, const std::vector<int>& labels,
                      Matrix* d_logits) const override;
};

// Tempered cross-entropy against a frozen teacher evaluated on the same batch.
class DistillObjective final : public Objective {
public:
    DistillObjective(ArchSpec teacher_arch, ParamVector teacher_params, double tau);
    double batch_loss(const Matrix& inputs, const Matrix& logits, const std::vector<int>& labels,
                      Matrix* d_logits) const override;
    const ParamVector& teacher_params() const { return teacher_params_; }

private:
    ArchSpec teacher_arch_;
    ParamVector teacher_params_;
    double tau_;
};

struct TrainOutput {
    std::filesystem::path run_dir; // contains ckpt/ and trajectory.csv
    TrajectoryLog log;
};

// Adam training on the plan's source-train batches, with a checkpoint every
// checkpoint_every iterations (iteration 0 holds the initialization) and a
// validation record every eval_every iterations. Deterministic given seed.
TrainOutput train_model(const ArchSpec& arch, const Objective& objective,
                        const DomainDataset& dataset, const SplitPlan& plan,
                        const TrainSettings& settings, std::uint64_t seed,
                        const std::filesystem::path& run_dir);

// Fraction of argmax-correct predictions; argmax ties resolve to the lowest
// class index.
double accuracy(const Matrix& logits, const std::vector<int>& labels);

// (mean cross-entropy, accuracy) of a model on an example set.
std::pair<double, double> evaluate(const ArchSpec& arch, const ParamVector& params,
                                   const ExampleSet& examples);

// Sub-seeds for one (run seed, target domain) cell.
struct CellSeeds {
    std::uint64_t teacher = 0;
    std::uint64_t baseline = 0;
    std::uint64_t distill = 0;
};
std::uint64_t derive_split_seed(std::uint64_t run_seed);
CellSeeds derive_cell_seeds(std::uint64_t run_seed, int target_domain);

struct ResultRow {
    std::string strategy;
    std::string target_domain;
    std::uint64_t seed = 0;
    double target_acc = 0.0;
    double val_acc = 0.0;
    std::uint64_t segment_start = 0;
    std::uint64_t segment_end = 0;
};

struct CellFailure {
    std::string target_domain;
    std::uint64_t seed = 0;
    std::string message;
};

struct RunResults {
    std::vector<ResultRow> rows;
    std::vector<CellFailure> failures;
};

// Full protocol over every (target domain, seed) cell: train the teacher on
// hard labels, average it with SWAD, distill the frozen averaged teacher into
// the student, train the independent hard-label student baseline, then apply
// every requested strategy to the one student trajectory and score the
// selected models on the held-out target domain. Cell failures are recorded
// and the remaining cells proceed.
RunResults run_experiment(const ExperimentConfig& config);

void save_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> load_results_csv(const std::filesystem::path& path);

struct SummaryCell {
    double mean = 0.0;
    double sd = 0.0;
    int count = 0;
};

// Per (strategy, target domain) mean and sample standard deviation across
// seeds, plus the unweighted per-strategy average over domains.
struct SummaryTable {
    std::vector<std::string> strategies;
    std::vector<std::string> domains;
    std::vector<std::vector<SummaryCell>> cells; // [strategy][domain]
    std::vector<double> averages;                // [strategy]
};

SummaryTable aggregate(const std::vector<ResultRow>& rows);
void save_summary_csv(const SummaryTable& table, const std::filesystem::path& path);
std::string format_summary_table(const SummaryTable& table); // accuracies in percent

} // namespace wakd
