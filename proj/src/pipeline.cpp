#include "wakd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "wakd/errors.hpp"
#include "wakd/log.hpp"
#include "wakd/losses.hpp"
#include "wakd/rng.hpp"

namespace fs = std::filesystem;

namespace wakd {

namespace {

// Seed-stream tags; arbitrary but fixed.
constexpr std::uint64_t kSplitTag = 0x5917;
constexpr std::uint64_t kInitTag = 0x1717;
constexpr std::uint64_t kEpochTagBase = 0xe90c4;
constexpr std::uint64_t kTeacherTag = 1;
constexpr std::uint64_t kBaselineTag = 2;
constexpr std::uint64_t kDistillTag = 3;

std::vector<double> row_vector(const Matrix& m, int i) {
    const auto r = m.row(i);
    return {r.begin(), r.end()};
}

} // namespace

void ExperimentConfig::validate() const {
    generator.validate();
    if (generator.domain_params.size() < 2)
        throw ConfigError("config: need at least 2 domains for leave-one-domain-out runs");
    if (!(tau > 0.0))
        throw ConfigError("config: tau must be positive");
    if (learning_rate < 0.0)
        throw ConfigError("config: learning_rate must be >= 0");
    if (batch_size < 1)
        throw ConfigError("config: batch_size must be >= 1");
    if (eval_every < 1 || checkpoint_every < 1)
        throw ConfigError("config: eval_every and checkpoint_every must be >= 1");
    if (eval_every % checkpoint_every != 0)
        throw ConfigError("config: eval_every must be a multiple of checkpoint_every so every "
                          "evaluated iteration has a stored checkpoint");
    if (teacher_iterations > 0 && eval_every > teacher_iterations)
        throw ConfigError("config: eval_every exceeds teacher_iterations; no evaluation would happen");
    if (distill_iterations > 0 && eval_every > distill_iterations)
        throw ConfigError("config: eval_every exceeds distill_iterations; no evaluation would happen");
    if (seeds.empty())
        throw ConfigError("config: seeds must not be empty");
    if (strategies.empty())
        throw ConfigError("config: strategies must not be empty");
    for (const auto& s : strategies) {
        if (std::find(kStrategyNames.begin(), kStrategyNames.end(), s) == kStrategyNames.end()) {
            std::string valid;
            for (const auto& name : kStrategyNames)
                valid += (valid.empty() ? "" : ", ") + name;
            throw ConfigError("config: unknown strategy '" + s + "' (valid: " + valid + ")");
        }
    }
    if (swad.n_s < 1 || swad.n_e < 1 || !(swad.r > 1.0))
        throw ConfigError("config: swad needs n_s >= 1, n_e >= 1, r > 1");
    if (sma_start_frac < 0.0 || sma_start_frac > 1.0 || wakd_start_frac < 0.0 || wakd_start_frac > 1.0)
        throw ConfigError("config: averaging start fractions must be in [0,1]");
}

double HardLabelObjective::batch_loss(const Matrix&, const Matrix& logits,
                                      const std::vector<int>& labels, Matrix* d_logits) const {
    const int batch = logits.rows;
    if (static_cast<int>(labels.size()) != batch)
        throw ConfigError("hard-label objective: labels/logits size mismatch");
    std::vector<double> losses(static_cast<std::size_t>(batch));
    if (d_logits)
        *d_logits = Matrix(batch, logits.cols);
    for (int i = 0; i < batch; ++i) {
        const auto z = row_vector(logits, i);
        losses[static_cast<std::size_t>(i)] = hard_label_loss(z, labels[static_cast<std::size_t>(i)]);
        if (d_logits) {
            const auto g = hard_label_loss_grad(z, labels[static_cast<std::size_t>(i)]);
            for (int j = 0; j < logits.cols; ++j)
                (*d_logits)(i, j) = g[static_cast<std::size_t>(j)] / batch;
        }
    }
    return batch_mean_loss(losses);
}

DistillObjective::DistillObjective(ArchSpec teacher_arch, ParamVector teacher_params, double tau)
    : teacher_arch_(std::move(teacher_arch)), teacher_params_(std::move(teacher_params)), tau_(tau) {
    if (!(tau_ > 0.0))
        throw DomainError("distill objective: tau must be positive");
    teacher_arch_.validate();
}

double DistillObjective::batch_loss(const Matrix& inputs, const Matrix& logits,
                                    const std::vector<int>&, Matrix* d_logits) const {
    const Matrix teacher_logits = forward(teacher_arch_, teacher_params_, inputs);
    if (teacher_logits.cols != logits.cols)
        throw ConfigError("distill objective: teacher and student class counts differ");
    const int batch = logits.rows;
    std::vector<double> losses(static_cast<std::size_t>(batch));
    if (d_logits)
        *d_logits = Matrix(batch, logits.cols);
    for (int i = 0; i < batch; ++i) {
        const auto zs = row_vector(logits, i);
        const auto zt = row_vector(teacher_logits, i);
        losses[static_cast<std::size_t>(i)] = kd_loss(zs, zt, tau_);
        if (d_logits) {
            const auto g = kd_loss_grad(zs, zt, tau_);
            for (int j = 0; j < logits.cols; ++j)
                (*d_logits)(i, j) = g[static_cast<std::size_t>(j)] / batch;
        }
    }
    return batch_mean_loss(losses);
}

double accuracy(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.rows < 1 || static_cast<int>(labels.size()) != logits.rows)
        throw DomainError("accuracy: labels/logits size mismatch");
    int correct = 0;
    for (int i = 0; i < logits.rows; ++i) {
        int best = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, best))
                best = j;
        if (best == labels[static_cast<std::size_t>(i)])
            ++correct;
    }
    return static_cast<double>(correct) / logits.rows;
}

std::pair<double, double> evaluate(const ArchSpec& arch, const ParamVector& params,
                                   const ExampleSet& examples) {
    if (examples.inputs.rows < 1)
        throw DomainError("evaluate: empty example set");
    const Matrix logits = forward(arch, params, examples.inputs);
    std::vector<double> losses(static_cast<std::size_t>(logits.rows));
    for (int i = 0; i < logits.rows; ++i)
        losses[static_cast<std::size_t>(i)] =
            hard_label_loss(row_vector(logits, i), examples.labels[static_cast<std::size_t>(i)]);
    return {batch_mean_loss(losses), accuracy(logits, examples.labels)};
}

TrainOutput train_model(const ArchSpec& arch, const Objective& objective,
                        const DomainDataset& dataset, const SplitPlan& plan,
                        const TrainSettings& settings, std::uint64_t seed,
                        const fs::path& run_dir) {
    arch.validate();
    if (settings.eval_every < 1 || settings.checkpoint_every < 1)
        throw ConfigError("train_model: eval_every and checkpoint_every must be >= 1");
    if (settings.batch_size < 1)
        throw ConfigError("train_model: batch_size must be >= 1");

    // Fresh checkpoint directory so reruns regenerate identical state.
    std::error_code ec;
    fs::remove_all(run_dir / "ckpt", ec);
    fs::create_directories(run_dir / "ckpt");
    CheckpointStore store(run_dir / "ckpt");

    ParamVector params = init_params(arch, mix_seed(seed, kInitTag));
    store.write({0, params});
    AdamState adam(params.size(), settings.learning_rate);
    TrajectoryLog log;
    const ExampleSet val = collect_split(dataset, plan, Split::Val);

    std::uint64_t epoch = 0;
    std::optional<Batcher> batcher;
    for (std::uint64_t iter = 1; iter <= settings.iterations; ++iter) {
        if (!batcher)
            batcher.emplace(dataset, plan, Split::Train, settings.batch_size,
                            mix_seed(seed, kEpochTagBase + epoch));
        auto batch = batcher->next();
        if (!batch) {
            ++epoch;
            batcher.emplace(dataset, plan, Split::Train, settings.batch_size,
                            mix_seed(seed, kEpochTagBase + epoch));
            batch = batcher->next();
        }
        for (int dom : batch->domain_ids)
            if (dom == plan.target_domain)
                throw ConfigError("train_model: target domain " + std::to_string(dom) +
                                  " leaked into a training batch");

        const Matrix logits = forward(arch, params, batch->inputs);
        Matrix d_logits;
        const double loss = objective.batch_loss(batch->inputs, logits, batch->labels, &d_logits);
        if (!std::isfinite(loss))
            throw NumericError("training aborted at iteration " + std::to_string(iter) +
                               ": loss = " + std::to_string(loss));
        const ParamVector grad = backward(arch, params, batch->inputs, d_logits);
        auto step = adam_step(adam, params, grad);
        params = std::move(step.params);
        adam = std::move(step.state);

        if (iter % settings.checkpoint_every == 0)
            store.write({iter, params});
        if (iter % settings.eval_every == 0) {
            const Matrix val_logits = forward(arch, params, val.inputs);
            const double val_loss = objective.batch_loss(val.inputs, val_logits, val.labels, nullptr);
            log.append({iter, val_loss, accuracy(val_logits, val.labels)});
        }
    }
    log.save_csv(run_dir / "trajectory.csv");
    return {run_dir, log};
}

std::uint64_t derive_split_seed(std::uint64_t run_seed) { return mix_seed(run_seed, kSplitTag); }

CellSeeds derive_cell_seeds(std::uint64_t run_seed, int target_domain) {
    const std::uint64_t base = mix_seed(run_seed, 0x7a26e7ULL + static_cast<std::uint64_t>(target_domain));
    return {mix_seed(base, kTeacherTag), mix_seed(base, kBaselineTag), mix_seed(base, kDistillTag)};
}

namespace {

struct CellOutput {
    std::vector<ResultRow> rows;
};

CellOutput run_cell(const ExperimentConfig& config, const DomainDataset& dataset,
                    const SplitPlan& plan, std::uint64_t seed, const fs::path& cell_dir) {
    const std::string target_name = dataset.domain_by_id(plan.target_domain).name;
    const CellSeeds seeds = derive_cell_seeds(seed, plan.target_domain);
    const ArchSpec teacher_arch{dataset.input_dim, config.teacher_hidden, dataset.num_classes,
                                config.activation};
    const ArchSpec student_arch{dataset.input_dim, config.student_hidden, dataset.num_classes,
                                config.activation};
    const ExampleSet val_set = collect_split(dataset, plan, Split::Val);
    const ExampleSet target_set = collect_domain(dataset, plan.target_domain);

    CellOutput out;
    auto push_row = [&](const std::string& strategy, const ArchSpec& arch, const ParamVector& params,
                        const Segment& segment) {
        ResultRow row;
        row.strategy = strategy;
        row.target_domain = target_name;
        row.seed = seed;
        row.target_acc = evaluate(arch, params, target_set).second;
        row.val_acc = evaluate(arch, params, val_set).second;
        row.segment_start = segment.start_iteration;
        row.segment_end = segment.end_iteration;
        out.rows.push_back(std::move(row));
    };

    const TrainSettings teacher_settings{config.teacher_iterations, config.eval_every,
                                         config.checkpoint_every, config.batch_size,
                                         config.learning_rate};
    const TrainSettings distill_settings{config.distill_iterations, config.eval_every,
                                         config.checkpoint_every, config.batch_size,
                                         config.learning_rate};

    // Teacher: hard labels, then SWAD averaging.
    log_info("  teacher: " + std::to_string(config.teacher_iterations) + " iterations");
    const HardLabelObjective hard_label;
    const auto teacher_out =
        train_model(teacher_arch, hard_label, dataset, plan, teacher_settings, seeds.teacher,
                    cell_dir / "teacher");
    const CheckpointStore teacher_store(teacher_out.run_dir / "ckpt");
    const auto teacher_sel = select_swad_segment(teacher_out.log, config.swad);
    const ParamVector teacher_params = average_segment(teacher_store, teacher_sel.segment);
    write_averaged_model(teacher_out.run_dir / "averaged_swad.wakd", teacher_params,
                         {"swad", teacher_sel.segment.start_iteration,
                          teacher_sel.segment.end_iteration});
    push_row("teacher", teacher_arch, teacher_params, teacher_sel.segment);

    // Independent student baseline: hard labels + SWAD, teacher budget.
    log_info("  baseline student: " + std::to_string(config.teacher_iterations) + " iterations");
    const auto baseline_out =
        train_model(student_arch, hard_label, dataset, plan, teacher_settings, seeds.baseline,
                    cell_dir / "student_baseline");
    const CheckpointStore baseline_store(baseline_out.run_dir / "ckpt");
    const auto baseline_sel = select_swad_segment(baseline_out.log, config.swad);
    const ParamVector baseline_params = average_segment(baseline_store, baseline_sel.segment);
    write_averaged_model(baseline_out.run_dir / "averaged_swad.wakd", baseline_params,
                         {"swad", baseline_sel.segment.start_iteration,
                          baseline_sel.segment.end_iteration});
    push_row("baseline", student_arch, baseline_params, baseline_sel.segment);

    // Distillation from the frozen averaged teacher on the same data.
    log_info("  distillation: " + std::to_string(config.distill_iterations) + " iterations");
    const DistillObjective distill(teacher_arch, teacher_params, config.tau);
    const auto student_out =
        train_model(student_arch, distill, dataset, plan, distill_settings, seeds.distill,
                    cell_dir / "student_kd");
    const CheckpointStore student_store(student_out.run_dir / "ckpt");

    // Every strategy consumes the one student trajectory.
    for (const auto& strategy : config.strategies) {
        ParamVector params;
        Segment segment;
        if (strategy == "erm") {
            const std::uint64_t it = select_erm(student_out.log);
            params = student_store.read(it).params;
            segment = {it, it};
        } else if (strategy == "swad") {
            const auto sel = select_swad_segment(student_out.log, config.swad);
            params = average_segment(student_store, sel.segment);
            segment = sel.segment;
        } else if (strategy == "sma") {
            const std::uint64_t start =
                averaging_start_iteration(config.distill_iterations, config.sma_start_frac);
            const auto sel = select_sma(student_store, student_out.log, start,
                                        [&](const ParamVector& p) {
                                            const Matrix logits = forward(student_arch, p, val_set.inputs);
                                            return accuracy(logits, val_set.labels);
                                        });
            params = sel.params;
            segment = {start, sel.end_iteration};
        } else { // wakd
            const std::uint64_t start =
                averaging_start_iteration(config.distill_iterations, config.wakd_start_frac);
            params = select_wakd(student_store, config.distill_iterations, config.wakd_start_frac);
            segment = {start, config.distill_iterations};
        }
        write_averaged_model(student_out.run_dir / ("averaged_" + strategy + ".wakd"), params,
                             {strategy, segment.start_iteration, segment.end_iteration});
        push_row(strategy, student_arch, params, segment);
    }

    if (!config.keep_teacher_checkpoints) {
        std::error_code ec;
        fs::remove_all(teacher_out.run_dir / "ckpt", ec);
    }
    return out;
}

} // namespace

RunResults run_experiment(const ExperimentConfig& config) {
    config.validate();
    const DomainDataset dataset = generate(config.generator);
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);

    RunResults results;
    for (const auto& target : dataset.domains) {
        for (std::uint64_t seed : config.seeds) {
            log_info("cell target=" + target.name + " seed=" + std::to_string(seed));
            try {
                const auto plans = leave_one_out_splits(dataset, derive_split_seed(seed));
                const SplitPlan* plan = nullptr;
                for (const auto& p : plans)
                    if (p.target_domain == target.id)
                        plan = &p;
                if (!plan)
                    throw ConfigError("no split plan for target domain " + std::to_string(target.id));
                const fs::path cell_dir =
                    out_dir / ("target_" + target.name) / ("seed_" + std::to_string(seed));
                auto cell = run_cell(config, dataset, *plan, seed, cell_dir);
                for (auto& row : cell.rows)
                    results.rows.push_back(std::move(row));
            } catch (const std::exception& e) {
                log_error("cell target=" + target.name + " seed=" + std::to_string(seed) +
                          " failed: " + e.what());
                results.failures.push_back({target.name, seed, e.what()});
            }
        }
    }
    return results;
}

void save_results_csv(const std::vector<ResultRow>& rows, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "strategy,target_domain,seed,target_acc,val_acc,segment_start,segment_end\n";
    char buf[64];
    for (const auto& row : rows) {
        out << row.strategy << ',' << row.target_domain << ',' << row.seed << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", row.target_acc);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", row.val_acc);
        out << buf << ',' << row.segment_start << ',' << row.segment_end << '\n';
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::vector<ResultRow> load_results_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "strategy,target_domain,seed,target_acc,val_acc,segment_start,segment_end")
        throw FormatError(path.string() + ": bad header '" + line + "'");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ss(line);
        ResultRow row;
        std::string cell;
        auto next_cell = [&](const char* field) {
            if (!std::getline(ss, cell, ','))
                throw FormatError(path.string() + ":" + std::to_string(line_no) +
                                  ": missing field '" + field + "'");
            return cell;
        };
        row.strategy = next_cell("strategy");
        row.target_domain = next_cell("target_domain");
        row.seed = std::stoull(next_cell("seed"));
        row.target_acc = std::stod(next_cell("target_acc"));
        row.val_acc = std::stod(next_cell("val_acc"));
        row.segment_start = std::stoull(next_cell("segment_start"));
        row.segment_end = std::stoull(next_cell("segment_end"));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

// teacher and baseline rows first, then the selection strategies.
int strategy_rank(const std::string& name) {
    static const std::vector<std::string> order = {"teacher", "baseline", "erm",
                                                   "swad",    "sma",      "wakd"};
    const auto it = std::find(order.begin(), order.end(), name);
    return it == order.end() ? static_cast<int>(order.size()) : static_cast<int>(it - order.begin());
}

} // namespace

SummaryTable aggregate(const std::vector<ResultRow>& rows) {
    if (rows.empty())
        throw DomainError("aggregate: no result rows");

    std::set<std::string> domain_set;
    std::vector<std::string> strategies;
    for (const auto& row : rows) {
        domain_set.insert(row.target_domain);
        if (std::find(strategies.begin(), strategies.end(), row.strategy) == strategies.end())
            strategies.push_back(row.strategy);
    }
    std::sort(strategies.begin(), strategies.end(), [](const auto& a, const auto& b) {
        const int ra = strategy_rank(a), rb = strategy_rank(b);
        return ra != rb ? ra < rb : a < b;
    });

    SummaryTable table;
    table.strategies = strategies;
    table.domains.assign(domain_set.begin(), domain_set.end());
    table.cells.assign(strategies.size(), std::vector<SummaryCell>(table.domains.size()));
    table.averages.assign(strategies.size(), 0.0);

    for (std::size_t si = 0; si < strategies.size(); ++si) {
        double domain_mean_sum = 0.0;
        int domain_count = 0;
        for (std::size_t di = 0; di < table.domains.size(); ++di) {
            std::vector<double> values;
            for (const auto& row : rows)
                if (row.strategy == strategies[si] && row.target_domain == table.domains[di])
                    values.push_back(row.target_acc);
            // fixed accumulation order keeps the summary bit-identical no
            // matter how rows were ordered across merged results files
            std::sort(values.begin(), values.end());
            SummaryCell& cell = table.cells[si][di];
            cell.count = static_cast<int>(values.size());
            if (values.empty()) {
                cell.mean = std::nan("");
                cell.sd = std::nan("");
                continue;
            }
            double sum = 0.0;
            for (double v : values)
                sum += v;
            cell.mean = sum / static_cast<double>(values.size());
            if (values.size() > 1) {
                double sq = 0.0;
                for (double v : values)
                    sq += (v - cell.mean) * (v - cell.mean);
                cell.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
            } else {
                cell.sd = 0.0;
            }
            domain_mean_sum += cell.mean;
            ++domain_count;
        }
        table.averages[si] = domain_count > 0 ? domain_mean_sum / domain_count : std::nan("");
    }
    return table;
}

void save_summary_csv(const SummaryTable& table, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "strategy";
    for (const auto& dom : table.domains)
        out << ',' << dom << "_mean," << dom << "_sd";
    out << ",avg\n";
    char buf[64];
    for (std::size_t si = 0; si < table.strategies.size(); ++si) {
        out << table.strategies[si];
        for (std::size_t di = 0; di < table.domains.size(); ++di) {
            const auto& cell = table.cells[si][di];
            if (cell.count == 0) {
                out << ",,";
            } else {
                std::snprintf(buf, sizeof(buf), "%.9g", cell.mean);
                out << ',' << buf;
                std::snprintf(buf, sizeof(buf), "%.9g", cell.sd);
                out << ',' << buf;
            }
        }
        std::snprintf(buf, sizeof(buf), "%.9g", table.averages[si]);
        out << ',' << buf << '\n';
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

std::string format_summary_table(const SummaryTable& table) {
    std::ostringstream out;
    char buf[64];
    out << "target-domain accuracy (%), mean +/- sd over seeds\n";
    std::snprintf(buf, sizeof(buf), "%-10s", "strategy");
    out << buf;
    for (const auto& dom : table.domains) {
        std::snprintf(buf, sizeof(buf), " %12s", dom.c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), " %12s", "Avg.");
    out << buf << '\n';
    for (std::size_t si = 0; si < table.strategies.size(); ++si) {
        std::snprintf(buf, sizeof(buf), "%-10s", table.strategies[si].c_str());
        out << buf;
        for (std::size_t di = 0; di < table.domains.size(); ++di) {
            const auto& cell = table.cells[si][di];
            if (cell.count == 0)
                std::snprintf(buf, sizeof(buf), " %12s", "-");
            else
                std::snprintf(buf, sizeof(buf), " %5.1f+/-%-4.1f", 100.0 * cell.mean,
                              100.0 * cell.sd);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), " %12.1f", 100.0 * table.averages[si]);
        out << buf << '\n';
    }
    return std::move(out).str();
}

} // namespace wakd
