// Command-line front end: dataset generation, full experiment runs, standalone
// checkpoint averaging, and results aggregation as composable subcommands.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 partial cell failures
// during a run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wakd/averaging.hpp"
#include "wakd/config.hpp"
#include "wakd/data.hpp"
#include "wakd/errors.hpp"
#include "wakd/log.hpp"
#include "wakd/pipeline.hpp"
#include "wakd/trajectory.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
        value = std::stoull(text, &used);
    } catch (const std::exception&) {
        throw wakd::ConfigError(what + ": '" + text + "' is not a non-negative integer");
    }
    if (used != text.size())
        throw wakd::ConfigError(what + ": '" + text + "' is not a non-negative integer");
    return value;
}

double parse_f64(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        throw wakd::ConfigError(what + ": '" + text + "' is not a number");
    }
    if (used != text.size())
        throw wakd::ConfigError(what + ": '" + text + "' is not a number");
    return value;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split_csv_list(text))
        seeds.push_back(parse_u64(part, "--seeds"));
    return seeds;
}

wakd::SwadConfig parse_swad_triple(const std::string& text) {
    const auto parts = split_csv_list(text);
    if (parts.size() != 3)
        throw wakd::ConfigError("--swad expects n_s,n_e,r (three comma-separated values), got '" +
                                text + "'");
    wakd::SwadConfig cfg;
    cfg.n_s = static_cast<int>(parse_u64(parts[0], "--swad n_s"));
    cfg.n_e = static_cast<int>(parse_u64(parts[1], "--swad n_e"));
    cfg.r = parse_f64(parts[2], "--swad r");
    return cfg;
}

// "2,8,3" -> input 2, hidden [8], 3 classes.
wakd::ArchSpec parse_arch(const std::string& text, wakd::Activation activation) {
    const auto parts = split_csv_list(text);
    if (parts.size() < 2)
        throw wakd::ConfigError("--arch expects at least input,classes, got '" + text + "'");
    wakd::ArchSpec arch;
    arch.input_dim = static_cast<int>(parse_u64(parts.front(), "--arch"));
    for (std::size_t i = 1; i + 1 < parts.size(); ++i)
        arch.hidden_dims.push_back(static_cast<int>(parse_u64(parts[i], "--arch")));
    arch.num_classes = static_cast<int>(parse_u64(parts.back(), "--arch"));
    arch.activation = activation;
    arch.validate();
    return arch;
}

// All examples of every domain in one evaluation set.
wakd::ExampleSet pool_dataset(const wakd::DomainDataset& dataset) {
    int total = 0;
    for (const auto& dom : dataset.domains)
        total += static_cast<int>(dom.labels.size());
    wakd::ExampleSet set;
    set.inputs = wakd::Matrix(total, dataset.input_dim);
    set.labels.reserve(static_cast<std::size_t>(total));
    set.domain_ids.reserve(static_cast<std::size_t>(total));
    int row = 0;
    for (const auto& dom : dataset.domains)
        for (std::size_t i = 0; i < dom.labels.size(); ++i) {
            for (int j = 0; j < dataset.input_dim; ++j)
                set.inputs(row, j) = dom.features[i][static_cast<std::size_t>(j)];
            set.labels.push_back(dom.labels[i]);
            set.domain_ids.push_back(dom.id);
            ++row;
        }
    return set;
}

struct RunArgs {
    std::string config_path;
    std::string out_dir;
    std::string seeds;
};

int cmd_run(const RunArgs& args) {
    wakd::ExperimentConfig config;
    if (!args.config_path.empty())
        config = wakd::load_experiment_config(args.config_path);
    if (!args.out_dir.empty())
        config.output_dir = args.out_dir;
    if (!args.seeds.empty())
        config.seeds = parse_seed_list(args.seeds);
    config.validate();

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    {
        std::ofstream cfg_out(out_dir / "config.json", std::ios::trunc);
        if (!cfg_out)
            throw wakd::IoError("cannot open " + (out_dir / "config.json").string() +
                                " for writing");
        cfg_out << wakd::canonical_config_json(config);
    }

    const wakd::RunResults results = wakd::run_experiment(config);
    wakd::save_results_csv(results.rows, out_dir / "results.csv");
    if (!results.rows.empty()) {
        const wakd::SummaryTable table = wakd::aggregate(results.rows);
        wakd::save_summary_csv(table, out_dir / "summary.csv");
        std::cout << wakd::format_summary_table(table);
    }
    std::cout << "wrote " << (out_dir / "results.csv").string() << '\n';

    if (!results.failures.empty()) {
        for (const auto& f : results.failures)
            std::cerr << "failed cell target=" << f.target_domain << " seed=" << f.seed << ": "
                      << f.message << '\n';
        std::cerr << results.failures.size() << " cell(s) failed\n";
        return 2;
    }
    return 0;
}

struct AverageArgs {
    std::string ckpt_dir;
    std::string strategy;
    std::string trajectory;
    std::string out;
    double start_frac = 0.1;
    bool start_frac_given = false;
    std::string swad;
    std::string arch;
    std::string activation = "tanh";
    std::string val_data;
};

int cmd_average(const AverageArgs& args) {
    const std::string& strategy = args.strategy;
    const bool needs_trajectory = strategy == "erm" || strategy == "swad" || strategy == "sma";
    if (needs_trajectory && args.trajectory.empty())
        throw wakd::ConfigError("strategy '" + strategy + "' requires --trajectory");
    if (strategy == "wakd" && !args.trajectory.empty())
        throw wakd::ConfigError("strategy 'wakd' needs no validation data; remove --trajectory");
    if (strategy != "swad" && !args.swad.empty())
        throw wakd::ConfigError("--swad only applies to strategy 'swad'");
    if (strategy != "sma" && strategy != "wakd" && args.start_frac_given)
        throw wakd::ConfigError("--start-frac only applies to strategies 'sma' and 'wakd'");
    if (strategy == "sma" && (args.arch.empty() || args.val_data.empty()))
        throw wakd::ConfigError("strategy 'sma' requires --arch and --val-data to score candidate "
                                "averages");
    if (strategy != "sma" && (!args.arch.empty() || !args.val_data.empty()))
        throw wakd::ConfigError("--arch/--val-data only apply to strategy 'sma'");

    const wakd::CheckpointStore store{fs::path(args.ckpt_dir)};
    if (store.empty())
        throw wakd::ConfigError("no checkpoints found in " + args.ckpt_dir);
    const std::uint64_t total = store.max_iteration();

    wakd::ParamVector params;
    wakd::Segment segment;
    if (strategy == "erm") {
        const auto log = wakd::TrajectoryLog::load_csv(args.trajectory);
        const std::uint64_t it = wakd::select_erm(log);
        params = store.read(it).params;
        segment = {it, it};
    } else if (strategy == "swad") {
        const auto log = wakd::TrajectoryLog::load_csv(args.trajectory);
        const wakd::SwadConfig cfg = args.swad.empty() ? wakd::SwadConfig{} : parse_swad_triple(args.swad);
        const auto sel = wakd::select_swad_segment(log, cfg);
        params = wakd::average_segment(store, sel.segment);
        segment = sel.segment;
    } else if (strategy == "sma") {
        const auto log = wakd::TrajectoryLog::load_csv(args.trajectory);
        wakd::Activation act;
        if (args.activation == "tanh")
            act = wakd::Activation::Tanh;
        else if (args.activation == "relu")
            act = wakd::Activation::Relu;
        else
            throw wakd::ConfigError("--activation must be 'tanh' or 'relu', got '" +
                                    args.activation + "'");
        const wakd::ArchSpec arch = parse_arch(args.arch, act);
        const wakd::ExampleSet val = pool_dataset(wakd::load_dataset_csv(args.val_data));
        const std::uint64_t start = wakd::averaging_start_iteration(total, args.start_frac);
        const auto sel = wakd::select_sma(store, log, start, [&](const wakd::ParamVector& p) {
            return wakd::accuracy(wakd::forward(arch, p, val.inputs), val.labels);
        });
        params = sel.params;
        segment = {start, sel.end_iteration};
    } else if (strategy == "wakd") {
        params = wakd::select_wakd(store, total, args.start_frac);
        segment = {wakd::averaging_start_iteration(total, args.start_frac), total};
    } else {
        throw wakd::ConfigError("unknown strategy '" + strategy +
                                "' (valid: erm, swad, sma, wakd)");
    }

    wakd::write_averaged_model(args.out, params, {strategy, segment.start_iteration,
                                                  segment.end_iteration});
    std::cout << "strategy=" << strategy << " segment_start=" << segment.start_iteration
              << " segment_end=" << segment.end_iteration << " out=" << args.out << '\n';
    return 0;
}

struct ReportArgs {
    std::vector<std::string> results;
    std::string out = "summary.csv";
};

int cmd_report(const ReportArgs& args) {
    std::vector<wakd::ResultRow> rows;
    for (const auto& path : args.results) {
        auto part = wakd::load_results_csv(path);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    const wakd::SummaryTable table = wakd::aggregate(rows);
    std::cout << wakd::format_summary_table(table);
    wakd::save_summary_csv(table, args.out);
    std::cout << "wrote " << args.out << '\n';
    return 0;
}

struct GenerateArgs {
    std::string out;
    std::string family = "rotated-blobs";
    int num_classes = 3;
    int samples = 500;
    std::vector<std::string> domains;
    double noise = 0.5;
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& args) {
    wakd::GeneratorSpec spec;
    if (args.family == "rotated-blobs")
        spec.family = wakd::BlobFamily::RotatedBlobs;
    else if (args.family == "scaled-blobs")
        spec.family = wakd::BlobFamily::ScaledBlobs;
    else
        throw wakd::ConfigError("--family must be 'rotated-blobs' or 'scaled-blobs', got '" +
                                args.family + "'");
    spec.num_classes = args.num_classes;
    spec.samples_per_domain = args.samples;
    spec.noise = args.noise;
    spec.seed = args.seed;
    if (!args.domains.empty()) {
        spec.domain_params.clear();
        for (const auto& text : args.domains) {
            std::vector<double> params;
            for (const auto& part : split_csv_list(text))
                params.push_back(parse_f64(part, "--domain"));
            spec.domain_params.push_back(std::move(params));
        }
    }
    spec.validate();

    const wakd::DomainDataset dataset = wakd::generate(spec);
    wakd::save_dataset_csv(dataset, args.out, &spec);
    int total = 0;
    for (const auto& dom : dataset.domains)
        total += static_cast<int>(dom.labels.size());
    std::cout << "wrote " << args.out << ": " << dataset.domains.size() << " domains, " << total
              << " examples, " << dataset.num_classes << " classes\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge distillation under domain shift with trajectory weight averaging"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run the full multi-seed leave-one-domain-out protocol");
    run->add_option("--config", run_args.config_path, "JSON experiment config (defaults apply)");
    run->add_option("--out", run_args.out_dir, "output directory (overrides config output_dir)");
    run->add_option("--seeds", run_args.seeds, "comma-separated seed list (overrides config)");

    AverageArgs avg_args;
    auto* avg = app.add_subcommand("average", "average a stored checkpoint trajectory");
    avg->add_option("--ckpt-dir", avg_args.ckpt_dir, "checkpoint directory")->required();
    avg->add_option("--strategy", avg_args.strategy, "erm | swad | sma | wakd")->required();
    avg->add_option("--trajectory", avg_args.trajectory,
                    "validation trajectory CSV (erm/swad/sma only)");
    avg->add_option("--out", avg_args.out, "output checkpoint path")->required();
    auto* start_frac_opt =
        avg->add_option("--start-frac", avg_args.start_frac,
                        "fraction of the trajectory to skip before averaging (sma/wakd)");
    avg->add_option("--swad", avg_args.swad, "SWAD parameters as n_s,n_e,r");
    avg->add_option("--arch", avg_args.arch, "network dims as input,hidden...,classes (sma)");
    avg->add_option("--activation", avg_args.activation, "tanh | relu (sma)");
    avg->add_option("--val-data", avg_args.val_data, "validation dataset CSV (sma)");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "aggregate results files into a summary table");
    report->add_option("--results", report_args.results, "results CSV file(s)")
        ->required()
        ->expected(-1);
    report->add_option("--out", report_args.out, "summary CSV path (default summary.csv)");

    GenerateArgs gen_args;
    auto* gen = app.add_subcommand("generate-data", "write a synthetic multi-domain dataset CSV");
    gen->add_option("--out", gen_args.out, "dataset CSV path")->required();
    gen->add_option("--family", gen_args.family, "rotated-blobs | scaled-blobs");
    gen->add_option("--classes", gen_args.num_classes, "number of classes");
    gen->add_option("--samples", gen_args.samples, "examples per domain");
    gen->add_option("--domain", gen_args.domains,
                    "domain parameters (repeatable): angle, or sx,sy for scaled-blobs");
    gen->add_option("--noise", gen_args.noise, "Gaussian noise scale");
    gen->add_option("--seed", gen_args.seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return cmd_run(run_args);
        if (avg->parsed()) {
            avg_args.start_frac_given = start_frac_opt->count() > 0;
            return cmd_average(avg_args);
        }
        if (report->parsed())
            return cmd_report(report_args);
        return cmd_generate(gen_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
