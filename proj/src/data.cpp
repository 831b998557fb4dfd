#include "wakd/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "wakd/errors.hpp"
#include "wakd/rng.hpp"

namespace fs = std::filesystem;

namespace wakd {

namespace {

constexpr double kClassRadius = 2.0;

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string domain_name(const GeneratorSpec& spec, int id) {
    const auto& p = spec.domain_params[static_cast<std::size_t>(id)];
    if (spec.family == BlobFamily::RotatedBlobs)
        return "r" + format_value(p[0]);
    return "s" + format_value(p[0]) + "x" + format_value(p[1]);
}

// Fisher-Yates with our own Rng so the permutation is stable across standard
// libraries.
template <typename T>
void shuffle_with(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i)
        std::swap(items[i - 1], items[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

} // namespace

void GeneratorSpec::validate() const {
    if (num_classes < 2)
        throw ConfigError("generator: num_classes must be >= 2, got " + std::to_string(num_classes));
    if (samples_per_domain < num_classes)
        throw ConfigError("generator: samples_per_domain must be >= num_classes");
    if (noise < 0.0)
        throw ConfigError("generator: noise must be >= 0");
    if (domain_params.empty())
        throw ConfigError("generator: need at least one domain");
    const std::size_t expected = family == BlobFamily::RotatedBlobs ? 1 : 2;
    for (const auto& p : domain_params)
        if (p.size() != expected)
            throw ConfigError("generator: each domain needs " + std::to_string(expected) +
                              " parameter(s), got " + std::to_string(p.size()));
    std::set<std::vector<double>> distinct(domain_params.begin(), domain_params.end());
    if (distinct.size() != domain_params.size())
        throw ConfigError("generator: domain parameters must be pairwise distinct");
}

DomainDataset generate(const GeneratorSpec& spec) {
    spec.validate();
    DomainDataset ds;
    ds.input_dim = 2;
    ds.num_classes = spec.num_classes;
    const int k = static_cast<int>(spec.domain_params.size());
    for (int d = 0; d < k; ++d) {
        Domain dom;
        dom.id = d;
        dom.name = domain_name(spec, d);
        dom.features.reserve(static_cast<std::size_t>(spec.samples_per_domain));
        dom.labels.reserve(static_cast<std::size_t>(spec.samples_per_domain));
        Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(d)));
        const auto& p = spec.domain_params[static_cast<std::size_t>(d)];
        for (int i = 0; i < spec.samples_per_domain; ++i) {
            const int label = i % spec.num_classes;
            const double angle = 2.0 * M_PI * label / spec.num_classes;
            double x = kClassRadius * std::cos(angle) + spec.noise * rng.gaussian();
            double y = kClassRadius * std::sin(angle) + spec.noise * rng.gaussian();
            if (spec.family == BlobFamily::RotatedBlobs) {
                const double theta = p[0] * M_PI / 180.0;
                const double rx = std::cos(theta) * x - std::sin(theta) * y;
                const double ry = std::sin(theta) * x + std::cos(theta) * y;
                x = rx;
                y = ry;
            } else {
                x *= p[0];
                y *= p[1];
            }
            dom.features.push_back({x, y});
            dom.labels.push_back(label);
        }
        ds.domains.push_back(std::move(dom));
    }
    return ds;
}

const Domain& DomainDataset::domain_by_id(int id) const {
    for (const auto& d : domains)
        if (d.id == id)
            return d;
    throw NotFoundError("no domain with id " + std::to_string(id));
}

std::vector<SplitPlan> leave_one_out_splits(const DomainDataset& dataset, std::uint64_t seed) {
    if (dataset.domains.size() < 2)
        throw ConfigError("leave_one_out_splits: need at least 2 domains, have " +
                          std::to_string(dataset.domains.size()));
    std::vector<SplitPlan> plans;
    for (const auto& target : dataset.domains) {
        SplitPlan plan;
        plan.target_domain = target.id;
        plan.seed = mix_seed(seed, static_cast<std::uint64_t>(target.id));
        for (const auto& dom : dataset.domains) {
            if (dom.id == target.id)
                continue;
            const int n = static_cast<int>(dom.labels.size());
            std::vector<int> indices(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                indices[static_cast<std::size_t>(i)] = i;
            Rng rng(mix_seed(plan.seed, static_cast<std::uint64_t>(dom.id)));
            shuffle_with(indices, rng);
            const int train_count = (8 * n + 5) / 10; // round(0.8 * n)
            DomainSplit split;
            split.domain_id = dom.id;
            split.train.assign(indices.begin(), indices.begin() + train_count);
            split.val.assign(indices.begin() + train_count, indices.end());
            std::sort(split.train.begin(), split.train.end());
            std::sort(split.val.begin(), split.val.end());
            plan.sources.push_back(std::move(split));
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

Batcher::Batcher(const DomainDataset& dataset, const SplitPlan& plan, Split split, int batch_size,
                 std::uint64_t epoch_seed)
    : dataset_(dataset), batch_size_(batch_size) {
    if (batch_size < 1)
        throw DomainError("batcher: batch_size must be >= 1");
    for (const auto& src : plan.sources) {
        const auto& indices = split == Split::Train ? src.train : src.val;
        for (int idx : indices)
            order_.emplace_back(src.domain_id, idx);
    }
    if (order_.empty())
        throw DomainError("batcher: split is empty");
    Rng rng(epoch_seed);
    shuffle_with(order_, rng);
}

std::optional<Batch> Batcher::next() {
    if (pos_ >= order_.size())
        return std::nullopt;
    const std::size_t count = std::min(static_cast<std::size_t>(batch_size_), order_.size() - pos_);
    Batch batch;
    batch.inputs = Matrix(static_cast<int>(count), dataset_.input_dim);
    batch.labels.resize(count);
    batch.domain_ids.resize(count);
    batch.example_indices.resize(count);
    for (std::size_t row = 0; row < count; ++row) {
        const auto [dom_id, idx] = order_[pos_ + row];
        const Domain& dom = dataset_.domain_by_id(dom_id);
        for (int j = 0; j < dataset_.input_dim; ++j)
            batch.inputs(static_cast<int>(row), j) = dom.features[static_cast<std::size_t>(idx)][static_cast<std::size_t>(j)];
        batch.labels[row] = dom.labels[static_cast<std::size_t>(idx)];
        batch.domain_ids[row] = dom_id;
        batch.example_indices[row] = idx;
    }
    pos_ += count;
    return batch;
}

namespace {

ExampleSet gather(const DomainDataset& dataset, const std::vector<std::pair<int, int>>& refs) {
    ExampleSet set;
    set.inputs = Matrix(static_cast<int>(refs.size()), dataset.input_dim);
    set.labels.resize(refs.size());
    set.domain_ids.resize(refs.size());
    for (std::size_t row = 0; row < refs.size(); ++row) {
        const auto [dom_id, idx] = refs[row];
        const Domain& dom = dataset.domain_by_id(dom_id);
        for (int j = 0; j < dataset.input_dim; ++j)
            set.inputs(static_cast<int>(row), j) = dom.features[static_cast<std::size_t>(idx)][static_cast<std::size_t>(j)];
        set.labels[row] = dom.labels[static_cast<std::size_t>(idx)];
        set.domain_ids[row] = dom_id;
    }
    return set;
}

} // namespace

ExampleSet collect_split(const DomainDataset& dataset, const SplitPlan& plan, Split split) {
    std::vector<std::pair<int, int>> refs;
    for (const auto& src : plan.sources) {
        const auto& indices = split == Split::Train ? src.train : src.val;
        for (int idx : indices)
            refs.emplace_back(src.domain_id, idx);
    }
    return gather(dataset, refs);
}

ExampleSet collect_domain(const DomainDataset& dataset, int domain_id) {
    const Domain& dom = dataset.domain_by_id(domain_id);
    std::vector<std::pair<int, int>> refs;
    for (std::size_t i = 0; i < dom.labels.size(); ++i)
        refs.emplace_back(domain_id, static_cast<int>(i));
    return gather(dataset, refs);
}

void to_json(nlohmann::json& j, const GeneratorSpec& spec) {
    j = nlohmann::json{
        {"family", spec.family == BlobFamily::RotatedBlobs ? "rotated-blobs" : "scaled-blobs"},
        {"num_classes", spec.num_classes},
        {"samples_per_domain", spec.samples_per_domain},
        {"domain_params", spec.domain_params},
        {"noise", spec.noise},
        {"seed", spec.seed},
    };
}

void from_json(const nlohmann::json& j, GeneratorSpec& spec) {
    if (j.contains("family")) {
        const std::string fam = j.at("family").get<std::string>();
        if (fam == "rotated-blobs")
            spec.family = BlobFamily::RotatedBlobs;
        else if (fam == "scaled-blobs")
            spec.family = BlobFamily::ScaledBlobs;
        else
            throw ConfigError("generator.family must be 'rotated-blobs' or 'scaled-blobs', got '" + fam + "'");
    }
    if (j.contains("num_classes"))
        spec.num_classes = j.at("num_classes").get<int>();
    if (j.contains("samples_per_domain"))
        spec.samples_per_domain = j.at("samples_per_domain").get<int>();
    if (j.contains("domain_params"))
        spec.domain_params = j.at("domain_params").get<std::vector<std::vector<double>>>();
    if (j.contains("noise"))
        spec.noise = j.at("noise").get<double>();
    if (j.contains("seed"))
        spec.seed = j.at("seed").get<std::uint64_t>();
}

void save_dataset_csv(const DomainDataset& dataset, const fs::path& path,
                      const GeneratorSpec* provenance) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out << "domain_id,label";
    for (int j = 0; j < dataset.input_dim; ++j)
        out << ",f" << j;
    out << '\n';
    char buf[40];
    for (const auto& dom : dataset.domains)
        for (std::size_t i = 0; i < dom.labels.size(); ++i) {
            out << dom.id << ',' << dom.labels[i];
            for (int j = 0; j < dataset.input_dim; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", dom.features[i][static_cast<std::size_t>(j)]);
                out << ',' << buf;
            }
            out << '\n';
        }
    if (!out)
        throw IoError("write failed for " + path.string());
    if (provenance) {
        nlohmann::json j = *provenance;
        const fs::path sidecar = path.string() + ".json";
        std::ofstream side(sidecar, std::ios::trunc);
        if (!side)
            throw IoError("cannot open " + sidecar.string() + " for writing");
        side << j.dump(2) << '\n';
    }
}

DomainDataset load_dataset_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path.string() + ": missing header");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line.rfind("domain_id,label", 0) != 0)
        throw FormatError(path.string() + ": bad header '" + line + "'");
    int input_dim = 0;
    for (std::size_t p = line.find(",f"); p != std::string::npos; p = line.find(",f", p + 1))
        ++input_dim;
    if (input_dim == 0)
        throw FormatError(path.string() + ": header has no feature columns");

    std::map<int, Domain> domains;
    int max_label = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string cell;
        auto next_cell = [&](const char* field) {
            if (!std::getline(row, cell, ','))
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": missing field '" +
                                  field + "'");
            return cell;
        };
        auto next_int = [&](const char* field) {
            const std::string text = next_cell(field);
            try {
                std::size_t used = 0;
                const int value = std::stoi(text, &used);
                if (used != text.size())
                    throw std::invalid_argument(text);
                return value;
            } catch (const std::exception&) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": field '" +
                                  field + "' is not an integer: '" + text + "'");
            }
        };
        auto next_double = [&](const char* field) {
            const std::string text = next_cell(field);
            try {
                std::size_t used = 0;
                const double value = std::stod(text, &used);
                if (used != text.size())
                    throw std::invalid_argument(text);
                return value;
            } catch (const std::exception&) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) + ": field '" +
                                  field + "' is not a number: '" + text + "'");
            }
        };
        const int dom_id = next_int("domain_id");
        const int label = next_int("label");
        std::vector<double> feats(static_cast<std::size_t>(input_dim));
        for (int j = 0; j < input_dim; ++j)
            feats[static_cast<std::size_t>(j)] = next_double("feature");
        Domain& dom = domains[dom_id];
        dom.id = dom_id;
        dom.features.push_back(std::move(feats));
        dom.labels.push_back(label);
        max_label = std::max(max_label, label);
    }

    DomainDataset ds;
    ds.input_dim = input_dim;
    ds.num_classes = max_label + 1;
    for (auto& [id, dom] : domains) {
        dom.name = "dom" + std::to_string(id);
        ds.domains.push_back(std::move(dom));
    }
    return ds;
}

} // namespace wakd
