#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wakd/matrix.hpp"

namespace wakd {

enum class BlobFamily { RotatedBlobs, ScaledBlobs };

// Synthetic multi-domain blob generator. Classes sit on a circle of radius 2
// with isotropic Gaussian noise; each domain applies its own rotation
// (rotated-blobs, one angle in degrees) or per-axis scaling (scaled-blobs,
// two factors) to every sample.
struct GeneratorSpec {
    BlobFamily family = BlobFamily::RotatedBlobs;
    int num_classes = 3;
    int samples_per_domain = 500;
    std::vector<std::vector<double>> domain_params = {{0.0}, {15.0}, {30.0}, {45.0}};
    double noise = 0.5;
    std::uint64_t seed = 0;

    void validate() const; // ConfigError on violations
};

struct Domain {
    int id = 0;
    std::string name;
    std::vector<std::vector<double>> features; // [n][input_dim]
    std::vector<int> labels;                   // [n], in [0, num_classes)
};

struct DomainDataset {
    int input_dim = 0;
    int num_classes = 0;
    std::vector<Domain> domains;

    const Domain& domain_by_id(int id) const; // NotFoundError
};

DomainDataset generate(const GeneratorSpec& spec);

struct DomainSplit {
    int domain_id = 0;
    std::vector<int> train; // indices into the domain's examples
    std::vector<int> val;
};

// One leave-one-domain-out plan: the target domain contributes nothing to
// either split.
struct SplitPlan {
    int target_domain = 0;
    std::vector<DomainSplit> sources;
    std::uint64_t seed = 0;
};

// One plan per choice of target domain; per-domain 80/20 train/val splits
// drawn from a seed mixed per plan.
std::vector<SplitPlan> leave_one_out_splits(const DomainDataset& dataset, std::uint64_t seed);

enum class Split { Train, Val };

struct Batch {
    Matrix inputs;
    std::vector<int> labels;
    std::vector<int> domain_ids;      // provenance, one per row
    std::vector<int> example_indices; // index within the source domain
};

// Pooled source-domain examples of one split, shuffled per epoch_seed; the
// last partial batch is kept.
class Batcher {
public:
    Batcher(const DomainDataset& dataset, const SplitPlan& plan, Split split, int batch_size,
            std::uint64_t epoch_seed);
    std::optional<Batch> next();

private:
    const DomainDataset& dataset_;
    int batch_size_;
    std::vector<std::pair<int, int>> order_; // (domain_id, example index)
    std::size_t pos_ = 0;
};

// Pooled examples ready for evaluation.
struct ExampleSet {
    Matrix inputs;
    std::vector<int> labels;
    std::vector<int> domain_ids;
};

ExampleSet collect_split(const DomainDataset& dataset, const SplitPlan& plan, Split split);
ExampleSet collect_domain(const DomainDataset& dataset, int domain_id);

// CSV "domain_id,label,f0,f1,..."; when a generator spec is given, a
// "<path>.json" sidecar records it for provenance.
void save_dataset_csv(const DomainDataset& dataset, const std::filesystem::path& path,
                      const GeneratorSpec* provenance = nullptr);
DomainDataset load_dataset_csv(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const GeneratorSpec& spec);
void from_json(const nlohmann::json& j, GeneratorSpec& spec);

} // namespace wakd
