#pragma once

#include <cstdint>
#include <vector>

#include "wakd/matrix.hpp"

namespace wakd {

// Flat float32 parameter vector: the unit that gets checkpointed and averaged.
using ParamVector = std::vector<float>;

enum class Activation { Tanh, Relu };

// Dense feed-forward classifier shape. Layer l maps fan_in -> fan_out with a
// weight block stored output-major ([fan_out x fan_in], row-major) followed by
// fan_out biases; blocks are concatenated into one flat ParamVector.
struct ArchSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;
    Activation activation = Activation::Tanh;

    // [input_dim, hidden..., num_classes]
    std::vector<int> layer_dims() const;
    // sum over layers of (fan_in + 1) * fan_out
    std::int64_t param_count() const;
    // throws ConfigError on non-positive dims or num_classes < 2
    void validate() const;
};

// Per-layer uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
ParamVector init_params(const ArchSpec& arch, std::uint64_t seed);

// Batch of logits for a batch of inputs [B x input_dim] -> [B x num_classes].
// All internal math runs in double with a fixed accumulation order.
Matrix forward(const ArchSpec& arch, const ParamVector& params, const Matrix& batch_inputs);

// Gradient of the scalar loss whose per-logit derivative is d_loss_d_logits
// [B x num_classes]; gradients are summed over the batch.
ParamVector backward(const ArchSpec& arch, const ParamVector& params, const Matrix& batch_inputs,
                     const Matrix& d_loss_d_logits);

// Temperature softmax with max-subtraction; softmax(z, tau) == softmax(z/tau, 1)
// holds exactly by construction. Throws DomainError for tau <= 0.
std::vector<double> softmax(const std::vector<double>& z, double tau);

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t param_count, double lr = 5e-5)
        : first_moment(param_count, 0.0), second_moment(param_count, 0.0), learning_rate(lr) {}
};

struct AdamStepResult {
    ParamVector params;
    AdamState state;
};

// One bias-corrected Adam update. Moments accumulate in double; the returned
// parameters are rounded to float32. Throws NumericError on non-finite
// gradients (the step is rejected, inputs stay untouched).
AdamStepResult adam_step(const AdamState& state, const ParamVector& params, const ParamVector& grad);

} // namespace wakd
