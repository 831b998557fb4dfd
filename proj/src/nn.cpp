#include "wakd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wakd/errors.hpp"
#include "wakd/rng.hpp"

namespace wakd {

std::vector<int> ArchSpec::layer_dims() const {
    std::vector<int> dims;
    dims.reserve(hidden_dims.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(num_classes);
    return dims;
}

std::int64_t ArchSpec::param_count() const {
    const auto dims = layer_dims();
    std::int64_t count = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        count += static_cast<std::int64_t>(dims[l] + 1) * dims[l + 1];
    return count;
}

void ArchSpec::validate() const {
    if (input_dim < 1)
        throw ConfigError("arch: input_dim must be positive, got " + std::to_string(input_dim));
    if (num_classes < 2)
        throw ConfigError("arch: num_classes must be >= 2, got " + std::to_string(num_classes));
    for (int h : hidden_dims)
        if (h < 1)
            throw ConfigError("arch: hidden dims must be positive, got " + std::to_string(h));
}

ParamVector init_params(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    ParamVector params(static_cast<std::size_t>(arch.param_count()));
    Rng rng(seed);
    const auto dims = arch.layer_dims();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < (fan_in + 1) * fan_out; ++i)
            params[offset++] = static_cast<float>(rng.uniform(-limit, limit));
    }
    return params;
}

namespace {

void check_params(const ArchSpec& arch, const ParamVector& params) {
    arch.validate();
    if (static_cast<std::int64_t>(params.size()) != arch.param_count())
        throw ConfigError("params length " + std::to_string(params.size()) +
                          " does not match arch param count " + std::to_string(arch.param_count()));
}

double activate(double x, Activation act) {
    return act == Activation::Tanh ? std::tanh(x) : std::max(0.0, x);
}

double activate_grad(double pre, Activation act) {
    if (act == Activation::Tanh) {
        const double t = std::tanh(pre);
        return 1.0 - t * t;
    }
    return pre > 0.0 ? 1.0 : 0.0;
}

// Pre-activations for every layer; layer l output is stored in pre[l]
// ([B x dims[l+1]]), with the hidden activation applied on the fly where
// needed. Shared by forward and backward.
std::vector<Matrix> forward_pass(const ArchSpec& arch, const ParamVector& params, const Matrix& inputs) {
    const auto dims = arch.layer_dims();
    const int batch = inputs.rows;
    const std::size_t layers = dims.size() - 1;

    std::vector<Matrix> pre(layers);
    Matrix current = inputs;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const float* w = params.data() + offset;
        const float* b = w + static_cast<std::size_t>(fan_in) * fan_out;
        pre[l] = Matrix(batch, fan_out);
        for (int i = 0; i < batch; ++i) {
            for (int j = 0; j < fan_out; ++j) {
                double sum = static_cast<double>(b[j]);
                const float* wrow = w + static_cast<std::size_t>(j) * fan_in;
                for (int k = 0; k < fan_in; ++k)
                    sum += static_cast<double>(wrow[k]) * current(i, k);
                pre[l](i, j) = sum;
            }
        }
        offset += static_cast<std::size_t>(fan_in + 1) * fan_out;
        if (l + 1 < layers) {
            current = pre[l];
            for (double& v : current.data) v = activate(v, arch.activation);
        }
    }
    return pre;
}

} // namespace

Matrix forward(const ArchSpec& arch, const ParamVector& params, const Matrix& batch_inputs) {
    check_params(arch, params);
    if (batch_inputs.rows < 1)
        throw ConfigError("forward: batch must contain at least one row");
    if (batch_inputs.cols != arch.input_dim)
        throw ConfigError("forward: input has " + std::to_string(batch_inputs.cols) +
                          " columns, arch expects " + std::to_string(arch.input_dim));
    auto pre = forward_pass(arch, params, batch_inputs);
    return pre.back();
}

ParamVector backward(const ArchSpec& arch, const ParamVector& params, const Matrix& batch_inputs,
                     const Matrix& d_loss_d_logits) {
    check_params(arch, params);
    if (batch_inputs.cols != arch.input_dim || batch_inputs.rows < 1)
        throw ConfigError("backward: bad input shape");
    if (d_loss_d_logits.rows != batch_inputs.rows || d_loss_d_logits.cols != arch.num_classes)
        throw ConfigError("backward: d_loss_d_logits is " + std::to_string(d_loss_d_logits.rows) + "x" +
                          std::to_string(d_loss_d_logits.cols) + ", expected " +
                          std::to_string(batch_inputs.rows) + "x" + std::to_string(arch.num_classes));

    const auto dims = arch.layer_dims();
    const int batch = batch_inputs.rows;
    const std::size_t layers = dims.size() - 1;
    const auto pre = forward_pass(arch, params, batch_inputs);

    // Layer input activations: a[0] = inputs, a[l] = act(pre[l-1]).
    std::vector<Matrix> act(layers);
    act[0] = batch_inputs;
    for (std::size_t l = 1; l < layers; ++l) {
        act[l] = pre[l - 1];
        for (double& v : act[l].data) v = activate(v, arch.activation);
    }

    std::vector<double> grad(params.size(), 0.0);
    std::vector<std::size_t> offsets(layers);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        offsets[l] = offset;
        offset += static_cast<std::size_t>(dims[l] + 1) * dims[l + 1];
    }

    Matrix delta = d_loss_d_logits; // d loss / d pre[l], starting at the output layer
    for (std::size_t li = layers; li-- > 0;) {
        const int fan_in = dims[li];
        const int fan_out = dims[li + 1];
        double* gw = grad.data() + offsets[li];
        double* gb = gw + static_cast<std::size_t>(fan_in) * fan_out;
        const Matrix& a = act[li];
        for (int i = 0; i < batch; ++i) {
            for (int j = 0; j < fan_out; ++j) {
                const double d = delta(i, j);
                double* gwrow = gw + static_cast<std::size_t>(j) * fan_in;
                for (int k = 0; k < fan_in; ++k)
                    gwrow[k] += d * a(i, k);
                gb[j] += d;
            }
        }
        if (li == 0) break;
        const float* w = params.data() + offsets[li];
        Matrix prev(batch, fan_in);
        for (int i = 0; i < batch; ++i) {
            for (int k = 0; k < fan_in; ++k) {
                double sum = 0.0;
                for (int j = 0; j < fan_out; ++j)
                    sum += static_cast<double>(w[static_cast<std::size_t>(j) * fan_in + k]) * delta(i, j);
                prev(i, k) = sum * activate_grad(pre[li - 1](i, k), arch.activation);
            }
        }
        delta = std::move(prev);
    }

    ParamVector result(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        result[i] = static_cast<float>(grad[i]);
    return result;
}

std::vector<double> softmax(const std::vector<double>& z, double tau) {
    if (!(tau > 0.0))
        throw DomainError("softmax: tau must be positive, got " + std::to_string(tau));
    if (z.empty())
        throw DomainError("softmax: empty logits");
    std::vector<double> scaled(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z[i]))
            throw NumericError("softmax: non-finite logit");
        scaled[i] = z[i] / tau;
    }
    const double m = *std::max_element(scaled.begin(), scaled.end());
    double sum = 0.0;
    for (double& v : scaled) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : scaled) v /= sum;
    return scaled;
}

AdamStepResult adam_step(const AdamState& state, const ParamVector& params, const ParamVector& grad) {
    if (params.size() != grad.size() || state.first_moment.size() != params.size())
        throw ConfigError("adam_step: length mismatch (params " + std::to_string(params.size()) +
                          ", grad " + std::to_string(grad.size()) + ", state " +
                          std::to_string(state.first_moment.size()) + ")");
    for (float g : grad)
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient, step rejected");

    AdamStepResult out{params, state};
    AdamState& s = out.state;
    s.step_count = state.step_count + 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        s.first_moment[i] = s.beta1 * s.first_moment[i] + (1.0 - s.beta1) * g;
        s.second_moment[i] = s.beta2 * s.second_moment[i] + (1.0 - s.beta2) * g * g;
        const double m_hat = s.first_moment[i] / bc1;
        const double v_hat = s.second_moment[i] / bc2;
        const double p = static_cast<double>(params[i]) - s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
        out.params[i] = static_cast<float>(p);
    }
    return out;
}

} // namespace wakd
