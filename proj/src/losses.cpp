#include "wakd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wakd/errors.hpp"
#include "wakd/nn.hpp"

namespace wakd {

namespace {

// log softmax(z/tau) with max-subtraction.
std::vector<double> tempered_log_softmax(const std::vector<double>& z, double tau) {
    std::vector<double> scaled(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        scaled[i] = z[i] / tau;
    const double m = *std::max_element(scaled.begin(), scaled.end());
    double sum = 0.0;
    for (double v : scaled)
        sum += std::exp(v - m);
    const double log_z = m + std::log(sum);
    for (double& v : scaled)
        v -= log_z;
    return scaled;
}

void check_kd_args(const std::vector<double>& zs, const std::vector<double>& zt, double tau) {
    if (zs.size() != zt.size())
        throw DomainError("kd_loss: logit lengths differ (" + std::to_string(zs.size()) + " vs " +
                          std::to_string(zt.size()) + ")");
    if (zs.size() < 2)
        throw DomainError("kd_loss: need at least 2 classes");
    if (!(tau > 0.0))
        throw DomainError("kd_loss: tau must be positive, got " + std::to_string(tau));
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (!std::isfinite(zs[i]) || !std::isfinite(zt[i]))
            throw NumericError("kd_loss: non-finite logit");
}

} // namespace

double kd_loss(const std::vector<double>& student_logits, const std::vector<double>& teacher_logits,
               double tau) {
    check_kd_args(student_logits, teacher_logits, tau);
    const auto p_teacher = softmax(teacher_logits, tau);
    const auto log_q = tempered_log_softmax(student_logits, tau);
    double ce = 0.0;
    for (std::size_t j = 0; j < p_teacher.size(); ++j)
        ce += p_teacher[j] * log_q[j];
    return -tau * tau * ce;
}

std::vector<double> kd_loss_grad(const std::vector<double>& student_logits,
                                 const std::vector<double>& teacher_logits, double tau) {
    check_kd_args(student_logits, teacher_logits, tau);
    const auto q = softmax(student_logits, tau);
    const auto p = softmax(teacher_logits, tau);
    std::vector<double> grad(q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        grad[j] = tau * (q[j] - p[j]);
    return grad;
}

double hard_label_loss(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw DomainError("hard_label_loss: label " + std::to_string(label) + " out of range [0, " +
                          std::to_string(logits.size()) + ")");
    const auto log_q = tempered_log_softmax(logits, 1.0);
    return -log_q[static_cast<std::size_t>(label)];
}

std::vector<double> hard_label_loss_grad(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw DomainError("hard_label_loss_grad: label " + std::to_string(label) + " out of range [0, " +
                          std::to_string(logits.size()) + ")");
    auto grad = softmax(logits, 1.0);
    grad[static_cast<std::size_t>(label)] -= 1.0;
    return grad;
}

double batch_mean_loss(const std::vector<double>& per_example_losses) {
    if (per_example_losses.empty())
        throw DomainError("batch_mean_loss: empty batch");
    double sum = 0.0;
    for (double v : per_example_losses)
        sum += v;
    return sum / static_cast<double>(per_example_losses.size());
}

double entropy(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0)
            h -= p * std::log(p);
    return h;
}

} // namespace wakd
