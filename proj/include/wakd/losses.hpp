#pragma once

#include <vector>

namespace wakd {

// Temperature-scaled cross-entropy of the student's tempered softmax against
// the frozen teacher's tempered softmax:
//   -tau^2 * sum_j softmax_j(z_t/tau) * log softmax_j(z_s/tau)
// The teacher entropy is not subtracted, so the value is bounded below by
// tau^2 * H(softmax(z_t/tau)).
double kd_loss(const std::vector<double>& student_logits, const std::vector<double>& teacher_logits,
               double tau);

// d kd_loss / d z_s = tau * (softmax(z_s/tau) - softmax(z_t/tau)); components
// sum to zero.
std::vector<double> kd_loss_grad(const std::vector<double>& student_logits,
                                 const std::vector<double>& teacher_logits, double tau);

// Standard cross-entropy against a hard label: -log softmax_label(z).
double hard_label_loss(const std::vector<double>& logits, int label);

// d hard_label_loss / d z = softmax(z) - onehot(label)
std::vector<double> hard_label_loss_grad(const std::vector<double>& logits, int label);

// Arithmetic mean in double; throws DomainError on an empty batch.
double batch_mean_loss(const std::vector<double>& per_example_losses);

// Shannon entropy of a probability vector (natural log).
double entropy(const std::vector<double>& probs);

} // namespace wakd
