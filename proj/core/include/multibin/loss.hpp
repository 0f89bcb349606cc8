#ifndef MULTIBIN_LOSS_HPP
#define MULTIBIN_LOSS_HPP

#include <Eigen/Core>

namespace multibin {

// Clamp applied to scores before the logarithms in the cross-entropy.
inline constexpr double kBceEps = 1e-12;

// Binary cross-entropy -[y ln s + (1-y) ln(1-s)] for a single score.
double bce_loss(double score, double label);

// Mean binary cross-entropy over a batch of scores/labels.
double bce_loss_mean(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

double sigmoid(double z);

}  // namespace multibin

#endif  // MULTIBIN_LOSS_HPP
