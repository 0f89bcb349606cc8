#include "multibin/loss.hpp"

#include <algorithm>
#include <cmath>

#include "multibin/errors.hpp"

namespace multibin {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce_loss(double score, double label) {
  const double s = std::clamp(score, kBceEps, 1.0 - kBceEps);
  return -(label * std::log(s) + (1.0 - label) * std::log(1.0 - s));
}

double bce_loss_mean(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("bce_loss_mean: scores length " + std::to_string(scores.size()) +
                     " vs labels length " + std::to_string(labels.size()));
  }
  if (scores.size() == 0) {
    throw UsageError("bce_loss_mean: empty batch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    acc += bce_loss(scores[i], labels[i]);
  }
  return acc / static_cast<double>(scores.size());
}

}  // namespace multibin
