#ifndef MULTIBIN_OPTIMIZER_HPP
#define MULTIBIN_OPTIMIZER_HPP

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace multibin {

// A flat view of one trainable parameter buffer. `decay` marks whether the
// weight-decay term applies (it is skipped for biases).
struct ParamView {
  double* data = nullptr;
  std::ptrdiff_t size = 0;
  bool decay = true;
};

struct GradView {
  const double* data = nullptr;
  std::ptrdiff_t size = 0;
};

// Momentum SGD with coupled weight decay:
//   v <- momentum * v + (g + weight_decay * p)
//   p <- p - lr * v
// Velocity buffers are zero-initialized on first use and must keep their
// shapes afterwards.
class OptimizerState {
 public:
  OptimizerState(double learning_rate, double momentum, double weight_decay);

  void step(const std::vector<ParamView>& params, const std::vector<GradView>& grads);

  // The harness anneals the rate between epochs.
  void set_learning_rate(double lr);
  double learning_rate() const { return learning_rate_; }
  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

 private:
  double learning_rate_;
  double momentum_;
  double weight_decay_;
  std::vector<Eigen::VectorXd> velocity_;
};

// Cosine annealing from `lr0` down to `eta_min` across `total_epochs`.
double cosine_annealed_lr(double lr0, double eta_min, int epoch, int total_epochs);

}  // namespace multibin

#endif  // MULTIBIN_OPTIMIZER_HPP
