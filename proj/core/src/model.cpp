#include "multibin/model.hpp"

#include <cmath>
#include <string>

#include "multibin/errors.hpp"
#include "multibin/loss.hpp"

namespace multibin {

namespace {

void require_features(int model_features, Eigen::Index x_len, const char* where) {
  if (x_len != model_features) {
    throw ShapeError(std::string(where) + ": input length " + std::to_string(x_len) +
                     " vs model features " + std::to_string(model_features));
  }
}

}  // namespace

void check_invariants(const QuantumShallowModel& model, double tol) {
  const auto M = model.hidden_weights.rows();
  const auto N = model.hidden_weights.cols();
  if (M < 1 || N < 1) {
    throw UsageError("quantum model: M and N must be >= 1, got M=" + std::to_string(M) +
                     " N=" + std::to_string(N));
  }
  if (model.output_weights.size() != M) {
    throw ShapeError("quantum model: output weights length " +
                     std::to_string(model.output_weights.size()) + " vs M " +
                     std::to_string(M));
  }
  for (Eigen::Index m = 0; m < M; ++m) {
    const double norm = model.hidden_weights.row(m).norm();
    if (std::abs(norm - 1.0) > tol) {
      throw UsageError("quantum model: hidden row " + std::to_string(m) +
                       " has norm " + std::to_string(norm));
    }
  }
  if ((model.output_weights.array() < 0.0).any()) {
    throw UsageError("quantum model: negative output weight");
  }
  if (!model.relaxed_l1) {
    const double sum = model.output_weights.sum();
    if (std::abs(sum - 1.0) > tol) {
      throw UsageError("quantum model: output weights sum " + std::to_string(sum) +
                       " (strict mode requires 1)");
    }
  }
}

double forward_quantum(const QuantumShallowModel& model,
                       const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_features(model.features(), x.size(), "forward_quantum");
  const Eigen::VectorXd overlaps = model.hidden_weights * x;
  const double pre = overlaps.array().square().matrix().dot(model.output_weights) + model.bias;
  return sigmoid(pre);
}

Eigen::VectorXd forward_quantum_batch(const QuantumShallowModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X) {
  require_features(model.features(), X.cols(), "forward_quantum_batch");
  const Eigen::MatrixXd overlaps = X * model.hidden_weights.transpose();  // B x M
  Eigen::VectorXd pre =
      overlaps.array().square().matrix() * model.output_weights;
  pre.array() += model.bias;
  return pre.unaryExpr([](double z) { return sigmoid(z); });
}

QuantumGradients gradient_quantum(const QuantumShallowModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const Eigen::Ref<const Eigen::VectorXd>& labels) {
  if (X.rows() == 0) {
    throw UsageError("gradient_quantum: empty batch");
  }
  if (X.rows() != labels.size()) {
    throw ShapeError("gradient_quantum: batch rows " + std::to_string(X.rows()) +
                     " vs labels " + std::to_string(labels.size()));
  }
  require_features(model.features(), X.cols(), "gradient_quantum");

  const double inv_batch = 1.0 / static_cast<double>(X.rows());
  const Eigen::MatrixXd overlaps = X * model.hidden_weights.transpose();  // B x M
  const Eigen::MatrixXd squared = overlaps.array().square().matrix();
  Eigen::VectorXd pre = squared * model.output_weights;
  pre.array() += model.bias;
  const Eigen::VectorXd scores = pre.unaryExpr([](double z) { return sigmoid(z); });

  // dL/dpre for mean BCE through the sigmoid.
  const Eigen::VectorXd dpre = (scores - labels) * inv_batch;

  QuantumGradients grads;
  grads.bias = dpre.sum();
  grads.output_weights = squared.transpose() * dpre;
  grads.hidden_weights =
      2.0 * model.output_weights.asDiagonal() *
      ((dpre.asDiagonal() * overlaps).transpose() * X);
  return grads;
}

void project_constraints(QuantumShallowModel& model) {
  const auto M = model.hidden_weights.rows();
  const auto N = model.hidden_weights.cols();
  for (Eigen::Index m = 0; m < M; ++m) {
    double norm = model.hidden_weights.row(m).norm();
    if (norm < 1e-12) {
      // Degenerate row: re-draw from the init distribution. The stream is
      // keyed by the row index only, so projection stays a pure function.
      Rng rng(derive_seed(0x6d756c7469626eULL, static_cast<std::uint64_t>(m)));
      for (Eigen::Index j = 0; j < N; ++j) {
        model.hidden_weights(m, j) = rng.normal();
      }
      norm = model.hidden_weights.row(m).norm();
    }
    model.hidden_weights.row(m) /= norm;
  }
  model.output_weights = model.output_weights.cwiseMax(0.0);
  if (!model.relaxed_l1) {
    const double sum = model.output_weights.sum();
    if (sum <= 0.0) {
      model.output_weights.setConstant(1.0 / static_cast<double>(M));
    } else {
      model.output_weights /= sum;
    }
  }
}

QuantumShallowModel init_quantum(Rng& rng, int neurons, int features, bool relaxed_l1) {
  if (neurons < 1 || features < 1) {
    throw UsageError("init_quantum: M and N must be >= 1, got M=" +
                     std::to_string(neurons) + " N=" + std::to_string(features));
  }
  QuantumShallowModel model;
  model.relaxed_l1 = relaxed_l1;
  model.hidden_weights.resize(neurons, features);
  for (Eigen::Index m = 0; m < neurons; ++m) {
    for (Eigen::Index j = 0; j < features; ++j) {
      model.hidden_weights(m, j) = rng.normal();
    }
    model.hidden_weights.row(m).normalize();
  }
  model.output_weights =
      Eigen::VectorXd::Constant(neurons, 1.0 / static_cast<double>(neurons));
  model.bias = 0.0;
  return model;
}

MlpBaselineModel init_mlp(Rng& rng, int neurons, int features, int depth,
                          double dropout_rate) {
  if (neurons < 1 || features < 1 || depth < 1) {
    throw UsageError("init_mlp: M, N and D must be >= 1");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw UsageError("init_mlp: dropout rate must be in [0,1)");
  }
  MlpBaselineModel model;
  model.dropout_rate = dropout_rate;
  model.layers.resize(depth);
  int in = features;
  for (auto& layer : model.layers) {
    layer.weights.resize(neurons, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (Eigen::Index r = 0; r < neurons; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weights(r, c) = scale * rng.normal();
      }
    }
    layer.bias = Eigen::VectorXd::Zero(neurons);
    layer.gamma = Eigen::VectorXd::Ones(neurons);
    layer.beta = Eigen::VectorXd::Zero(neurons);
    layer.running_mean = Eigen::VectorXd::Zero(neurons);
    layer.running_var = Eigen::VectorXd::Ones(neurons);
    in = neurons;
  }
  model.head_weights.resize(neurons);
  const double scale = std::sqrt(2.0 / static_cast<double>(neurons));
  for (Eigen::Index r = 0; r < neurons; ++r) {
    model.head_weights(r) = scale * rng.normal();
  }
  model.head_bias = 0.0;
  return model;
}

double model_score(const AnyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuantumShallowModel>) {
          return forward_quantum(m, x);
        } else {
          return forward_mlp(m, x);
        }
      },
      model);
}

Eigen::VectorXd model_score_batch(const AnyModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QuantumShallowModel>) {
          return forward_quantum_batch(m, X);
        } else {
          return forward_mlp_batch_eval(m, X);
        }
      },
      model);
}

}  // namespace multibin
