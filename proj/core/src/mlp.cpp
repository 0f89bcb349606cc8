#include <cmath>
#include <string>

#include "multibin/errors.hpp"
#include "multibin/loss.hpp"
#include "multibin/model.hpp"

namespace multibin {

namespace {

void require_cols(Eigen::Index expected, Eigen::Index got, const char* where) {
  if (expected != got) {
    throw ShapeError(std::string(where) + ": input length " + std::to_string(got) +
                     " vs model features " + std::to_string(expected));
  }
}

Eigen::ArrayXd floored_inv_std(const Eigen::VectorXd& var) {
  return var.array().max(kBnVarFloor).sqrt().inverse();
}

}  // namespace

void check_invariants(const MlpBaselineModel& model) {
  if (model.layers.empty()) {
    throw UsageError("mlp model: depth must be >= 1");
  }
  if (model.dropout_rate < 0.0 || model.dropout_rate >= 1.0) {
    throw UsageError("mlp model: dropout rate must be in [0,1)");
  }
  const int width = model.neurons();
  Eigen::Index in = model.layers.front().weights.cols();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (layer.weights.rows() != width) {
      throw UsageError("mlp model: layer " + std::to_string(l) + " has " +
                       std::to_string(layer.weights.rows()) + " neurons, expected " +
                       std::to_string(width));
    }
    if (layer.weights.cols() != in) {
      throw ShapeError("mlp model: layer " + std::to_string(l) + " input " +
                       std::to_string(layer.weights.cols()) + " vs previous width " +
                       std::to_string(in));
    }
    if ((layer.running_var.array() <= 0.0).any()) {
      throw UsageError("mlp model: layer " + std::to_string(l) +
                       " has non-positive running variance");
    }
    in = layer.weights.rows();
  }
  if (model.head_weights.size() != width) {
    throw ShapeError("mlp model: head width " + std::to_string(model.head_weights.size()) +
                     " vs hidden width " + std::to_string(width));
  }
}

double forward_mlp(const MlpBaselineModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  require_cols(model.features(), x.size(), "forward_mlp");
  Eigen::VectorXd h = x;
  for (const auto& layer : model.layers) {
    Eigen::VectorXd z = layer.weights * h + layer.bias;
    const Eigen::ArrayXd inv_std = floored_inv_std(layer.running_var);
    Eigen::ArrayXd x_hat = (z - layer.running_mean).array() * inv_std;
    h = (x_hat * layer.gamma.array() + layer.beta.array()).max(0.0).matrix();
  }
  return sigmoid(model.head_weights.dot(h) + model.head_bias);
}

double forward_mlp(MlpBaselineModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                   Mode mode, Rng* rng) {
  if (mode == Mode::eval) {
    return forward_mlp(static_cast<const MlpBaselineModel&>(model), x);
  }
  if (rng == nullptr) {
    throw UsageError("forward_mlp: train mode requires an rng for dropout masks");
  }
  const auto masks = draw_dropout_masks(model, 1, *rng);
  const MlpTape tape = forward_mlp_train(model, x.transpose(), masks, true);
  return tape.scores[0];
}

Eigen::VectorXd forward_mlp_batch_eval(const MlpBaselineModel& model,
                                       const Eigen::Ref<const Eigen::MatrixXd>& X) {
  require_cols(model.features(), X.cols(), "forward_mlp_batch_eval");
  Eigen::MatrixXd h = X;
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd z = (h * layer.weights.transpose()).rowwise() + layer.bias.transpose();
    const Eigen::ArrayXd inv_std = floored_inv_std(layer.running_var);
    z.rowwise() -= layer.running_mean.transpose();
    z.array().rowwise() *= (inv_std * layer.gamma.array()).transpose();
    z.array().rowwise() += layer.beta.transpose().array();
    h = z.cwiseMax(0.0);
  }
  Eigen::VectorXd pre = h * model.head_weights;
  pre.array() += model.head_bias;
  return pre.unaryExpr([](double v) { return sigmoid(v); });
}

std::vector<Eigen::MatrixXd> draw_dropout_masks(const MlpBaselineModel& model,
                                                Eigen::Index batch, Rng& rng) {
  const double keep = 1.0 - model.dropout_rate;
  const double scale = 1.0 / keep;
  std::vector<Eigen::MatrixXd> masks;
  masks.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd mask(batch, layer.weights.rows());
    if (model.dropout_rate == 0.0) {
      mask.setOnes();
    } else {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        for (Eigen::Index j = 0; j < mask.cols(); ++j) {
          mask(i, j) = rng.uniform() < keep ? scale : 0.0;
        }
      }
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

MlpTape forward_mlp_train(MlpBaselineModel& model,
                          const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const std::vector<Eigen::MatrixXd>& dropout_masks,
                          bool update_running) {
  require_cols(model.features(), X.cols(), "forward_mlp_train");
  if (dropout_masks.size() != model.layers.size()) {
    throw ShapeError("forward_mlp_train: " + std::to_string(dropout_masks.size()) +
                     " dropout masks vs " + std::to_string(model.layers.size()) +
                     " layers");
  }
  const double batch = static_cast<double>(X.rows());

  MlpTape tape;
  tape.input = X;
  Eigen::MatrixXd h = X;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    Eigen::MatrixXd z = (h * layer.weights.transpose()).rowwise() + layer.bias.transpose();
    Eigen::VectorXd mean = z.colwise().mean();
    Eigen::VectorXd var =
        ((z.rowwise() - mean.transpose()).array().square().colwise().sum() / batch)
            .matrix();
    if (update_running) {
      layer.running_mean = (1.0 - kBnMomentum) * layer.running_mean + kBnMomentum * mean;
      layer.running_var = (1.0 - kBnMomentum) * layer.running_var + kBnMomentum * var;
    }
    const Eigen::ArrayXd inv_std = var.array().max(kBnVarFloor).sqrt().inverse();
    Eigen::MatrixXd x_hat = z.rowwise() - mean.transpose();
    x_hat.array().rowwise() *= inv_std.transpose();

    Eigen::MatrixXd y = x_hat;
    y.array().rowwise() *= layer.gamma.transpose().array();
    y.array().rowwise() += layer.beta.transpose().array();

    Eigen::MatrixXd activated = y.cwiseMax(0.0).cwiseProduct(dropout_masks[l]);

    tape.pre_bn.push_back(std::move(z));
    tape.batch_mean.push_back(std::move(mean));
    tape.batch_var.push_back(std::move(var));
    tape.x_hat.push_back(std::move(x_hat));
    tape.dropout_mask.push_back(dropout_masks[l]);
    tape.post_act.push_back(activated);
    h = std::move(activated);
  }
  Eigen::VectorXd pre = h * model.head_weights;
  pre.array() += model.head_bias;
  tape.scores = pre.unaryExpr([](double v) { return sigmoid(v); });
  return tape;
}

MlpGradients gradient_mlp(const MlpBaselineModel& model, const MlpTape& tape,
                          const Eigen::Ref<const Eigen::VectorXd>& labels) {
  const Eigen::Index batch = tape.input.rows();
  if (batch == 0) {
    throw UsageError("gradient_mlp: empty batch");
  }
  if (labels.size() != batch) {
    throw ShapeError("gradient_mlp: batch rows " + std::to_string(batch) +
                     " vs labels " + std::to_string(labels.size()));
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const int depth = model.depth();

  MlpGradients grads;
  grads.layers.resize(depth);

  const Eigen::VectorXd dpre = (tape.scores - labels) * inv_batch;
  const Eigen::MatrixXd& last = tape.post_act.back();
  grads.head_weights = last.transpose() * dpre;
  grads.head_bias = dpre.sum();

  Eigen::MatrixXd dh = dpre * model.head_weights.transpose();  // batch x M
  for (int l = depth - 1; l >= 0; --l) {
    const auto& layer = model.layers[l];
    const Eigen::ArrayXXd x_hat = tape.x_hat[l].array();

    // Through dropout, then ReLU (recompute the pre-ReLU activation).
    Eigen::ArrayXXd dy = dh.cwiseProduct(tape.dropout_mask[l]).array();
    Eigen::ArrayXXd y = x_hat.rowwise() * layer.gamma.transpose().array();
    y.rowwise() += layer.beta.transpose().array();
    dy *= (y > 0.0).cast<double>();

    grads.layers[l].gamma = (dy * x_hat).colwise().sum();
    grads.layers[l].beta = dy.colwise().sum();

    // Through batch normalization. When the batch variance sits below the
    // floor the denominator is constant and the variance term drops out.
    const Eigen::ArrayXd inv_std =
        tape.batch_var[l].array().max(kBnVarFloor).sqrt().inverse();
    Eigen::ArrayXXd dxhat = dy.rowwise() * layer.gamma.transpose().array();
    const Eigen::ArrayXd mean_dxhat = dxhat.colwise().mean();
    const Eigen::ArrayXd mean_dxhat_xhat = (dxhat * x_hat).colwise().mean();
    const Eigen::ArrayXd var_active =
        (tape.batch_var[l].array() > kBnVarFloor).cast<double>();

    Eigen::ArrayXXd dz = dxhat;
    dz.rowwise() -= mean_dxhat.transpose();
    dz -= x_hat.rowwise() * (var_active * mean_dxhat_xhat).transpose();
    dz.rowwise() *= inv_std.transpose();

    const Eigen::MatrixXd dz_mat = dz.matrix();
    const Eigen::MatrixXd& input = l == 0 ? tape.input : tape.post_act[l - 1];
    grads.layers[l].weights = dz_mat.transpose() * input;
    grads.layers[l].bias = dz_mat.colwise().sum();
    if (l > 0) {
      dh = dz_mat * layer.weights;
    }
  }
  return grads;
}

}  // namespace multibin
