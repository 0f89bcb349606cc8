#ifndef MULTIBIN_MODEL_HPP
#define MULTIBIN_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "multibin/rng.hpp"

namespace multibin {

// ---------------------------------------------------------------------------
// Quantum-equivalent shallow network.
//
// Two-layer network with square-modulus hidden activation:
//   score(x) = sigmoid( sum_m p_m (w_m . x)^2 + b )
// Hidden rows w_m are constrained to unit Euclidean norm. Output weights p
// are non-negative; in strict mode they additionally sum to one, in relaxed
// mode their sum is free and acts as a learned amplification of the
// normalized mixture.
// ---------------------------------------------------------------------------
struct QuantumShallowModel {
  Eigen::MatrixXd hidden_weights;  // M x N, rows unit-norm
  Eigen::VectorXd output_weights;  // M, entries >= 0 (sum 1 when strict)
  double bias = 0.0;
  bool relaxed_l1 = false;

  int neurons() const { return static_cast<int>(hidden_weights.rows()); }
  int features() const { return static_cast<int>(hidden_weights.cols()); }
};

// Throws UsageError if any invariant is violated beyond `tol`.
void check_invariants(const QuantumShallowModel& model, double tol = 1e-6);

// score in (0,1); x must have length N.
double forward_quantum(const QuantumShallowModel& model,
                       const Eigen::Ref<const Eigen::VectorXd>& x);

// Row-per-sample batch forward.
Eigen::VectorXd forward_quantum_batch(const QuantumShallowModel& model,
                                      const Eigen::Ref<const Eigen::MatrixXd>& X);

struct QuantumGradients {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd output_weights;
  double bias = 0.0;
};

// Exact gradient of mean BCE over the batch w.r.t. the unconstrained
// parameters. Constraints are applied separately by projection.
QuantumGradients gradient_quantum(const QuantumShallowModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X,
                                  const Eigen::Ref<const Eigen::VectorXd>& labels);

// Project onto the constraint set: hidden rows rescaled to unit norm,
// output weights clamped at zero and (strict mode only) rescaled to sum 1.
// A hidden row with norm < 1e-12 is re-drawn from the init distribution
// (deterministically, from a stream keyed by the row index); all-zero
// output weights reset to uniform 1/M. Idempotent.
void project_constraints(QuantumShallowModel& model);

// ---------------------------------------------------------------------------
// Classical baseline: D dense layers of M neurons, each followed by batch
// normalization, ReLU and dropout, then a sigmoid output head.
// ---------------------------------------------------------------------------
struct DenseLayer {
  Eigen::MatrixXd weights;       // out x in
  Eigen::VectorXd bias;          // out
  Eigen::VectorXd gamma;         // batch-norm scale
  Eigen::VectorXd beta;          // batch-norm shift
  Eigen::VectorXd running_mean;  // eval-mode statistics
  Eigen::VectorXd running_var;
};

struct MlpBaselineModel {
  std::vector<DenseLayer> layers;
  Eigen::VectorXd head_weights;
  double head_bias = 0.0;
  double dropout_rate = 0.0;  // in [0,1)

  int depth() const { return static_cast<int>(layers.size()); }
  int features() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().weights.cols());
  }
  int neurons() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().weights.rows());
  }
};

void check_invariants(const MlpBaselineModel& model);

// Exponential running-average factor and variance floor for batch norm.
inline constexpr double kBnMomentum = 0.1;
inline constexpr double kBnVarFloor = 1e-5;

enum class Mode { train, eval };

// Eval mode is deterministic (running statistics, no dropout). Train mode
// treats x as a batch of one, draws dropout masks from `rng` and updates the
// model's running statistics as a declared side effect.
double forward_mlp(MlpBaselineModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                   Mode mode, Rng* rng = nullptr);

// Const overload, eval mode only.
double forward_mlp(const MlpBaselineModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x);

Eigen::VectorXd forward_mlp_batch_eval(const MlpBaselineModel& model,
                                       const Eigen::Ref<const Eigen::MatrixXd>& X);

// Training-mode batch pass. Keeps every intermediate needed by the backward
// pass. Dropout masks are sampled up front so that a tape can be replayed
// (forward_mlp_train is deterministic given the masks), which is what makes
// finite-difference checks of the analytic gradient possible.
struct MlpTape {
  Eigen::MatrixXd input;                    // batch x N
  std::vector<Eigen::MatrixXd> pre_bn;      // z = h W^T + b
  std::vector<Eigen::VectorXd> batch_mean;  // per feature
  std::vector<Eigen::VectorXd> batch_var;   // biased, per feature
  std::vector<Eigen::MatrixXd> x_hat;       // normalized pre-activation
  std::vector<Eigen::MatrixXd> post_act;    // after ReLU and dropout
  std::vector<Eigen::MatrixXd> dropout_mask;
  Eigen::VectorXd scores;
};

std::vector<Eigen::MatrixXd> draw_dropout_masks(const MlpBaselineModel& model,
                                                Eigen::Index batch, Rng& rng);

// Forward with explicit masks; updates running statistics only when
// `update_running` is set.
MlpTape forward_mlp_train(MlpBaselineModel& model,
                          const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const std::vector<Eigen::MatrixXd>& dropout_masks,
                          bool update_running = true);

struct MlpGradients {
  struct LayerGrads {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;
  };
  std::vector<LayerGrads> layers;
  Eigen::VectorXd head_weights;
  double head_bias = 0.0;
};

// Gradient of mean BCE given a training-mode tape.
MlpGradients gradient_mlp(const MlpBaselineModel& model, const MlpTape& tape,
                          const Eigen::Ref<const Eigen::VectorXd>& labels);

// ---------------------------------------------------------------------------
// Initialization and serialization.
// ---------------------------------------------------------------------------
QuantumShallowModel init_quantum(Rng& rng, int neurons, int features,
                                 bool relaxed_l1 = false);
MlpBaselineModel init_mlp(Rng& rng, int neurons, int features, int depth,
                          double dropout_rate);

using AnyModel = std::variant<QuantumShallowModel, MlpBaselineModel>;

// Self-describing model file: "MULTIBIN-MODEL v1" header, kind tag,
// dimensions, then parameters as little-endian 64-bit floats in row-major
// order. The reader validates dimensions and constraints.
void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

// Eval-mode score of either model kind.
double model_score(const AnyModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd model_score_batch(const AnyModel& model,
                                  const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace multibin

#endif  // MULTIBIN_MODEL_HPP
