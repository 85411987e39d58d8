#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "easiernet/core/numerics.hpp"

namespace easiernet {

enum class TaskType { Regression, Classification };

struct TaskKind {
  TaskType type = TaskType::Regression;
  std::size_t num_classes = 0;

  static TaskKind regression() { return {TaskType::Regression, 0}; }
  static TaskKind classification(std::size_t num_classes) {
    return {TaskType::Classification, num_classes};
  }

  bool is_classification() const noexcept { return type == TaskType::Classification; }
  std::size_t output_dim() const noexcept { return is_classification() ? num_classes : 1; }
  bool operator==(const TaskKind&) const = default;
};

/// Layers are numbered 1..L: layer 1 is the (scaled) input, layers 2..L-1 are
/// hidden ReLU layers, layer L is the output. Every non-output layer l has a
/// skip projection zeta_l into the output space.
struct NetworkConfig {
  std::size_t input_dim = 0;
  std::size_t num_layers = 2;
  std::vector<std::size_t> hidden_widths;  // widths of layers 2..L-1
  TaskKind task;
  bool skip_connections_enabled = true;

  /// Convenience for the common "H hidden layers of equal width" layout.
  static NetworkConfig uniform(std::size_t input_dim, std::size_t hidden_layers, std::size_t width,
                               TaskKind task, bool skip_connections = true);

  void validate() const;
  std::size_t output_dim() const noexcept { return task.output_dim(); }
  std::size_t num_skip_layers() const noexcept { return num_layers - 1; }
  std::size_t num_hidden_layers() const noexcept { return num_layers - 2; }
  /// Width of layer l (1-based).
  std::size_t width(std::size_t layer) const;

  bool operator==(const NetworkConfig&) const = default;
};

/// All learnable tensors. weights[k] is W_{k+1} (layer k+1 -> k+2),
/// skip_weights[k] is W'_{k+1} (layer k+1 -> output).
struct NetworkParams {
  std::vector<double> beta;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  std::vector<Matrix> skip_weights;
  std::vector<std::vector<double>> skip_biases;
  std::vector<double> alpha;

  static NetworkParams zeros(const NetworkConfig& config);
  bool operator==(const NetworkParams&) const = default;
};

enum class TensorKind { Beta, Weight, Bias, SkipWeight, SkipBias, Alpha };

/// One parameter tensor viewed as a flat span. `layer` is the 1-based source
/// layer of the tensor (0 for alpha).
template <typename T>
struct BasicTensorView {
  TensorKind kind;
  std::size_t layer;
  std::span<T> values;
};
using TensorView = BasicTensorView<double>;
using ConstTensorView = BasicTensorView<const double>;

/// Tensors in a fixed order: beta, (W_l, b_l)..., (W'_l, b'_l)..., alpha.
std::vector<TensorView> tensors(NetworkParams& params);
std::vector<ConstTensorView> tensors(const NetworkParams& params);

void check_shapes(const NetworkParams& params, const NetworkConfig& config);
std::size_t parameter_count(const NetworkParams& params);

NetworkParams init_params(const NetworkConfig& config, RngStream& rng);

struct Prediction {
  Matrix values;  // n x d_L; probability rows for classification
};

/// Intermediate values of one forward pass.
struct ForwardTrace {
  std::vector<Matrix> z;           // z[l-1] = z_l for l = 1..L-1
  std::vector<Matrix> preact;      // preact[l-2] = z_{l-1} W_{l-1} + b_{l-1} for l = 2..L-1
  std::vector<Matrix> zeta;        // zeta[l-1] = zeta_l for l = 1..L-1
  std::vector<double> mix;         // effective weight of each zeta_l in the head
  Matrix head;                     // pre-activation of the output layer
  Matrix output;
};

/// Per-layer head weights: |alpha_l| / sum|alpha| with skip connections,
/// otherwise a one-hot on the last non-output layer. Throws DegenerateModel
/// when every alpha is zero.
std::vector<double> head_mixture(const NetworkParams& params, const NetworkConfig& config);

ForwardTrace forward_trace(const NetworkParams& params, const NetworkConfig& config, const Matrix& x);
Prediction forward(const NetworkParams& params, const NetworkConfig& config, const Matrix& x);

/// Weighted empirical loss (1/n) sum w_i l_i: squared error for regression,
/// negative log-likelihood for classification (probabilities clamped at 1e-12).
double loss(const Prediction& pred, std::span<const double> y, std::span<const double> weights,
            const TaskKind& task);

struct LossGradient {
  double loss = 0.0;
  NetworkParams gradient;
};

/// Loss and its exact gradient with respect to every parameter. Subgradients
/// of ReLU and |.| at 0 are taken as 0.
LossGradient loss_and_gradient(const NetworkParams& params, const NetworkConfig& config,
                               const Matrix& x, std::span<const double> y,
                               std::span<const double> weights);

NetworkParams gradient(const NetworkParams& params, const NetworkConfig& config, const Matrix& x,
                       std::span<const double> y, std::span<const double> weights);

enum class PenaltyGroup { Lambda1, Lambda2, Unpenalized };

/// The two L1 penalty levels. lambda1 acts on the input filter and the
/// input-layer skip projection; lambda2 on everything deeper. Biases are
/// penalized only for classification, each with its sibling weight matrix.
struct PenaltySpec {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const;
  double lambda(PenaltyGroup group) const noexcept;
  static PenaltyGroup group_of(TensorKind kind, std::size_t layer, const TaskKind& task) noexcept;
  bool operator==(const PenaltySpec&) const = default;
};

double penalty_value(const NetworkParams& params, const NetworkConfig& config,
                     const PenaltySpec& penalty);

double penalized_objective(const NetworkParams& params, const NetworkConfig& config,
                           const Matrix& x, std::span<const double> y,
                           std::span<const double> weights, const PenaltySpec& penalty);

}  // namespace easiernet
