#include "easiernet/core/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "easiernet/core/errors.hpp"

namespace easiernet {
namespace {

constexpr double kProbabilityFloor = 1e-12;

void add_row_vector(Matrix& m, std::span<const double> bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> sums(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) sums[c] += row[c];
  }
  return sums;
}

void axpy(Matrix& target, double scale, const Matrix& source) {
  auto t = target.data();
  auto s = source.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += scale * s[i];
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::size_t class_index(double label, std::size_t num_classes) {
  const double rounded = std::round(label);
  require(rounded == label && rounded >= 0.0 && rounded < static_cast<double>(num_classes),
          "class label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
  return static_cast<std::size_t>(rounded);
}

template <typename Params, typename View>
std::vector<View> collect(Params& p) {
  std::vector<View> out;
  out.reserve(3 + 2 * p.weights.size() + 2 * p.skip_weights.size());
  out.push_back({TensorKind::Beta, 1, p.beta});
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    out.push_back({TensorKind::Weight, k + 1, p.weights[k].data()});
    out.push_back({TensorKind::Bias, k + 1, p.biases[k]});
  }
  for (std::size_t k = 0; k < p.skip_weights.size(); ++k) {
    out.push_back({TensorKind::SkipWeight, k + 1, p.skip_weights[k].data()});
    out.push_back({TensorKind::SkipBias, k + 1, p.skip_biases[k]});
  }
  out.push_back({TensorKind::Alpha, 0, p.alpha});
  return out;
}

}  // namespace

NetworkConfig NetworkConfig::uniform(std::size_t input_dim, std::size_t hidden_layers,
                                     std::size_t width, TaskKind task, bool skip_connections) {
  NetworkConfig config;
  config.input_dim = input_dim;
  config.num_layers = hidden_layers + 2;
  config.hidden_widths.assign(hidden_layers, width);
  config.task = task;
  config.skip_connections_enabled = skip_connections;
  config.validate();
  return config;
}

void NetworkConfig::validate() const {
  require(input_dim >= 1, "network input dimension must be at least 1");
  require(num_layers >= 2, "network needs at least 2 layers (input and output)");
  require(hidden_widths.size() == num_layers - 2,
          "hidden_widths must list " + std::to_string(num_layers - 2) + " widths");
  for (std::size_t w : hidden_widths) require(w >= 1, "hidden widths must be at least 1");
  if (task.is_classification()) require(task.num_classes >= 2, "classification needs at least 2 classes");
}

std::size_t NetworkConfig::width(std::size_t layer) const {
  require(layer >= 1 && layer <= num_layers, "layer index out of range");
  if (layer == 1) return input_dim;
  if (layer == num_layers) return output_dim();
  return hidden_widths[layer - 2];
}

NetworkParams NetworkParams::zeros(const NetworkConfig& config) {
  config.validate();
  const std::size_t out = config.output_dim();
  NetworkParams p;
  p.beta.assign(config.input_dim, 0.0);
  for (std::size_t l = 1; l <= config.num_hidden_layers(); ++l) {
    p.weights.emplace_back(config.width(l), config.width(l + 1));
    p.biases.emplace_back(config.width(l + 1), 0.0);
  }
  for (std::size_t l = 1; l <= config.num_skip_layers(); ++l) {
    p.skip_weights.emplace_back(config.width(l), out);
    p.skip_biases.emplace_back(out, 0.0);
  }
  p.alpha.assign(config.num_skip_layers(), 0.0);
  return p;
}

std::vector<TensorView> tensors(NetworkParams& params) {
  return collect<NetworkParams, TensorView>(params);
}

std::vector<ConstTensorView> tensors(const NetworkParams& params) {
  return collect<const NetworkParams, ConstTensorView>(params);
}

void check_shapes(const NetworkParams& params, const NetworkConfig& config) {
  config.validate();
  const std::size_t hidden = config.num_hidden_layers();
  const std::size_t skips = config.num_skip_layers();
  const std::size_t out = config.output_dim();
  require(params.beta.size() == config.input_dim, "beta length does not match input dimension");
  require(params.weights.size() == hidden && params.biases.size() == hidden,
          "weight list length does not match hidden layer count");
  require(params.skip_weights.size() == skips && params.skip_biases.size() == skips,
          "skip weight list length does not match layer count");
  require(params.alpha.size() == skips, "alpha length does not match layer count");
  for (std::size_t k = 0; k < hidden; ++k) {
    require(params.weights[k].rows() == config.width(k + 1) &&
                params.weights[k].cols() == config.width(k + 2),
            "weight matrix " + std::to_string(k + 1) + " has the wrong shape");
    require(params.biases[k].size() == config.width(k + 2),
            "bias " + std::to_string(k + 1) + " has the wrong length");
  }
  for (std::size_t k = 0; k < skips; ++k) {
    require(params.skip_weights[k].rows() == config.width(k + 1) &&
                params.skip_weights[k].cols() == out,
            "skip weight matrix " + std::to_string(k + 1) + " has the wrong shape");
    require(params.skip_biases[k].size() == out,
            "skip bias " + std::to_string(k + 1) + " has the wrong length");
  }
}

std::size_t parameter_count(const NetworkParams& params) {
  std::size_t count = 0;
  for (const auto& t : tensors(params)) count += t.values.size();
  return count;
}

NetworkParams init_params(const NetworkConfig& config, RngStream& rng) {
  NetworkParams p = NetworkParams::zeros(config);
  std::fill(p.beta.begin(), p.beta.end(), 1.0);
  std::fill(p.alpha.begin(), p.alpha.end(), 1.0);
  auto fill_uniform = [&rng](Matrix& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.rows()));
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  };
  for (auto& w : p.weights) fill_uniform(w);
  for (auto& w : p.skip_weights) fill_uniform(w);
  return p;
}

std::vector<double> head_mixture(const NetworkParams& params, const NetworkConfig& config) {
  const std::size_t skips = config.num_skip_layers();
  std::vector<double> mix(skips, 0.0);
  if (!config.skip_connections_enabled) {
    mix.back() = 1.0;
    return mix;
  }
  double total = 0.0;
  for (double a : params.alpha) total += std::abs(a);
  if (!(total > 0.0)) throw DegenerateModel("all skip-connection factors alpha are zero");
  for (std::size_t l = 0; l < skips; ++l) mix[l] = std::abs(params.alpha[l]) / total;
  return mix;
}

ForwardTrace forward_trace(const NetworkParams& params, const NetworkConfig& config, const Matrix& x) {
  check_shapes(params, config);
  require(x.cols() == config.input_dim, "input has " + std::to_string(x.cols()) +
                                            " columns, network expects " +
                                            std::to_string(config.input_dim));
  const std::size_t skips = config.num_skip_layers();

  ForwardTrace trace;
  trace.mix = head_mixture(params, config);

  Matrix scaled = x;
  for (std::size_t r = 0; r < scaled.rows(); ++r) {
    auto row = scaled.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) row[i] *= params.beta[i];
  }
  trace.z.push_back(std::move(scaled));
  for (std::size_t k = 0; k < config.num_hidden_layers(); ++k) {
    Matrix pre = matmul(trace.z.back(), params.weights[k]);
    add_row_vector(pre, params.biases[k]);
    trace.z.push_back(relu(pre));
    trace.preact.push_back(std::move(pre));
  }

  trace.head = Matrix(x.rows(), config.output_dim());
  for (std::size_t l = 0; l < skips; ++l) {
    Matrix zeta = matmul(trace.z[l], params.skip_weights[l]);
    add_row_vector(zeta, params.skip_biases[l]);
    if (trace.mix[l] != 0.0) axpy(trace.head, trace.mix[l], zeta);
    trace.zeta.push_back(std::move(zeta));
  }
  trace.output = config.task.is_classification() ? softmax_rows(trace.head) : trace.head;
  return trace;
}

Prediction forward(const NetworkParams& params, const NetworkConfig& config, const Matrix& x) {
  return Prediction{forward_trace(params, config, x).output};
}

double loss(const Prediction& pred, std::span<const double> y, std::span<const double> weights,
            const TaskKind& task) {
  const Matrix& p = pred.values;
  const std::size_t n = p.rows();
  require(y.size() == n && weights.size() == n, "prediction, target and weight lengths differ");
  require(n > 0, "loss of an empty sample");
  double total = 0.0;
  if (task.is_classification()) {
    require(p.cols() == task.num_classes, "prediction width does not match class count");
    for (std::size_t i = 0; i < n; ++i) {
      require(weights[i] >= 0.0, "observation weights must be nonnegative");
      const double prob = p(i, class_index(y[i], task.num_classes));
      total += weights[i] * -std::log(std::max(prob, kProbabilityFloor));
    }
  } else {
    require(p.cols() == 1, "regression prediction must have one column");
    for (std::size_t i = 0; i < n; ++i) {
      require(weights[i] >= 0.0, "observation weights must be nonnegative");
      const double r = p(i, 0) - y[i];
      total += weights[i] * r * r;
    }
  }
  return total / static_cast<double>(n);
}

LossGradient loss_and_gradient(const NetworkParams& params, const NetworkConfig& config,
                               const Matrix& x, std::span<const double> y,
                               std::span<const double> weights) {
  ForwardTrace trace = forward_trace(params, config, x);
  const std::size_t n = x.rows();
  const std::size_t out = config.output_dim();
  const std::size_t skips = config.num_skip_layers();

  LossGradient result;
  result.loss = loss(Prediction{trace.output}, y, weights, config.task);
  NetworkParams& g = result.gradient;
  g = NetworkParams::zeros(config);

  // Adjoint of the head pre-activation.
  Matrix dhead(n, out);
  const double inv_n = 1.0 / static_cast<double>(n);
  if (config.task.is_classification()) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = class_index(y[i], config.task.num_classes);
      if (trace.output(i, c) < kProbabilityFloor) continue;  // clamped: locally constant
      for (std::size_t j = 0; j < out; ++j) {
        dhead(i, j) = weights[i] * inv_n * (trace.output(i, j) - (j == c ? 1.0 : 0.0));
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) dhead(i, 0) = 2.0 * weights[i] * inv_n * (trace.output(i, 0) - y[i]);
  }

  if (config.skip_connections_enabled) {
    double total = 0.0;
    for (double a : params.alpha) total += std::abs(a);
    // d head / d alpha_k = sign(alpha_k) (zeta_k - head) / S
    for (std::size_t k = 0; k < skips; ++k) {
      const double s = sign(params.alpha[k]);
      if (s == 0.0) continue;
      double acc = 0.0;
      auto dh = dhead.data();
      auto zk = trace.zeta[k].data();
      auto hd = trace.head.data();
      for (std::size_t i = 0; i < dh.size(); ++i) acc += dh[i] * (zk[i] - hd[i]);
      g.alpha[k] = s * acc / total;
    }
  }

  Matrix dz_next;  // adjoint of the pre-activation of layer l+1, carried downward
  for (std::size_t idx = skips; idx-- > 0;) {
    // idx is the 0-based position of layer l = idx + 1.
    Matrix dz(n, config.width(idx + 1));
    if (trace.mix[idx] != 0.0) {
      Matrix dzeta = dhead;
      for (double& v : dzeta.data()) v *= trace.mix[idx];
      g.skip_weights[idx] = matmul_tn(trace.z[idx], dzeta);
      g.skip_biases[idx] = column_sums(dzeta);
      dz = matmul_nt(dzeta, params.skip_weights[idx]);
    }
    if (idx + 1 < skips) axpy(dz, 1.0, matmul_nt(dz_next, params.weights[idx]));

    if (idx >= 1) {
      const Matrix& pre = trace.preact[idx - 1];
      auto d = dz.data();
      auto a = pre.data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(a[i] > 0.0)) d[i] = 0.0;
      }
      g.weights[idx - 1] = matmul_tn(trace.z[idx - 1], dz);
      g.biases[idx - 1] = column_sums(dz);
      dz_next = std::move(dz);
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        auto drow = dz.row(r);
        auto xrow = x.row(r);
        for (std::size_t i = 0; i < drow.size(); ++i) g.beta[i] += drow[i] * xrow[i];
      }
    }
  }
  return result;
}

NetworkParams gradient(const NetworkParams& params, const NetworkConfig& config, const Matrix& x,
                       std::span<const double> y, std::span<const double> weights) {
  return loss_and_gradient(params, config, x, y, weights).gradient;
}

void PenaltySpec::validate() const {
  require(lambda1 >= 0.0 && lambda2 >= 0.0 && std::isfinite(lambda1) && std::isfinite(lambda2),
          "penalty parameters must be finite and nonnegative");
}

double PenaltySpec::lambda(PenaltyGroup group) const noexcept {
  switch (group) {
    case PenaltyGroup::Lambda1: return lambda1;
    case PenaltyGroup::Lambda2: return lambda2;
    case PenaltyGroup::Unpenalized: return 0.0;
  }
  return 0.0;
}

PenaltyGroup PenaltySpec::group_of(TensorKind kind, std::size_t layer, const TaskKind& task) noexcept {
  const bool cls = task.is_classification();
  switch (kind) {
    case TensorKind::Beta: return PenaltyGroup::Lambda1;
    case TensorKind::Weight: return PenaltyGroup::Lambda2;
    case TensorKind::Bias: return cls ? PenaltyGroup::Lambda2 : PenaltyGroup::Unpenalized;
    case TensorKind::SkipWeight: return layer == 1 ? PenaltyGroup::Lambda1 : PenaltyGroup::Lambda2;
    case TensorKind::SkipBias:
      if (!cls) return PenaltyGroup::Unpenalized;
      return layer == 1 ? PenaltyGroup::Lambda1 : PenaltyGroup::Lambda2;
    case TensorKind::Alpha: return PenaltyGroup::Unpenalized;
  }
  return PenaltyGroup::Unpenalized;
}

double penalty_value(const NetworkParams& params, const NetworkConfig& config,
                     const PenaltySpec& penalty) {
  penalty.validate();
  double group1 = 0.0;
  double group2 = 0.0;
  for (const auto& t : tensors(params)) {
    const PenaltyGroup group = PenaltySpec::group_of(t.kind, t.layer, config.task);
    if (group == PenaltyGroup::Unpenalized) continue;
    double norm = 0.0;
    for (double v : t.values) norm += std::abs(v);
    (group == PenaltyGroup::Lambda1 ? group1 : group2) += norm;
  }
  return penalty.lambda1 * group1 + penalty.lambda2 * group2;
}

double penalized_objective(const NetworkParams& params, const NetworkConfig& config,
                           const Matrix& x, std::span<const double> y,
                           std::span<const double> weights, const PenaltySpec& penalty) {
  const double fit = loss(forward(params, config, x), y, weights, config.task);
  return fit + penalty_value(params, config, penalty);
}

}  // namespace easiernet
