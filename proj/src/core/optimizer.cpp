#include "easiernet/core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "easiernet/core/errors.hpp"

namespace easiernet {
namespace {

constexpr int kMaxHalvings = 60;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::vector<double> group_lambdas(const NetworkParams& params, const NetworkConfig& config,
                                  const PenaltySpec& penalty) {
  std::vector<double> lambdas;
  for (const auto& t : tensors(params)) {
    lambdas.push_back(penalty.lambda(PenaltySpec::group_of(t.kind, t.layer, config.task)));
  }
  return lambdas;
}

bool is_penalized(const ConstTensorView& t, const TaskKind& task) {
  return PenaltySpec::group_of(t.kind, t.layer, task) != PenaltyGroup::Unpenalized;
}

void check_nonempty(const Dataset& data) {
  require(data.n() >= 1, "training data is empty");
  require(data.y.size() == data.n() && data.obs_weights.size() == data.n(),
          "training data has inconsistent lengths");
}

}  // namespace

void AdamConfig::validate() const {
  require(learning_rate >= 0.0, "learning rate must be nonnegative");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
  require(eps > 0.0, "Adam eps must be positive");
  require(minibatch_fraction > 0.0 && minibatch_fraction <= 1.0, "minibatch fraction must lie in (0, 1]");
  require(rel_tol > 0.0, "relative tolerance must be positive");
}

void ProxConfig::validate() const {
  require(initial_step > 0.0, "initial prox step must be positive");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0, "backtrack factor must lie in (0, 1)");
  require(param_tol >= 0.0, "parameter tolerance must be nonnegative");
}

AdamOutcome adam_phase(NetworkParams params, const NetworkConfig& config, const Dataset& data,
                       const PenaltySpec& penalty, const AdamConfig& adam, RngStream& rng) {
  check_nonempty(data);
  adam.validate();
  penalty.validate();
  check_shapes(params, config);

  const std::size_t n = data.n();
  const auto batch = static_cast<std::size_t>(
      std::max(1.0, std::ceil(static_cast<double>(n) * adam.minibatch_fraction - 1e-9)));
  const std::vector<double> lambdas = group_lambdas(params, config, penalty);

  NetworkParams first_moment = NetworkParams::zeros(config);
  NetworkParams second_moment = NetworkParams::zeros(config);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  AdamOutcome out;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stalled = 0;
  double decay1 = 1.0;
  double decay2 = 1.0;

  for (std::size_t epoch = 0; epoch < adam.max_epochs; ++epoch) {
    rng.shuffle(order);
    double objective_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix xb = data.x.select_rows(rows);
      std::vector<double> yb, wb;
      yb.reserve(rows.size());
      wb.reserve(rows.size());
      for (std::size_t r : rows) {
        yb.push_back(data.y[r]);
        wb.push_back(data.obs_weights[r]);
      }

      LossGradient lg = loss_and_gradient(params, config, xb, yb, wb);
      objective_sum += lg.loss + penalty_value(params, config, penalty);
      ++batches;

      decay1 *= adam.beta1;
      decay2 *= adam.beta2;
      const double correction1 = 1.0 - decay1;
      const double correction2 = 1.0 - decay2;

      auto p = tensors(params);
      auto g = tensors(lg.gradient);
      auto m = tensors(first_moment);
      auto v = tensors(second_moment);
      for (std::size_t t = 0; t < p.size(); ++t) {
        const double lam = lambdas[t];
        for (std::size_t i = 0; i < p[t].values.size(); ++i) {
          double& theta = p[t].values[i];
          const double grad = g[t].values[i] + lam * sign(theta);
          double& mi = m[t].values[i];
          double& vi = v[t].values[i];
          mi = adam.beta1 * mi + (1.0 - adam.beta1) * grad;
          vi = adam.beta2 * vi + (1.0 - adam.beta2) * grad * grad;
          const double mhat = mi / correction1;
          const double vhat = vi / correction2;
          theta -= adam.learning_rate * mhat / (std::sqrt(vhat) + adam.eps);
        }
      }
    }
    out.epochs = epoch + 1;

    const double epoch_objective = objective_sum / static_cast<double>(batches);
    if (!std::isfinite(epoch_objective)) {
      throw DegenerateModel("Adam diverged: non-finite objective at epoch " + std::to_string(epoch + 1));
    }
    const double improvement =
        std::isinf(best) ? std::numeric_limits<double>::infinity()
                         : (best - epoch_objective) / std::max(std::abs(best), 1e-12);
    best = std::min(best, epoch_objective);
    stalled = improvement < adam.rel_tol ? stalled + 1 : 0;
    if (stalled >= adam.patience_epochs) {
      out.converged = true;
      break;
    }
  }
  out.params = std::move(params);
  return out;
}

ProxOutcome prox_phase(NetworkParams params, const NetworkConfig& config, const Dataset& data,
                       const PenaltySpec& penalty, const ProxConfig& prox) {
  check_nonempty(data);
  prox.validate();
  penalty.validate();
  check_shapes(params, config);

  const std::vector<double> lambdas = group_lambdas(params, config, penalty);
  std::vector<bool> penalized;
  for (const auto& t : tensors(std::as_const(params))) penalized.push_back(is_penalized(t, config.task));

  ProxOutcome out;
  FitReport& report = out.report;
  double current = penalized_objective(params, config, data.x, data.y, data.obs_weights, penalty);
  report.objective_trace.push_back(current);

  for (std::size_t iter = 0; iter < prox.max_iters; ++iter) {
    const LossGradient lg = loss_and_gradient(params, config, data.x, data.y, data.obs_weights);
    const auto p = tensors(std::as_const(params));
    const auto g = tensors(lg.gradient);

    double step = prox.initial_step;
    bool accepted = false;
    NetworkParams candidate = params;
    double candidate_objective = 0.0;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      auto c = tensors(candidate);
      for (std::size_t t = 0; t < c.size(); ++t) {
        const double threshold = lambdas[t] * step;
        for (std::size_t i = 0; i < c[t].values.size(); ++i) {
          double v = p[t].values[i] - step * g[t].values[i];
          if (penalized[t]) {
            v = soft_threshold(v, threshold);
            if (std::fpclassify(v) == FP_SUBNORMAL) v = 0.0;
          }
          c[t].values[i] = v;
        }
      }
      try {
        candidate_objective = penalized_objective(candidate, config, data.x, data.y, data.obs_weights, penalty);
      } catch (const DegenerateModel&) {
        candidate_objective = std::numeric_limits<double>::infinity();  // every alpha hit zero
      }
      if (std::isfinite(candidate_objective) && candidate_objective <= current) {
        accepted = true;
        break;
      }
      step *= prox.backtrack_factor;
    }
    if (!accepted) {
      throw StepSizeUnderflow("proximal step size underflow after " + std::to_string(kMaxHalvings) +
                              " backtracking reductions at iteration " + std::to_string(iter + 1));
    }

    double max_change = 0.0;
    const auto c = tensors(std::as_const(candidate));
    for (std::size_t t = 0; t < c.size(); ++t) {
      for (std::size_t i = 0; i < c[t].values.size(); ++i) {
        max_change = std::max(max_change, std::abs(c[t].values[i] - p[t].values[i]));
      }
    }
    params = std::move(candidate);
    current = candidate_objective;
    report.objective_trace.push_back(current);
    report.prox_iters_run = iter + 1;
    if (max_change < prox.param_tol) {
      report.prox_converged = true;
      break;
    }
  }
  report.final_objective = current;
  out.params = std::move(params);
  return out;
}

FitResult fit_sier_net(const NetworkConfig& config, const Dataset& data, const PenaltySpec& penalty,
                       const AdamConfig& adam, const ProxConfig& prox, std::uint64_t seed) {
  config.validate();
  data.validate();
  penalty.validate();
  require(data.d() == config.input_dim, "dataset width does not match the network input dimension");
  require(data.task == config.task, "dataset task does not match the network task");

  RngStream rng(seed);
  NetworkParams params = init_params(config, rng);
  AdamOutcome adam_out = adam_phase(std::move(params), config, data, penalty, adam, rng);
  ProxOutcome prox_out = prox_phase(std::move(adam_out.params), config, data, penalty, prox);

  FitResult result;
  result.params = std::move(prox_out.params);
  result.report = std::move(prox_out.report);
  result.report.epochs_run = adam_out.epochs;
  result.report.adam_converged = adam_out.converged;
  return result;
}

}  // namespace easiernet
