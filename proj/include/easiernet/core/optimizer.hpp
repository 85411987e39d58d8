#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "easiernet/core/data.hpp"
#include "easiernet/core/network.hpp"

namespace easiernet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double minibatch_fraction = 1.0 / 3.0;
  std::size_t max_epochs = 2000;
  std::size_t patience_epochs = 10;
  double rel_tol = 1e-4;

  void validate() const;
};

struct ProxConfig {
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  std::size_t max_iters = 500;
  double param_tol = 1e-6;

  void validate() const;
};

struct FitReport {
  std::size_t epochs_run = 0;
  std::size_t prox_iters_run = 0;
  double final_objective = 0.0;
  std::vector<double> objective_trace;  // prox phase, starting point first
  bool adam_converged = false;
  bool prox_converged = false;
};

/// Proximal operator of lam * |.|: shrinks theta toward zero by lam.
inline double soft_threshold(double theta, double lam) noexcept {
  if (theta > lam) return theta - lam;
  if (theta < -lam) return theta + lam;
  return 0.0;
}

struct AdamOutcome {
  NetworkParams params;
  std::size_t epochs = 0;
  bool converged = false;
};

/// Adam over shuffled minibatches on the penalized objective, using the
/// zero-at-zero subgradient of the L1 terms. Stops once the epoch-mean
/// objective has improved on its best value by less than rel_tol (relative)
/// for patience_epochs consecutive epochs, or at max_epochs.
AdamOutcome adam_phase(NetworkParams params, const NetworkConfig& config, const Dataset& data,
                       const PenaltySpec& penalty, const AdamConfig& adam, RngStream& rng);

struct ProxOutcome {
  NetworkParams params;
  FitReport report;  // prox fields only
};

/// Full-batch proximal gradient descent: gradient step on the unpenalized
/// loss, then soft-thresholding of every penalized entry at lambda_group * t.
/// The step t backtracks from initial_step until the penalized objective does
/// not increase.
ProxOutcome prox_phase(NetworkParams params, const NetworkConfig& config, const Dataset& data,
                       const PenaltySpec& penalty, const ProxConfig& prox);

struct FitResult {
  NetworkParams params;
  FitReport report;
};

/// init_params -> adam_phase -> prox_phase, all driven by one seeded stream.
FitResult fit_sier_net(const NetworkConfig& config, const Dataset& data, const PenaltySpec& penalty,
                       const AdamConfig& adam, const ProxConfig& prox, std::uint64_t seed);

}  // namespace easiernet
