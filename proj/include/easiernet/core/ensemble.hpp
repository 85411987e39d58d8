#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "easiernet/core/data.hpp"
#include "easiernet/core/network.hpp"
#include "easiernet/core/optimizer.hpp"

namespace easiernet {

/// B independently trained networks sharing one architecture. Members are
/// fitted on the full (standardized) training set; they differ only in
/// initialization and minibatch order.
struct EnsembleModel {
  NetworkConfig config;
  PenaltySpec penalty;
  StandardizationStats preprocessing;
  std::vector<std::string> feature_names;
  std::string target_name = "y";
  std::vector<std::string> class_labels;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> member_seeds;
  std::vector<NetworkParams> members;
  std::vector<FitReport> reports;  // training diagnostics; not persisted

  std::size_t size() const noexcept { return members.size(); }
  void validate() const;
};

/// Member b is trained with seed derive_seed(master_seed, b).
/// With parallel = false members are fitted one after another on the calling
/// thread; the result is identical either way.
EnsembleModel fit_ensemble(const NetworkConfig& config, const Dataset& data, const PenaltySpec& penalty,
                           const AdamConfig& adam, const ProxConfig& prox, std::size_t members,
                           std::uint64_t master_seed, bool parallel = true);

/// Standardizes raw data, fits the ensemble on it and attaches the
/// standardization statistics so the model accepts raw inputs.
EnsembleModel fit_easier_net(const NetworkConfig& config, const Dataset& raw, const PenaltySpec& penalty,
                             const AdamConfig& adam, const ProxConfig& prox, std::size_t members,
                             std::uint64_t master_seed, bool parallel = true);

/// Mean of member predictions on inputs already in the model's standardized
/// feature space. Classification averages probability vectors.
Prediction predict_ensemble(const EnsembleModel& model, const Matrix& x);

/// Predictions for raw inputs: applies the stored standardization and maps
/// regression outputs back to the original target scale.
Prediction predict_raw(const EnsembleModel& model, const Matrix& raw_x);

/// Fraction of members whose support contains each variable.
std::vector<double> selection_rates(const EnsembleModel& model);

}  // namespace easiernet
