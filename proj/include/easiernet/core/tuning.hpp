#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "easiernet/core/data.hpp"
#include "easiernet/core/ensemble.hpp"
#include "easiernet/core/optimizer.hpp"

namespace easiernet {

struct CvPlan {
  std::size_t folds = 4;
  std::vector<double> lambda1_grid = default_lambda_grid();
  std::vector<double> lambda2_grid = default_lambda_grid();
  std::size_t tuning_members = 10;
  std::size_t final_members = 20;
  std::uint64_t master_seed = 0;

  /// Five log-spaced values over [1e-4, 1].
  static std::vector<double> default_lambda_grid();
  static std::vector<double> log_grid(double lo, double hi, std::size_t count);
  void validate() const;
};

struct CvCandidate {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> fold_losses;
  double mean_loss = 0.0;
  double std_error = 0.0;
};

struct CvResult {
  std::vector<CvCandidate> candidates;  // lambda1-major over the grid product
  std::size_t chosen = 0;
  EnsembleModel final_model;
};

/// What one (candidate, fold) cell saw. Observers may be called from several
/// threads at once.
struct CvCellView {
  std::size_t candidate;
  std::size_t fold;
  std::span<const std::size_t> train_rows;
  std::span<const std::size_t> validation_rows;
  const StandardizationStats& train_stats;
  const Dataset& train_view;
};
using CvObserver = std::function<void(const CvCellView&)>;

/// Shuffled partition of 0..n-1 into K folds; the first n mod K folds get one
/// extra element.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t folds, RngStream& rng);

/// Among candidates within 1e-12 of the smallest mean loss, the one with the
/// largest lambda1, then the largest lambda2.
std::size_t choose_candidate(std::span<const CvCandidate> candidates);

/// Grid search by K-fold cross-validation on raw (unstandardized) data.
/// Standardization and class weights are recomputed on each training split
/// and applied to its held-out fold. The winner is refitted on all rows with
/// final_members members.
CvResult cross_validate(const CvPlan& plan, const NetworkConfig& config, const Dataset& raw,
                        const AdamConfig& adam, const ProxConfig& prox,
                        const CvObserver& observer = {});

}  // namespace easiernet
