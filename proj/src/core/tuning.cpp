#include "easiernet/core/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "easiernet/core/errors.hpp"
#include "easiernet/core/parallel.hpp"

namespace easiernet {
namespace {

constexpr double kTieTolerance = 1e-12;

// Per-class weights of class_weights() for a label set, so that held-out rows
// can be weighted with training frequencies.
std::vector<double> class_weight_table(std::span<const double> labels, std::size_t num_classes) {
  const std::vector<double> per_row = class_weights(labels, num_classes);
  std::vector<double> table(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) table[static_cast<std::size_t>(labels[i])] = per_row[i];
  return table;
}

struct FoldData {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  StandardizationStats stats;
  Dataset train;       // standardized
  Dataset validation;  // standardized with training statistics
};

FoldData prepare_fold(const Dataset& raw, const std::vector<std::vector<std::size_t>>& folds, std::size_t k) {
  FoldData fold;
  fold.validation_rows = folds[k];
  std::sort(fold.validation_rows.begin(), fold.validation_rows.end());
  for (std::size_t j = 0; j < folds.size(); ++j) {
    if (j != k) fold.train_rows.insert(fold.train_rows.end(), folds[j].begin(), folds[j].end());
  }
  std::sort(fold.train_rows.begin(), fold.train_rows.end());

  Dataset train = raw.subset(fold.train_rows);
  Dataset validation = raw.subset(fold.validation_rows);
  if (raw.task.is_classification()) {
    const auto table = class_weight_table(train.y, raw.task.num_classes);
    train.obs_weights = class_weights(train.y, raw.task.num_classes);
    for (std::size_t i = 0; i < validation.n(); ++i) {
      validation.obs_weights[i] = table[static_cast<std::size_t>(validation.y[i])];
    }
  } else {
    std::fill(train.obs_weights.begin(), train.obs_weights.end(), 1.0);
    std::fill(validation.obs_weights.begin(), validation.obs_weights.end(), 1.0);
  }
  fold.stats = compute_standardization(train);
  fold.train = apply_standardization(train, fold.stats);
  fold.validation = apply_standardization(validation, fold.stats);
  return fold;
}

}  // namespace

std::vector<double> CvPlan::log_grid(double lo, double hi, std::size_t count) {
  require(lo > 0.0 && hi >= lo && count >= 1, "log grid needs 0 < lo <= hi and a positive count");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (std::log10(hi) - std::log10(lo)) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = std::pow(10.0, std::log10(lo) + step * static_cast<double>(i));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> CvPlan::default_lambda_grid() { return log_grid(1e-4, 1.0, 5); }

void CvPlan::validate() const {
  require(folds >= 2, "cross-validation needs at least 2 folds");
  require(!lambda1_grid.empty() && !lambda2_grid.empty(), "penalty grids must be nonempty");
  for (double v : lambda1_grid) require(v >= 0.0 && std::isfinite(v), "lambda1 grid values must be nonnegative");
  for (double v : lambda2_grid) require(v >= 0.0 && std::isfinite(v), "lambda2 grid values must be nonnegative");
  require(tuning_members >= 1 && final_members >= 1, "ensemble sizes must be at least 1");
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t folds, RngStream& rng) {
  require(folds >= 1, "fold count must be positive");
  require(folds <= n, "cannot split " + std::to_string(n) + " rows into " + std::to_string(folds) + " folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> out(folds);
  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    out[k].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

std::size_t choose_candidate(std::span<const CvCandidate> candidates) {
  require(!candidates.empty(), "no candidates to choose from");
  double best = candidates[0].mean_loss;
  for (const auto& c : candidates) best = std::min(best, c.mean_loss);
  std::size_t chosen = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].mean_loss > best + kTieTolerance) continue;
    if (chosen == candidates.size()) {
      chosen = i;
      continue;
    }
    const auto& a = candidates[i];
    const auto& b = candidates[chosen];
    if (a.lambda1 > b.lambda1 || (a.lambda1 == b.lambda1 && a.lambda2 > b.lambda2)) chosen = i;
  }
  return chosen;
}

CvResult cross_validate(const CvPlan& plan, const NetworkConfig& config, const Dataset& raw,
                        const AdamConfig& adam, const ProxConfig& prox, const CvObserver& observer) {
  plan.validate();
  config.validate();
  raw.validate();
  require(raw.d() == config.input_dim, "dataset width does not match the network input dimension");

  RngStream split_rng(derive_seed(plan.master_seed, 0));
  const auto folds = kfold_split(raw.n(), plan.folds, split_rng);
  std::vector<FoldData> fold_data;
  fold_data.reserve(plan.folds);
  for (std::size_t k = 0; k < plan.folds; ++k) fold_data.push_back(prepare_fold(raw, folds, k));

  CvResult result;
  for (double l1 : plan.lambda1_grid) {
    for (double l2 : plan.lambda2_grid) {
      CvCandidate c;
      c.lambda1 = l1;
      c.lambda2 = l2;
      c.fold_losses.assign(plan.folds, 0.0);
      result.candidates.push_back(std::move(c));
    }
  }

  const std::size_t cells = result.candidates.size() * plan.folds;
  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t ci = cell / plan.folds;
    const std::size_t k = cell % plan.folds;
    CvCandidate& candidate = result.candidates[ci];
    const FoldData& fold = fold_data[k];
    if (observer) {
      observer(CvCellView{ci, k, fold.train_rows, fold.validation_rows, fold.stats, fold.train});
    }
    const PenaltySpec penalty{candidate.lambda1, candidate.lambda2};
    // Every candidate sees the same member seeds on a given fold.
    const EnsembleModel model = fit_ensemble(config, fold.train, penalty, adam, prox, plan.tuning_members,
                                             derive_seed(plan.master_seed, 1 + k), /*parallel=*/false);
    const Prediction pred = predict_ensemble(model, fold.validation.x);
    candidate.fold_losses[k] = loss(pred, fold.validation.y, fold.validation.obs_weights, config.task);
  });

  const double folds_d = static_cast<double>(plan.folds);
  for (auto& c : result.candidates) {
    c.mean_loss = std::accumulate(c.fold_losses.begin(), c.fold_losses.end(), 0.0) / folds_d;
    double ss = 0.0;
    for (double v : c.fold_losses) ss += (v - c.mean_loss) * (v - c.mean_loss);
    c.std_error = std::sqrt(ss / (folds_d - 1.0)) / std::sqrt(folds_d);
  }
  result.chosen = choose_candidate(result.candidates);

  const CvCandidate& best = result.candidates[result.chosen];
  result.final_model = fit_easier_net(config, raw, PenaltySpec{best.lambda1, best.lambda2}, adam, prox,
                                      plan.final_members, derive_seed(plan.master_seed, 1 + plan.folds));
  return result;
}

}  // namespace easiernet
