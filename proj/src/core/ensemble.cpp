#include "easiernet/core/ensemble.hpp"

#include "easiernet/core/diagnostics.hpp"
#include "easiernet/core/errors.hpp"
#include "easiernet/core/parallel.hpp"

namespace easiernet {

void EnsembleModel::validate() const {
  config.validate();
  penalty.validate();
  require(!members.empty(), "ensemble has no members");
  require(member_seeds.size() == members.size(), "member seed count does not match member count");
  require(feature_names.size() == config.input_dim, "feature name count does not match input dimension");
  if (config.task.is_classification()) {
    require(class_labels.size() == config.task.num_classes, "class label count does not match task");
  }
  for (const auto& member : members) check_shapes(member, config);
}

EnsembleModel fit_ensemble(const NetworkConfig& config, const Dataset& data, const PenaltySpec& penalty,
                           const AdamConfig& adam, const ProxConfig& prox, std::size_t members,
                           std::uint64_t master_seed, bool parallel) {
  require(members >= 1, "ensemble size must be at least 1");
  config.validate();
  data.validate();

  EnsembleModel model;
  model.config = config;
  model.penalty = penalty;
  model.feature_names = data.feature_names;
  model.target_name = data.target_name;
  model.class_labels = data.class_labels;
  model.master_seed = master_seed;
  model.member_seeds.resize(members);
  for (std::size_t b = 0; b < members; ++b) model.member_seeds[b] = derive_seed(master_seed, b);

  std::vector<FitResult> fits(members);
  auto fit_one = [&](std::size_t b) {
    fits[b] = fit_sier_net(config, data, penalty, adam, prox, model.member_seeds[b]);
  };
  if (parallel) {
    parallel_for(members, fit_one);
  } else {
    for (std::size_t b = 0; b < members; ++b) fit_one(b);
  }
  for (auto& fit : fits) {
    model.members.push_back(std::move(fit.params));
    model.reports.push_back(std::move(fit.report));
  }
  // Identity preprocessing until the caller attaches real statistics.
  model.preprocessing.feature_mean.assign(config.input_dim, 0.0);
  model.preprocessing.feature_sd.assign(config.input_dim, 1.0);
  model.preprocessing.feature_constant.assign(config.input_dim, false);
  return model;
}

EnsembleModel fit_easier_net(const NetworkConfig& config, const Dataset& raw, const PenaltySpec& penalty,
                             const AdamConfig& adam, const ProxConfig& prox, std::size_t members,
                             std::uint64_t master_seed, bool parallel) {
  Dataset train = raw;
  train.obs_weights = default_weights(raw.task, raw.y);
  Standardized standardized = standardize(train);
  EnsembleModel model = fit_ensemble(config, standardized.dataset, penalty, adam, prox, members,
                                     master_seed, parallel);
  model.preprocessing = std::move(standardized.stats);
  return model;
}

Prediction predict_ensemble(const EnsembleModel& model, const Matrix& x) {
  require(!model.members.empty(), "ensemble has no members");
  Matrix sum(x.rows(), model.config.output_dim());
  for (const auto& member : model.members) {
    const Prediction p = forward(member, model.config, x);
    auto s = sum.data();
    auto v = p.values.data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(model.members.size());
  for (double& v : sum.data()) v *= inv;
  return Prediction{std::move(sum)};
}

Prediction predict_raw(const EnsembleModel& model, const Matrix& raw_x) {
  Prediction p = predict_ensemble(model, apply_standardization(raw_x, model.preprocessing));
  if (!model.config.task.is_classification()) {
    for (double& v : p.values.data()) v = destandardize_target(v, model.preprocessing);
  }
  return p;
}

std::vector<double> selection_rates(const EnsembleModel& model) {
  require(!model.members.empty(), "ensemble has no members");
  std::vector<double> counts(model.config.input_dim, 0.0);
  for (const auto& member : model.members) {
    for (std::size_t i : support_of(member, model.config)) counts[i] += 1.0;
  }
  const double b = static_cast<double>(model.members.size());
  for (double& c : counts) c /= b;
  return counts;
}

}  // namespace easiernet
