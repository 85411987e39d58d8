#include "easiernet/easiernet.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "easiernet/core/data.hpp"
#include "easiernet/core/diagnostics.hpp"
#include "easiernet/core/ensemble.hpp"
#include "easiernet/core/errors.hpp"
#include "easiernet/core/model_io.hpp"
#include "easiernet/core/tuning.hpp"

using namespace easiernet;

struct easiernet_dataset {
  Dataset data;
  bool has_target = true;
};

struct easiernet_model {
  EnsembleModel model;
};

struct easiernet_cv_result {
  CvResult result;
};

namespace {

thread_local std::string g_last_error;

easiernet_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ContractViolation: return EASIERNET_ERR_INVALID_ARGUMENT;
    case ErrorKind::DataError: return EASIERNET_ERR_DATA;
    case ErrorKind::DegenerateModel: return EASIERNET_ERR_DEGENERATE_MODEL;
    case ErrorKind::StepSizeUnderflow: return EASIERNET_ERR_STEP_SIZE;
    case ErrorKind::IoError: return EASIERNET_ERR_IO;
  }
  return EASIERNET_ERR_INTERNAL;
}

easiernet_status fail(easiernet_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
easiernet_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return EASIERNET_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EASIERNET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EASIERNET_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(EASIERNET_ERR_INTERNAL, "unknown error");
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) throw ContractViolation(std::string(what) + " must not be NULL");
}

void need_capacity(std::size_t capacity, std::size_t required) {
  if (capacity < required) {
    throw ContractViolation("output buffer holds " + std::to_string(capacity) + " values but " +
                            std::to_string(required) + " are needed");
  }
}

TaskHint hint_of(easiernet_task task) {
  switch (task) {
    case EASIERNET_TASK_REGRESSION: return TaskHint::Regression;
    case EASIERNET_TASK_CLASSIFICATION: return TaskHint::Classification;
    default: return TaskHint::Auto;
  }
}

easiernet_task task_of(const TaskKind& task) {
  return task.is_classification() ? EASIERNET_TASK_CLASSIFICATION : EASIERNET_TASK_REGRESSION;
}

AdamConfig adam_of(const easiernet_fit_options& o) {
  AdamConfig a;
  a.learning_rate = o.learning_rate;
  a.minibatch_fraction = o.minibatch_fraction;
  a.max_epochs = o.max_epochs;
  a.patience_epochs = o.patience_epochs;
  a.rel_tol = o.rel_tol;
  return a;
}

ProxConfig prox_of(const easiernet_fit_options& o) {
  ProxConfig p;
  p.initial_step = o.prox_initial_step;
  p.backtrack_factor = o.prox_backtrack;
  p.max_iters = o.prox_max_iters;
  p.param_tol = o.prox_param_tol;
  return p;
}

NetworkConfig network_of(const easiernet_fit_options& o, const Dataset& data) {
  return NetworkConfig::uniform(data.d(), o.hidden_layers, o.width, data.task, o.skip_connections != 0);
}

const Dataset& labeled(const easiernet_dataset* dataset) {
  need(dataset, "dataset");
  if (!dataset->has_target) throw ContractViolation("dataset has no target column");
  return dataset->data;
}

// Reorders the dataset's columns into the model's feature order.
Matrix aligned_features(const EnsembleModel& model, const easiernet_dataset& dataset) {
  const auto& names = dataset.data.feature_names;
  std::vector<std::size_t> source;
  std::vector<std::string> missing;
  for (const auto& name : model.feature_names) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      missing.push_back(name);
    } else {
      source.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }
  std::vector<std::string> unexpected;
  for (const auto& name : names) {
    if (name == model.target_name) continue;
    if (std::find(model.feature_names.begin(), model.feature_names.end(), name) == model.feature_names.end()) {
      unexpected.push_back(name);
    }
  }
  if (!missing.empty() || !unexpected.empty()) {
    std::string msg = "feature names do not match the model:";
    auto join = [&msg](const char* label, const std::vector<std::string>& list) {
      if (list.empty()) return;
      msg += std::string(" ") + label + " [";
      for (std::size_t i = 0; i < list.size(); ++i) msg += (i ? ", " : "") + list[i];
      msg += "]";
    };
    join("missing", missing);
    join("unexpected", unexpected);
    throw DataError(msg);
  }
  const Matrix& x = dataset.data.x;
  Matrix out(x.rows(), source.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < source.size(); ++c) out(r, c) = x(r, source[c]);
  }
  return out;
}

void copy_prediction(const Prediction& pred, double* out, std::size_t capacity) {
  const auto values = pred.values.data();
  need_capacity(capacity, values.size());
  std::copy(values.begin(), values.end(), out);
}

Matrix matrix_from(const double* x, std::size_t rows, std::size_t cols) {
  need(x, "x");
  return Matrix(rows, cols, std::vector<double>(x, x + rows * cols));
}

const EnsembleModel& model_ref(const easiernet_model* model) {
  need(model, "model");
  return model->model;
}

void check_member(const EnsembleModel& model, std::size_t member) {
  if (member >= model.size()) {
    throw ContractViolation("member index " + std::to_string(member) + " out of range for an ensemble of " +
                            std::to_string(model.size()));
  }
}

}  // namespace

extern "C" {

const char* easiernet_version(void) { return "0.1.0"; }

const char* easiernet_last_error(void) { return g_last_error.c_str(); }

void easiernet_fit_options_default(easiernet_fit_options* o) {
  if (o == nullptr) return;
  const AdamConfig adam;
  const ProxConfig prox;
  *o = easiernet_fit_options{};
  o->hidden_layers = 5;
  o->width = 100;
  o->skip_connections = 1;
  o->lambda1 = 0.0;
  o->lambda2 = 0.0;
  o->ensemble_size = 20;
  o->seed = 0;
  o->learning_rate = adam.learning_rate;
  o->minibatch_fraction = adam.minibatch_fraction;
  o->max_epochs = adam.max_epochs;
  o->patience_epochs = adam.patience_epochs;
  o->rel_tol = adam.rel_tol;
  o->prox_initial_step = prox.initial_step;
  o->prox_backtrack = prox.backtrack_factor;
  o->prox_max_iters = prox.max_iters;
  o->prox_param_tol = prox.param_tol;
}

void easiernet_cv_options_default(easiernet_cv_options* o) {
  if (o == nullptr) return;
  const CvPlan plan;
  *o = easiernet_cv_options{};
  o->folds = plan.folds;
  o->tuning_members = plan.tuning_members;
}

size_t easiernet_default_lambda_grid(double* out, size_t capacity) {
  const auto grid = CvPlan::default_lambda_grid();
  if (out != nullptr) std::copy_n(grid.begin(), std::min(capacity, grid.size()), out);
  return grid.size();
}

/* ---- datasets ---- */

easiernet_status easiernet_dataset_load_csv(const char* path, const char* target, easiernet_task hint,
                                            easiernet_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto handle = std::make_unique<easiernet_dataset>();
    handle->data = load_csv(path, target ? target : "", hint_of(hint));
    *out = handle.release();
  });
}

easiernet_status easiernet_dataset_load_features(const char* path, const char* ignore_column,
                                                 easiernet_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    FeatureTable table = load_feature_csv(path, ignore_column ? ignore_column : "");
    auto handle = std::make_unique<easiernet_dataset>();
    handle->has_target = false;
    handle->data.feature_names = std::move(table.names);
    handle->data.x = std::move(table.x);
    handle->data.target_name.clear();
    *out = handle.release();
  });
}

easiernet_status easiernet_dataset_simulate_additive(size_t num_relevant, size_t d, size_t n, double snr,
                                                     uint64_t seed, easiernet_dataset** out) {
  return guarded([&] {
    need(out, "out");
    auto handle = std::make_unique<easiernet_dataset>();
    handle->data = simulate_additive(num_relevant, d, n, snr, seed);
    *out = handle.release();
  });
}

easiernet_status easiernet_dataset_simulate_correlated(double rho, size_t n, double snr, uint64_t seed,
                                                       easiernet_dataset** out) {
  return guarded([&] {
    need(out, "out");
    auto handle = std::make_unique<easiernet_dataset>();
    handle->data = simulate_correlated(rho, n, snr, seed);
    *out = handle.release();
  });
}

const char* easiernet_additive_warning(size_t num_relevant) {
  thread_local std::string message;
  const auto warning = additive_design_warning(num_relevant);
  if (!warning) return nullptr;
  message = *warning;
  return message.c_str();
}

easiernet_status easiernet_dataset_write_csv(const easiernet_dataset* dataset, const char* path) {
  return guarded([&] {
    need(path, "path");
    write_csv(labeled(dataset), path);
  });
}

void easiernet_dataset_free(easiernet_dataset* dataset) { delete dataset; }

size_t easiernet_dataset_rows(const easiernet_dataset* dataset) { return dataset ? dataset->data.n() : 0; }

size_t easiernet_dataset_cols(const easiernet_dataset* dataset) { return dataset ? dataset->data.d() : 0; }

int easiernet_dataset_has_target(const easiernet_dataset* dataset) {
  return dataset && dataset->has_target ? 1 : 0;
}

easiernet_task easiernet_dataset_task(const easiernet_dataset* dataset) {
  if (dataset == nullptr || !dataset->has_target) return EASIERNET_TASK_AUTO;
  return task_of(dataset->data.task);
}

size_t easiernet_dataset_num_classes(const easiernet_dataset* dataset) {
  return dataset ? dataset->data.task.num_classes : 0;
}

const char* easiernet_dataset_feature_name(const easiernet_dataset* dataset, size_t i) {
  if (dataset == nullptr || i >= dataset->data.feature_names.size()) return nullptr;
  return dataset->data.feature_names[i].c_str();
}

const char* easiernet_dataset_target_name(const easiernet_dataset* dataset) {
  if (dataset == nullptr || !dataset->has_target) return nullptr;
  return dataset->data.target_name.c_str();
}

easiernet_status easiernet_dataset_targets(const easiernet_dataset* dataset, double* out, size_t capacity) {
  return guarded([&] {
    const Dataset& data = labeled(dataset);
    need(out, "out");
    need_capacity(capacity, data.y.size());
    std::copy(data.y.begin(), data.y.end(), out);
  });
}

/* ---- models ---- */

easiernet_status easiernet_model_fit(const easiernet_dataset* dataset, const easiernet_fit_options* options,
                                     easiernet_model** out) {
  return guarded([&] {
    const Dataset& data = labeled(dataset);
    need(options, "options");
    need(out, "out");
    auto handle = std::make_unique<easiernet_model>();
    handle->model = fit_easier_net(network_of(*options, data), data,
                                   PenaltySpec{options->lambda1, options->lambda2}, adam_of(*options),
                                   prox_of(*options), options->ensemble_size, options->seed);
    *out = handle.release();
  });
}

easiernet_status easiernet_model_save(const easiernet_model* model, const char* path) {
  return guarded([&] {
    need(path, "path");
    save_model(model_ref(model), path);
  });
}

easiernet_status easiernet_model_load(const char* path, easiernet_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto handle = std::make_unique<easiernet_model>();
    handle->model = load_model(path);
    *out = handle.release();
  });
}

void easiernet_model_free(easiernet_model* model) { delete model; }

size_t easiernet_model_members(const easiernet_model* model) { return model ? model->model.size() : 0; }

size_t easiernet_model_input_dim(const easiernet_model* model) {
  return model ? model->model.config.input_dim : 0;
}

size_t easiernet_model_output_dim(const easiernet_model* model) {
  return model ? model->model.config.output_dim() : 0;
}

size_t easiernet_model_skip_layers(const easiernet_model* model) {
  return model ? model->model.config.num_skip_layers() : 0;
}

easiernet_task easiernet_model_task(const easiernet_model* model) {
  return model ? task_of(model->model.config.task) : EASIERNET_TASK_AUTO;
}

const char* easiernet_model_feature_name(const easiernet_model* model, size_t i) {
  if (model == nullptr || i >= model->model.feature_names.size()) return nullptr;
  return model->model.feature_names[i].c_str();
}

const char* easiernet_model_target_name(const easiernet_model* model) {
  return model ? model->model.target_name.c_str() : nullptr;
}

const char* easiernet_model_class_label(const easiernet_model* model, size_t k) {
  if (model == nullptr || k >= model->model.class_labels.size()) return nullptr;
  return model->model.class_labels[k].c_str();
}

void easiernet_model_penalty(const easiernet_model* model, double* lambda1, double* lambda2) {
  if (model == nullptr) return;
  if (lambda1) *lambda1 = model->model.penalty.lambda1;
  if (lambda2) *lambda2 = model->model.penalty.lambda2;
}

easiernet_status easiernet_model_member_report(const easiernet_model* model, size_t member,
                                               easiernet_member_report* out) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(out, "out");
    check_member(m, member);
    if (m.reports.size() != m.size()) {
      throw ContractViolation("training reports are only available for models fitted in this process");
    }
    const FitReport& r = m.reports[member];
    out->seed = m.member_seeds[member];
    out->epochs_run = r.epochs_run;
    out->prox_iters_run = r.prox_iters_run;
    out->final_objective = r.final_objective;
    out->adam_converged = r.adam_converged ? 1 : 0;
    out->prox_converged = r.prox_converged ? 1 : 0;
    out->objective_trace_monotone =
        std::is_sorted(r.objective_trace.rbegin(), r.objective_trace.rend()) ? 1 : 0;
  });
}

easiernet_status easiernet_model_predict(const easiernet_model* model, const easiernet_dataset* dataset,
                                         double* out, size_t capacity) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(dataset, "dataset");
    need(out, "out");
    copy_prediction(predict_raw(m, aligned_features(m, *dataset)), out, capacity);
  });
}

easiernet_status easiernet_model_predict_matrix(const easiernet_model* model, const double* x, size_t rows,
                                                size_t cols, double* out, size_t capacity) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(out, "out");
    copy_prediction(predict_raw(m, matrix_from(x, rows, cols)), out, capacity);
  });
}

easiernet_status easiernet_model_member_predict_matrix(const easiernet_model* model, size_t member,
                                                       const double* x, size_t rows, size_t cols,
                                                       double* out, size_t capacity) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(out, "out");
    check_member(m, member);
    copy_prediction(forward(m.members[member], m.config, matrix_from(x, rows, cols)), out, capacity);
  });
}

easiernet_status easiernet_model_selection_rates(const easiernet_model* model, double* out, size_t capacity) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(out, "out");
    const auto rates = selection_rates(m);
    need_capacity(capacity, rates.size());
    std::copy(rates.begin(), rates.end(), out);
  });
}

easiernet_status easiernet_model_member_structure(const easiernet_model* model, size_t member,
                                                  const easiernet_dataset* dataset, easiernet_structure* out,
                                                  double* contributions, size_t capacity) {
  return guarded([&] {
    const EnsembleModel& m = model_ref(model);
    need(out, "out");
    check_member(m, member);
    StructureSummary summary;
    if (dataset != nullptr) {
      const Matrix x = apply_standardization(aligned_features(m, *dataset), m.preprocessing);
      summary = structure_summary(m.members[member], m.config, x);
    } else {
      summary = structure_summary(m.members[member], m.config);
    }
    out->active_layer_count = summary.active_layer_count;
    out->avg_hidden_nodes_per_active_layer = summary.avg_hidden_nodes_per_active_layer;
    out->support_size = summary.support_size;
    out->contributions_available = summary.contributions ? 1 : 0;
    out->contributions_degenerate = summary.contributions && summary.contributions->degenerate ? 1 : 0;
    if (summary.contributions && contributions != nullptr) {
      const auto& p = summary.contributions->proportions;
      need_capacity(capacity, p.size());
      std::copy(p.begin(), p.end(), contributions);
    }
  });
}

/* ---- cross-validation ---- */

easiernet_status easiernet_cross_validate(const easiernet_dataset* dataset, const easiernet_fit_options* options,
                                          const easiernet_cv_options* cv, easiernet_cv_result** out) {
  return guarded([&] {
    const Dataset& data = labeled(dataset);
    need(options, "options");
    need(cv, "cv options");
    need(out, "out");
    CvPlan plan;
    plan.folds = cv->folds;
    plan.tuning_members = cv->tuning_members;
    plan.final_members = options->ensemble_size;
    plan.master_seed = options->seed;
    if (cv->lambda1_grid != nullptr) plan.lambda1_grid.assign(cv->lambda1_grid, cv->lambda1_grid + cv->lambda1_count);
    if (cv->lambda2_grid != nullptr) plan.lambda2_grid.assign(cv->lambda2_grid, cv->lambda2_grid + cv->lambda2_count);
    auto handle = std::make_unique<easiernet_cv_result>();
    handle->result = cross_validate(plan, network_of(*options, data), data, adam_of(*options), prox_of(*options));
    *out = handle.release();
  });
}

size_t easiernet_cv_result_candidates(const easiernet_cv_result* result) {
  return result ? result->result.candidates.size() : 0;
}

easiernet_status easiernet_cv_result_candidate(const easiernet_cv_result* result, size_t index,
                                               easiernet_cv_candidate* out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    const auto& list = result->result.candidates;
    if (index >= list.size()) throw ContractViolation("candidate index out of range");
    out->lambda1 = list[index].lambda1;
    out->lambda2 = list[index].lambda2;
    out->mean_loss = list[index].mean_loss;
    out->std_error = list[index].std_error;
  });
}

size_t easiernet_cv_result_chosen(const easiernet_cv_result* result) { return result ? result->result.chosen : 0; }

easiernet_status easiernet_cv_result_model(const easiernet_cv_result* result, easiernet_model** out) {
  return guarded([&] {
    need(result, "result");
    need(out, "out");
    auto handle = std::make_unique<easiernet_model>();
    handle->model = result->result.final_model;
    *out = handle.release();
  });
}

void easiernet_cv_result_free(easiernet_cv_result* result) { delete result; }

}  // extern "C"
