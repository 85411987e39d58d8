// easiernet command-line tool: fit, cv, predict, simulate and report.
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "easiernet/easiernet.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

void check(easiernet_status status) {
  if (status == EASIERNET_OK) return;
  const int code = status == EASIERNET_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
  throw Failure{code, easiernet_last_error()};
}

struct DatasetDeleter {
  void operator()(easiernet_dataset* d) const { easiernet_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(easiernet_model* m) const { easiernet_model_free(m); }
};
struct CvDeleter {
  void operator()(easiernet_cv_result* r) const { easiernet_cv_result_free(r); }
};
using DatasetPtr = std::unique_ptr<easiernet_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<easiernet_model, ModelDeleter>;
using CvPtr = std::unique_ptr<easiernet_cv_result, CvDeleter>;

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  }
  return out;
}

std::string mean_se_text(const std::vector<double>& v) {
  const MeanSe m = mean_se(v);
  return fixed(m.mean) + " (se " + fixed(m.se) + ")";
}

struct FitArgs {
  std::string data;
  std::string target;
  std::string task = "auto";
  std::string out;
  bool no_skip = false;
  easiernet_fit_options options{};
};

easiernet_task parse_task(const std::string& task) {
  if (task == "regression") return EASIERNET_TASK_REGRESSION;
  if (task == "classification") return EASIERNET_TASK_CLASSIFICATION;
  return EASIERNET_TASK_AUTO;
}

void add_common_fit_flags(CLI::App* cmd, FitArgs& args) {
  easiernet_fit_options_default(&args.options);
  auto& o = args.options;
  cmd->add_option("--data", args.data, "Training CSV with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--target", args.target, "Target column (default: last column)");
  cmd->add_option("--task", args.task, "Task type")
      ->check(CLI::IsMember({"auto", "regression", "classification"}))
      ->capture_default_str();
  cmd->add_option("--ensemble-size", o.ensemble_size, "Number of networks in the ensemble")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--layers", o.hidden_layers, "Hidden layers")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--width", o.width, "Nodes per hidden layer")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_flag("--no-skip", args.no_skip, "Disable skip connections");
  cmd->add_option("--out", args.out, "Output model file")->required();
  cmd->add_option("--learning-rate", o.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--batch-fraction", o.minibatch_fraction, "Minibatch size as a fraction of n")
      ->capture_default_str();
  cmd->add_option("--max-epochs", o.max_epochs, "Adam epoch limit")->capture_default_str();
  cmd->add_option("--patience", o.patience_epochs, "Epochs without improvement before Adam stops")
      ->capture_default_str();
  cmd->add_option("--rel-tol", o.rel_tol, "Relative improvement threshold for Adam")->capture_default_str();
  cmd->add_option("--prox-max-iters", o.prox_max_iters, "Proximal iteration limit")->capture_default_str();
  cmd->add_option("--prox-tol", o.prox_param_tol, "Proximal parameter-change tolerance")->capture_default_str();
}

DatasetPtr load_training(const FitArgs& args) {
  easiernet_dataset* raw = nullptr;
  check(easiernet_dataset_load_csv(args.data.c_str(), args.target.c_str(), parse_task(args.task), &raw));
  DatasetPtr data(raw);
  std::cout << "data: " << easiernet_dataset_rows(raw) << " rows, " << easiernet_dataset_cols(raw)
            << " features, target '" << easiernet_dataset_target_name(raw) << "' ("
            << (easiernet_dataset_task(raw) == EASIERNET_TASK_CLASSIFICATION
                    ? std::to_string(easiernet_dataset_num_classes(raw)) + "-class classification"
                    : std::string("regression"))
            << ")\n";
  return data;
}

std::vector<double> selection_rates(const easiernet_model* model) {
  std::vector<double> rates(easiernet_model_input_dim(model));
  check(easiernet_model_selection_rates(model, rates.data(), rates.size()));
  return rates;
}

void print_fit_summary(const easiernet_model* model, const easiernet_dataset* train) {
  const std::size_t members = easiernet_model_members(model);
  const std::size_t layers = easiernet_model_skip_layers(model);
  double l1 = 0.0, l2 = 0.0;
  easiernet_model_penalty(model, &l1, &l2);
  std::cout << "penalties: lambda1 = " << fmt(l1) << ", lambda2 = " << fmt(l2) << "\n";
  std::cout << "member  seed                  epochs  prox_iters  objective     support\n";

  std::vector<double> objectives, supports;
  std::vector<std::vector<double>> contributions(layers);
  std::size_t degenerate = 0;
  for (std::size_t b = 0; b < members; ++b) {
    easiernet_member_report report{};
    check(easiernet_model_member_report(model, b, &report));
    easiernet_structure s{};
    std::vector<double> contrib(layers);
    check(easiernet_model_member_structure(model, b, train, &s, contrib.data(), contrib.size()));
    objectives.push_back(report.final_objective);
    supports.push_back(static_cast<double>(s.support_size));
    if (s.contributions_degenerate) {
      ++degenerate;
    } else {
      for (std::size_t l = 0; l < layers; ++l) contributions[l].push_back(contrib[l]);
    }
    char line[160];
    std::snprintf(line, sizeof line, "%6zu  %-20llu  %6zu  %10zu  %-12.6g  %7zu\n", b,
                  static_cast<unsigned long long>(report.seed), report.epochs_run, report.prox_iters_run,
                  report.final_objective, s.support_size);
    std::cout << line;
  }
  std::cout << "final training objective (standardized scale): " << mean_se_text(objectives) << "\n";
  std::cout << "support size: " << mean_se_text(supports) << "\n";
  std::cout << "variance contributions by layer (training data):";
  for (std::size_t l = 0; l < layers; ++l) {
    std::cout << " " << (contributions[l].empty() ? std::string("n/a") : fixed(mean_se(contributions[l]).mean));
  }
  std::cout << "\n";
  if (degenerate > 0) std::cout << degenerate << " member(s) have a constant output; contributions undefined\n";

  const auto rates = selection_rates(model);
  std::cout << "selected variables (rate >= 0.5):";
  bool any = false;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] >= 0.5) {
      std::cout << " " << easiernet_model_feature_name(model, i);
      any = true;
    }
  }
  std::cout << (any ? "\n" : " none\n");
}

void finish_options(FitArgs& args) { args.options.skip_connections = args.no_skip ? 0 : 1; }

int run_fit(FitArgs& args) {
  finish_options(args);
  DatasetPtr data = load_training(args);
  easiernet_model* raw = nullptr;
  check(easiernet_model_fit(data.get(), &args.options, &raw));
  ModelPtr model(raw);
  std::cout << "fitted " << easiernet_model_members(raw) << " member(s), " << args.options.hidden_layers
            << " hidden layers x " << args.options.width << " nodes, skip connections "
            << (args.no_skip ? "off" : "on") << "\n";
  print_fit_summary(raw, data.get());
  check(easiernet_model_save(raw, args.out.c_str()));
  std::cout << "model written to " << args.out << "\n";
  return 0;
}

std::vector<double> parse_grid(const std::string& text, const char* flag) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw Failure{kExitUsage, std::string(flag) + ": empty grid entry"};
    item = item.substr(first, last - first + 1);
    double v = 0.0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || end != item.data() + item.size() || !(v >= 0.0) || std::isinf(v)) {
      throw Failure{kExitUsage, std::string(flag) + ": '" + item + "' is not a nonnegative number"};
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw Failure{kExitUsage, std::string(flag) + ": grid is empty"};
  return grid;
}

struct CvArgs {
  FitArgs fit;
  std::string lambda1_grid;
  std::string lambda2_grid;
  std::string results;
  easiernet_cv_options cv{};
};

int run_cv(CvArgs& args) {
  finish_options(args.fit);
  std::vector<double> g1, g2;
  if (!args.lambda1_grid.empty()) g1 = parse_grid(args.lambda1_grid, "--lambda1-grid");
  if (!args.lambda2_grid.empty()) g2 = parse_grid(args.lambda2_grid, "--lambda2-grid");
  args.cv.lambda1_grid = g1.empty() ? nullptr : g1.data();
  args.cv.lambda1_count = g1.size();
  args.cv.lambda2_grid = g2.empty() ? nullptr : g2.data();
  args.cv.lambda2_count = g2.size();

  DatasetPtr data = load_training(args.fit);
  easiernet_cv_result* raw = nullptr;
  check(easiernet_cross_validate(data.get(), &args.fit.options, &args.cv, &raw));
  CvPtr result(raw);

  const std::size_t count = easiernet_cv_result_candidates(raw);
  const std::size_t chosen = easiernet_cv_result_chosen(raw);
  std::ofstream csv(args.results);
  if (!csv) throw Failure{kExitRuntime, "cannot open '" + args.results + "' for writing"};
  csv << "candidate,lambda1,lambda2,mean_loss,std_error,chosen\n";
  std::cout << "candidate  lambda1       lambda2       mean_loss     std_error\n";
  for (std::size_t i = 0; i < count; ++i) {
    easiernet_cv_candidate c{};
    check(easiernet_cv_result_candidate(raw, i, &c));
    csv << i << ',' << fmt(c.lambda1) << ',' << fmt(c.lambda2) << ',' << fmt(c.mean_loss) << ','
        << fmt(c.std_error) << ',' << (i == chosen ? 1 : 0) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%9zu  %-12.6g  %-12.6g  %-12.6g  %-12.6g%s\n", i, c.lambda1, c.lambda2,
                  c.mean_loss, c.std_error, i == chosen ? "  <- chosen" : "");
    std::cout << line;
  }
  if (!csv) throw Failure{kExitRuntime, "failed while writing '" + args.results + "'"};

  easiernet_model* model_raw = nullptr;
  check(easiernet_cv_result_model(raw, &model_raw));
  ModelPtr model(model_raw);
  std::cout << "refitted " << easiernet_model_members(model_raw) << " member(s) at the chosen candidate\n";
  print_fit_summary(model_raw, data.get());
  check(easiernet_model_save(model_raw, args.fit.out.c_str()));
  std::cout << "model written to " << args.fit.out << "\nresults written to " << args.results << "\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out;
};

ModelPtr load_model(const std::string& path) {
  easiernet_model* raw = nullptr;
  check(easiernet_model_load(path.c_str(), &raw));
  return ModelPtr(raw);
}

int run_predict(const PredictArgs& args) {
  ModelPtr model = load_model(args.model);
  easiernet_dataset* raw = nullptr;
  // The training target column, if present, is not a feature.
  check(easiernet_dataset_load_features(args.data.c_str(), easiernet_model_target_name(model.get()), &raw));
  DatasetPtr data(raw);

  const std::size_t rows = easiernet_dataset_rows(raw);
  const std::size_t k = easiernet_model_output_dim(model.get());
  std::vector<double> out(rows * k);
  check(easiernet_model_predict(model.get(), raw, out.data(), out.size()));

  std::ofstream file;
  if (!args.out.empty()) {
    file.open(args.out);
    if (!file) throw Failure{kExitRuntime, "cannot open '" + args.out + "' for writing"};
  }
  std::ostream& os = args.out.empty() ? std::cout : file;
  const bool classification = easiernet_model_task(model.get()) == EASIERNET_TASK_CLASSIFICATION;
  if (classification) {
    for (std::size_t c = 0; c < k; ++c) os << "p_" << easiernet_model_class_label(model.get(), c) << ',';
    os << "label\n";
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t best = 0;
      for (std::size_t c = 0; c < k; ++c) {
        os << fmt(out[r * k + c]) << ',';
        if (out[r * k + c] > out[r * k + best]) best = c;
      }
      os << easiernet_model_class_label(model.get(), best) << '\n';
    }
  } else {
    os << "prediction\n";
    for (std::size_t r = 0; r < rows; ++r) os << fmt(out[r]) << '\n';
  }
  if (!os) throw Failure{kExitRuntime, "failed while writing predictions"};
  return 0;
}

struct SimulateArgs {
  std::size_t num_relevant = 20;
  std::size_t d = 100;
  std::size_t n = 600;
  double rho = 0.0;
  std::string snr = "2";
  std::uint64_t seed = 0;
  std::string out;
};

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "infinity") return INFINITY;
  double v = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Failure{kExitUsage, "--snr: '" + text + "' is not a number or 'inf'"};
  }
  return v;
}

int run_simulate(const SimulateArgs& args, bool additive) {
  easiernet_dataset* raw = nullptr;
  const double snr = parse_snr(args.snr);
  if (additive) {
    if (const char* warning = easiernet_additive_warning(args.num_relevant)) {
      std::cerr << "warning: " << warning << "\n";
    }
    check(easiernet_dataset_simulate_additive(args.num_relevant, args.d, args.n, snr, args.seed, &raw));
  } else {
    check(easiernet_dataset_simulate_correlated(args.rho, args.n, snr, args.seed, &raw));
  }
  DatasetPtr data(raw);
  check(easiernet_dataset_write_csv(raw, args.out.c_str()));
  std::cout << "wrote " << easiernet_dataset_rows(raw) << " rows x " << easiernet_dataset_cols(raw) + 1
            << " columns to " << args.out << "\n";
  return 0;
}

struct ReportArgs {
  std::string model;
  std::string data;
};

int run_report(const ReportArgs& args) {
  ModelPtr model = load_model(args.model);
  const easiernet_model* m = model.get();
  DatasetPtr data;
  if (!args.data.empty()) {
    easiernet_dataset* raw = nullptr;
    check(easiernet_dataset_load_features(args.data.c_str(), easiernet_model_target_name(m), &raw));
    data.reset(raw);
  }

  const std::size_t members = easiernet_model_members(m);
  const std::size_t layers = easiernet_model_skip_layers(m);
  double l1 = 0.0, l2 = 0.0;
  easiernet_model_penalty(m, &l1, &l2);
  std::cout << "model: " << members << " member(s), " << easiernet_model_input_dim(m) << " features, "
            << (easiernet_model_task(m) == EASIERNET_TASK_CLASSIFICATION ? "classification" : "regression")
            << ", lambda1 = " << fmt(l1) << ", lambda2 = " << fmt(l2) << "\n\n";

  std::cout << "member  support  active_layers  avg_nodes_per_active_layer  variance_contributions\n";
  std::vector<double> supports, active, nodes;
  std::vector<std::vector<double>> contributions(layers);
  for (std::size_t b = 0; b < members; ++b) {
    easiernet_structure s{};
    std::vector<double> contrib(layers);
    check(easiernet_model_member_structure(m, b, data.get(), &s, contrib.data(), contrib.size()));
    supports.push_back(static_cast<double>(s.support_size));
    active.push_back(static_cast<double>(s.active_layer_count));
    nodes.push_back(s.avg_hidden_nodes_per_active_layer);
    std::string contrib_text;
    if (!s.contributions_available) {
      contrib_text = "unavailable (needs --data)";
    } else if (s.contributions_degenerate) {
      contrib_text = "undefined (constant output)";
    } else {
      for (std::size_t l = 0; l < layers; ++l) {
        contributions[l].push_back(contrib[l]);
        contrib_text += (l ? " " : "") + fixed(contrib[l]);
      }
    }
    char line[128];
    std::snprintf(line, sizeof line, "%6zu  %7zu  %13zu  %26.4f  ", b, s.support_size, s.active_layer_count,
                  s.avg_hidden_nodes_per_active_layer);
    std::cout << line << contrib_text << "\n";
  }

  const auto rates = selection_rates(m);
  std::vector<std::size_t> order(rates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rates[a] > rates[b]; });
  std::cout << "\nselection rates (descending):\n";
  for (std::size_t i : order) {
    char line[64];
    std::snprintf(line, sizeof line, "  %-16s %.4f\n", easiernet_model_feature_name(m, i), rates[i]);
    std::cout << line;
  }

  std::cout << "\naverages over members (mean, standard error):\n";
  std::cout << "  support size                  " << mean_se_text(supports) << "\n";
  std::cout << "  active layers                 " << mean_se_text(active) << "\n";
  std::cout << "  avg nodes per active layer    " << mean_se_text(nodes) << "\n";
  for (std::size_t l = 0; l < layers; ++l) {
    std::cout << "  contribution of layer " << l + 1 << "       "
              << (contributions[l].empty() ? std::string("unavailable") : mean_se_text(contributions[l])) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-input hierarchical networks (SIER-net) and their ensembles (EASIER-net)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(easiernet_version()));

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Standardize a dataset and fit an ensemble");
  add_common_fit_flags(fit_cmd, fit);
  fit_cmd->add_option("--lambda1", fit.options.lambda1, "Input-sparsity penalty")
      ->required()
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--lambda2", fit.options.lambda2, "Hidden-structure penalty")
      ->required()
      ->check(CLI::NonNegativeNumber);

  CvArgs cv;
  easiernet_cv_options_default(&cv.cv);
  auto* cv_cmd = app.add_subcommand("cv", "Choose penalties by K-fold cross-validation, then refit");
  add_common_fit_flags(cv_cmd, cv.fit);
  cv_cmd->add_option("--lambda1-grid", cv.lambda1_grid, "Comma-separated lambda1 values (default 1e-4..1, 5 values)");
  cv_cmd->add_option("--lambda2-grid", cv.lambda2_grid, "Comma-separated lambda2 values (default 1e-4..1, 5 values)");
  cv_cmd->add_option("--folds", cv.cv.folds, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  cv_cmd->add_option("--tuning-members", cv.cv.tuning_members, "Ensemble size during tuning")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv_cmd->add_option("--results", cv.results, "CSV file for the grid results")->required();

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict with a saved model");
  predict_cmd->add_option("--model", predict.model, "Model file")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--data", predict.data, "CSV with the model's feature columns")
      ->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", predict.out, "Output CSV (default: standard output)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Write a simulated dataset");
  sim_cmd->require_subcommand(1);
  auto* additive_cmd = sim_cmd->add_subcommand("additive", "Sum of sin(2a + 2b) + 5c|e - 0.25| blocks");
  additive_cmd->add_option("--num-relevant", sim.num_relevant, "Relevant covariates (multiple of 4)")
      ->capture_default_str();
  additive_cmd->add_option("--d", sim.d, "Total covariates")->capture_default_str();
  additive_cmd->add_option("--n", sim.n, "Rows")->capture_default_str();
  additive_cmd->add_option("--snr", sim.snr, "Signal-to-noise variance ratio, or inf")->capture_default_str();
  additive_cmd->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  additive_cmd->add_option("--out", sim.out, "Output CSV")->required();
  auto* correlated_cmd = sim_cmd->add_subcommand("correlated", "X1 X2 + sin(X3 + X4) with correlated copies");
  correlated_cmd->add_option("--rho", sim.rho, "Correlation parameter in [0, 1]")->capture_default_str();
  correlated_cmd->add_option("--n", sim.n, "Rows")->capture_default_str();
  correlated_cmd->add_option("--snr", sim.snr, "Signal-to-noise variance ratio, or inf")->capture_default_str();
  correlated_cmd->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  correlated_cmd->add_option("--out", sim.out, "Output CSV")->required();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Structure and selection report for a saved model");
  report_cmd->add_option("--model", report.model, "Model file")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--data", report.data, "CSV for variance contributions")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit_cmd) return run_fit(fit);
    if (*cv_cmd) return run_cv(cv);
    if (*predict_cmd) return run_predict(predict);
    if (*additive_cmd) return run_simulate(sim, true);
    if (*correlated_cmd) return run_simulate(sim, false);
    if (*report_cmd) return run_report(report);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
