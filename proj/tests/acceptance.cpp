// Acceptance suite. Usage: easiernet_acceptance [criterion...]; with no
// arguments every criterion runs. One PASS/FAIL line per criterion; the exit
// code is nonzero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "easiernet/core/diagnostics.hpp"
#include "easiernet/core/ensemble.hpp"
#include "easiernet/core/model_io.hpp"
#include "easiernet/core/optimizer.hpp"
#include "easiernet/core/tuning.hpp"
#include "oracles.hpp"

using namespace easiernet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

bool trace_non_increasing(const FitReport& r) {
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
    if (r.objective_trace[i] > r.objective_trace[i - 1]) return false;
  return true;
}

// Gradient oracle.
Outcome criterion1() {
  RngStream rng(20240101);
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (int net = 0; net < 20; ++net) {
    const std::size_t d = 3 + rng.uniform_index(4);
    const std::size_t layers = 3 + rng.uniform_index(2);
    const bool classify = net % 2 == 1;
    NetworkConfig c;
    c.input_dim = d;
    c.num_layers = layers;
    for (std::size_t l = 0; l + 2 < layers; ++l) c.hidden_widths.push_back(1 + rng.uniform_index(5));
    c.task = classify ? TaskKind::classification(2 + rng.uniform_index(2)) : TaskKind::regression();
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const std::size_t n = 6;
    Matrix x(n, d);
    for (double& v : x.data()) v = rng.normal();
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = classify ? static_cast<double>(rng.uniform_index(c.task.num_classes)) : rng.normal();
      w[i] = rng.uniform(0.5, 1.5);
    }
    const NetworkParams g = gradient(p, c, x, y, w);
    const oracle::GradientCheck r = oracle::check_gradient(p, c, x, y, w, g, 1e-5, 1e-8);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped;
  }
  return {worst <= 1e-5 && checked > 0, "20 networks, " + std::to_string(checked) + " entries checked, " +
                                            std::to_string(skipped) + " near kinks skipped, max relative error " +
                                            num(worst) + " (tolerance 1e-5)"};
}

// Soft-thresholding and the prox of lambda t |u|.
Outcome criterion2() {
  std::size_t mismatches = 0;
  for (double lt : {0.0, 0.3, 1.7}) {
    for (int i = 0; i < 10000; ++i) {
      const double v = -5.0 + 10.0 * i / 9999.0;
      const double expected = v > lt ? v - lt : (v < -lt ? v + lt : 0.0);
      if (soft_threshold(v, lt) != expected) ++mismatches;
    }
  }
  RngStream rng(77);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double v = rng.uniform(-4.0, 4.0);
    const double lt = rng.uniform(0.0, 2.0);
    worst = std::max(worst, std::abs(soft_threshold(v, lt) - oracle::brute_force_prox(v, lt)));
  }
  return {mismatches == 0 && worst <= 1e-6, "grid mismatches " + std::to_string(mismatches) +
                                                " of 30000; brute-force max deviation " + num(worst) +
                                                " over 100 pairs (tolerance 1e-6)"};
}

Dataset centered_line(std::size_t n, double slope, double noise, RngStream& rng) {
  Dataset d;
  d.x = Matrix(n, 1);
  d.y.resize(n);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) = rng.normal();
    d.y[i] = slope * d.x(i, 0) + noise * rng.normal();
    mx += d.x(i, 0);
    my += d.y[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) -= mx / n;
    d.y[i] -= my / n;
  }
  d.feature_names = {"x1"};
  d.task = TaskKind::regression();
  d.obs_weights.assign(n, 1.0);
  return d;
}

// Local minimizers of a (c - c_ls)^2 + 2 lambda sqrt|c|, the objective the
// product c = beta w sees when both factors carry lambda |.|: always 0, plus
// the largest root of 2a(c - |c_ls|) + lambda / sqrt(c) = 0 when one exists.
std::vector<double> factorized_minimizers(double a, double c_ls, double lambda) {
  std::vector<double> out = {0.0};
  const double target = std::abs(c_ls);
  auto g = [&](double c) { return 2.0 * a * (c - target) + lambda / std::sqrt(c); };
  double lo = std::pow(lambda / (4.0 * a), 2.0 / 3.0), hi = target;
  if (lo >= hi || g(lo) > 0.0) return out;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  out.push_back(std::copysign(0.5 * (lo + hi), c_ls));
  return out;
}

// A 1-feature network with no hidden layer is y = beta w' x + b'. Its learned
// coefficient is compared with the univariate lasso solution.
Outcome criterion3() {
  const NetworkConfig c = NetworkConfig::uniform(1, 0, 1, TaskKind::regression());
  AdamConfig adam;
  adam.learning_rate = 1e-2;
  adam.minibatch_fraction = 1.0;
  adam.max_epochs = 5000;
  adam.patience_epochs = 50;
  adam.rel_tol = 1e-10;
  ProxConfig prox;
  prox.max_iters = 50000;
  prox.param_tol = 1e-12;
  RngStream rng(3);
  double worst = 0.0, worst_factorized = 0.0;
  std::string per_lambda;
  for (double lambda : {0.02, 0.1, 0.4}) {
    double worst_here = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
      const Dataset data = centered_line(100, rng.uniform(0.3, 1.5), 0.5, rng);
      const FitResult fit = fit_sier_net(c, data, {lambda, 0.0}, adam, prox, derive_seed(11, inst));
      const double coef = fit.params.beta[0] * fit.params.skip_weights[0](0, 0);
      const std::vector<double> x(data.x.data().begin(), data.x.data().end());
      const double lasso = oracle::univariate_lasso(x, data.y, lambda);
      worst_here = std::max(worst_here, std::abs(coef - lasso));
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * data.y[i];
      }
      double nearest = std::numeric_limits<double>::infinity();
      for (double m : factorized_minimizers(sxx / x.size(), sxy / sxx, lambda))
        nearest = std::min(nearest, std::abs(coef - m));
      worst_factorized = std::max(worst_factorized, nearest);
    }
    worst = std::max(worst, worst_here);
    per_lambda += (per_lambda.empty() ? "" : ", ") + std::string("lambda ") + num(lambda) + ": " + num(worst_here);
  }
  return {worst <= 1e-4, "max |coef - lasso| by lambda (" + per_lambda +
                            "), tolerance 1e-4; distance to the nearest local minimizer of a(c - c_ls)^2 + 2 lambda sqrt|c| " +
                            num(worst_factorized)};
}

AdamConfig desk_adam() {
  AdamConfig a;
  a.learning_rate = 5e-3;
  a.max_epochs = 400;
  a.patience_epochs = 10;
  return a;
}

ProxConfig desk_prox() {
  ProxConfig p;
  p.max_iters = 200;
  p.param_tol = 1e-5;
  return p;
}

struct CorrelatedRun {
  std::vector<double> rates;
  CvResult cv;
};

CorrelatedRun correlated_run(double rho, std::size_t members) {
  const Dataset raw = simulate_correlated(rho, 500, 2.0, 4242);
  CvPlan plan;
  plan.folds = 3;
  plan.lambda1_grid = {0.003, 0.01, 0.03};
  plan.lambda2_grid = {0.003, 0.03};
  plan.tuning_members = 3;
  plan.final_members = members;
  plan.master_seed = 99;
  const NetworkConfig config = NetworkConfig::uniform(8, 3, 10, TaskKind::regression());
  CorrelatedRun run;
  run.cv = cross_validate(plan, config, raw, desk_adam(), desk_prox());
  run.rates = selection_rates(run.cv.final_model);
  return run;
}

std::string chosen_text(const CvResult& cv) {
  const auto& c = cv.candidates[cv.chosen];
  return "chosen lambda1 " + num(c.lambda1) + ", lambda2 " + num(c.lambda2);
}

// Selection rates on the correlated design, rho = 0.
Outcome criterion4() {
  const CorrelatedRun run = correlated_run(0.0, 20);
  bool pass = true;
  for (std::size_t i = 0; i < 4; ++i) pass = pass && run.rates[i] >= 0.95;
  for (std::size_t i = 4; i < 8; ++i) pass = pass && run.rates[i] <= 0.05;
  return {pass, "B=20 rates " + join(run.rates) + " (need >= 0.95 for x1-x4, <= 0.05 for x5-x8); " +
                    chosen_text(run.cv)};
}

// Grouping of perfectly correlated copies, rho = 1.
Outcome criterion5() {
  const CorrelatedRun run = correlated_run(1.0, 50);
  bool pass = true;
  double worst_gap = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double gap = std::abs(run.rates[i] - run.rates[i + 4]);
    worst_gap = std::max(worst_gap, gap);
    pass = pass && gap <= 0.30;
  }
  for (double r : run.rates) pass = pass && r >= 0.2 && r <= 0.9;
  return {pass, "B=50 rates " + join(run.rates) + ", max pair gap " + num(worst_gap) +
                    " (need gap <= 0.30, rates in [0.2, 0.9]); " + chosen_text(run.cv)};
}

struct AdditiveSplit {
  Dataset train;
  Dataset test;
};

AdditiveSplit additive_data() {
  const Dataset all = simulate_additive(20, 100, 800, 2.0, 2023);
  std::vector<std::size_t> first(600), rest(200);
  std::iota(first.begin(), first.end(), std::size_t{0});
  std::iota(rest.begin(), rest.end(), std::size_t{600});
  return {all.subset(first), all.subset(rest)};
}

const NetworkConfig kAdditiveConfig = NetworkConfig::uniform(100, 3, 20, TaskKind::regression());

// Prediction quality and support size on the additive design.
Outcome criterion6() {
  const AdditiveSplit data = additive_data();
  CvPlan plan;
  plan.folds = 3;
  plan.lambda1_grid = CvPlan::log_grid(3e-3, 3e-1, 4);
  plan.lambda2_grid = CvPlan::log_grid(1e-3, 1e-1, 4);
  plan.tuning_members = 3;
  plan.final_members = 10;
  plan.master_seed = 7;
  const CvResult cv = cross_validate(plan, kAdditiveConfig, data.train, desk_adam(), desk_prox());
  const EnsembleModel& model = cv.final_model;

  const Matrix pred = predict_raw(model, data.test.x).values;
  const double sd = model.preprocessing.target_sd;
  double mse = 0.0;
  for (std::size_t i = 0; i < data.test.n(); ++i) {
    const double e = (pred(i, 0) - data.test.y[i]) / sd;
    mse += e * e;
  }
  mse /= static_cast<double>(data.test.n());
  std::vector<double> supports;
  for (const auto& m : model.members) supports.push_back(static_cast<double>(support_of(m, model.config).size()));
  const double support = mean_of(supports);
  const bool pass = mse <= 0.35 && support >= 10.0 && support <= 50.0;
  // Noise alone contributes 1 / (1 + snr) of the target variance.
  return {pass, "standardized test MSE " + num(mse) + " (need <= 0.35; noise floor " + num(1.0 / 3.0) +
                    "), mean support " + num(support) +
                    " (need [10, 50]); " + chosen_text(cv)};
}

// Structure along an increasing lambda2 sweep.
Outcome criterion7() {
  const AdditiveSplit data = additive_data();
  const std::vector<double> sweep = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  const double lambda1 = 0.01;
  std::vector<double> active, layer1;
  for (double lambda2 : sweep) {
    const EnsembleModel m =
        fit_easier_net(kAdditiveConfig, data.train, {lambda1, lambda2}, desk_adam(), desk_prox(), 4, 5);
    const Matrix x = apply_standardization(data.train.x, m.preprocessing);
    std::vector<double> a, c;
    for (const auto& member : m.members) {
      const StructureSummary s = structure_summary(member, m.config, x);
      a.push_back(static_cast<double>(s.active_layer_count));
      if (s.contributions && !s.contributions->degenerate) c.push_back(s.contributions->proportions[0]);
    }
    active.push_back(mean_of(a));
    layer1.push_back(c.empty() ? std::nan("") : mean_of(c));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < active.size(); ++i) monotone = monotone && active[i] <= active[i - 1];
  const bool top = std::abs(layer1.back() - 1.0) <= 1e-12;
  return {monotone && top, "lambda2 " + join(sweep) + ": mean active layers " + join(active) +
                               " (need non-increasing), layer-1 contribution " + join(layer1) +
                               " (need 1.0 at the largest)"};
}

// Determinism, round trip, ensemble mean and monotone prox traces.
Outcome criterion8() {
  bool pass = true;
  std::vector<std::string> notes;
  std::size_t traces = 0, bad_traces = 0;
  double worst_reload = 0.0, worst_mean = 0.0;

  auto check_model = [&](const EnsembleModel& m, const Matrix& raw_x, const std::string& tag) {
    for (const auto& r : m.reports) {
      ++traces;
      if (!trace_non_increasing(r)) ++bad_traces;
    }
    const auto path = (std::filesystem::temp_directory_path() / ("easiernet_accept_" + tag + ".json")).string();
    save_model(m, path);
    const EnsembleModel back = load_model(path);
    const Matrix a = predict_raw(m, raw_x).values, b = predict_raw(back, raw_x).values;
    for (std::size_t i = 0; i < a.size(); ++i) worst_reload = std::max(worst_reload, std::abs(a.data()[i] - b.data()[i]));
    const Matrix x = apply_standardization(raw_x, m.preprocessing);
    const Matrix ens = predict_ensemble(m, x).values;
    Matrix sum(ens.rows(), ens.cols());
    for (const auto& member : m.members) {
      const Matrix p = forward(member, m.config, x).values;
      for (std::size_t i = 0; i < p.size(); ++i) sum.data()[i] += p.data()[i] / m.size();
    }
    for (std::size_t i = 0; i < ens.size(); ++i) worst_mean = std::max(worst_mean, std::abs(ens.data()[i] - sum.data()[i]));
    std::filesystem::remove(path);
  };

  const Dataset reg = simulate_correlated(0.5, 200, 2.0, 8);
  const NetworkConfig rc = NetworkConfig::uniform(8, 2, 6, TaskKind::regression());
  const EnsembleModel r1 = fit_easier_net(rc, reg, {0.01, 0.01}, desk_adam(), desk_prox(), 5, 31);
  const EnsembleModel r2 = fit_easier_net(rc, reg, {0.01, 0.01}, desk_adam(), desk_prox(), 5, 31);
  const bool reproducible = serialize_model(r1) == serialize_model(r2);
  pass = pass && reproducible;
  check_model(r1, reg.x, "reg");

  Dataset cls = simulate_correlated(0.0, 200, 2.0, 9);
  cls.task = TaskKind::classification(3);
  cls.class_labels = {"low", "mid", "high"};
  std::vector<double> sorted = cls.y;
  std::sort(sorted.begin(), sorted.end());
  const double q1 = sorted[sorted.size() / 3], q2 = sorted[2 * sorted.size() / 3];
  for (double& v : cls.y) v = v < q1 ? 0.0 : (v < q2 ? 1.0 : 2.0);
  const NetworkConfig cc = NetworkConfig::uniform(8, 2, 6, cls.task);
  const EnsembleModel c1 = fit_easier_net(cc, cls, {0.005, 0.005}, desk_adam(), desk_prox(), 5, 32);
  check_model(c1, cls.x, "cls");

  pass = pass && bad_traces == 0 && worst_reload <= 1e-12 && worst_mean <= 1e-12;
  return {pass, std::string("same-seed model files ") + (reproducible ? "identical" : "DIFFER") +
                    "; reload max deviation " + num(worst_reload) + ", ensemble-vs-member-mean max deviation " +
                    num(worst_mean) + " (tolerance 1e-12); " + std::to_string(traces - bad_traces) + "/" +
                    std::to_string(traces) + " prox traces non-increasing"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.push_back(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.push_back(k);

  bool all = true;
  for (int k : selected) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d: %s - %s [%.1f s]\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
