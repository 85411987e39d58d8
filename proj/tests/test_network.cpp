#include <gtest/gtest.h>

#include <cmath>

#include "easiernet/core/errors.hpp"
#include "easiernet/core/network.hpp"
#include "easiernet/core/optimizer.hpp"
#include "oracles.hpp"

using namespace easiernet;

namespace {

Matrix random_inputs(std::size_t n, std::size_t d, RngStream& rng) {
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.uniform(-2.0, 2.0);
  return x;
}

std::vector<double> random_targets(std::size_t n, const TaskKind& task, RngStream& rng) {
  std::vector<double> y(n);
  for (double& v : y) {
    v = task.is_classification() ? static_cast<double>(rng.uniform_index(task.num_classes)) : rng.normal();
  }
  return y;
}

NetworkConfig make_config(std::size_t d, std::vector<std::size_t> widths, TaskKind task, bool skip = true) {
  NetworkConfig c;
  c.input_dim = d;
  c.num_layers = widths.size() + 2;
  c.hidden_widths = std::move(widths);
  c.task = task;
  c.skip_connections_enabled = skip;
  return c;
}

}  // namespace

TEST(NetworkConfig, Validation) {
  EXPECT_NO_THROW(make_config(3, {}, TaskKind::regression()).validate());
  EXPECT_THROW(make_config(3, {0}, TaskKind::regression()).validate(), ContractViolation);
  EXPECT_THROW(make_config(3, {2}, TaskKind::classification(1)).validate(), ContractViolation);
  NetworkConfig bad = make_config(3, {2, 2}, TaskKind::regression());
  bad.num_layers = 3;
  EXPECT_THROW(bad.validate(), ContractViolation);
  EXPECT_EQ(make_config(3, {2}, TaskKind::classification(4)).output_dim(), 4u);
}

TEST(InitParams, BetaAlphaOnesBiasesZero) {
  const NetworkConfig c = make_config(3, {4, 2}, TaskKind::regression());
  RngStream rng(1);
  const NetworkParams p = init_params(c, rng);
  EXPECT_EQ(p.beta, std::vector<double>(3, 1.0));
  EXPECT_EQ(p.alpha, std::vector<double>(3, 1.0));
  for (const auto& b : p.biases) EXPECT_EQ(b, std::vector<double>(b.size(), 0.0));
  for (const auto& b : p.skip_biases) EXPECT_EQ(b, std::vector<double>(b.size(), 0.0));
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights[k].rows()));
    for (double v : p.weights[k].data()) EXPECT_LT(std::abs(v), bound);
  }
  for (const auto& w : p.skip_weights) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.rows()));
    for (double v : w.data()) EXPECT_LT(std::abs(v), bound);
  }
}

TEST(InitParams, TwoLayerNetworkHasOnlyInputSkip) {
  const NetworkConfig c = make_config(4, {}, TaskKind::regression());
  RngStream rng(1);
  const NetworkParams p = init_params(c, rng);
  EXPECT_TRUE(p.weights.empty());
  ASSERT_EQ(p.skip_weights.size(), 1u);
  EXPECT_EQ(p.skip_weights[0].rows(), 4u);
  EXPECT_EQ(p.skip_weights[0].cols(), 1u);
}

TEST(InitParams, DistinctSeedsDiffer) {
  const NetworkConfig c = make_config(3, {4}, TaskKind::regression());
  RngStream a(1), b(2);
  EXPECT_NE(init_params(c, a), init_params(c, b));
  RngStream a2(1), a3(1);
  EXPECT_EQ(init_params(c, a2), init_params(c, a3));
}

TEST(Forward, LinearSpecialCase) {
  const NetworkConfig c = make_config(3, {4, 4}, TaskKind::regression());
  NetworkParams p = NetworkParams::zeros(c);
  p.beta = {0.5, -2.0, 3.0};
  for (std::size_t i = 0; i < 3; ++i) p.skip_weights[0](i, 0) = 1.0;
  p.alpha = {1.0, 0.0, 0.0};
  const Matrix x = Matrix::from_rows({{1, 2, 3}, {-1, 0, 4}});
  const Prediction pred = forward(p, c, x);
  EXPECT_DOUBLE_EQ(pred.values(0, 0), 0.5 - 4.0 + 9.0);
  EXPECT_DOUBLE_EQ(pred.values(1, 0), -0.5 + 0.0 + 12.0);
}

TEST(Forward, ZeroBetaGivesConstantOutput) {
  for (TaskKind task : {TaskKind::regression(), TaskKind::classification(3)}) {
    const NetworkConfig c = make_config(4, {3, 3}, task);
    RngStream rng(5);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    std::fill(p.beta.begin(), p.beta.end(), 0.0);
    const Prediction pred = forward(p, c, random_inputs(6, 4, rng));
    for (std::size_t r = 1; r < 6; ++r)
      for (std::size_t k = 0; k < c.output_dim(); ++k) EXPECT_EQ(pred.values(r, k), pred.values(0, k));
  }
}

TEST(Forward, MatchesStraightLineEvaluator) {
  const NetworkConfig c = make_config(4, {3, 3}, TaskKind::regression());
  RngStream rng(99);
  NetworkParams p = init_params(c, rng);
  oracle::randomize(p, rng);
  const Matrix x = random_inputs(1, 4, rng);
  EXPECT_NEAR(forward(p, c, x).values(0, 0), oracle::evaluate(p, c, x)(0, 0), 1e-12);
}

TEST(Forward, MatchesStraightLineEvaluatorAcrossShapes) {
  RngStream rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(6);
    std::vector<std::size_t> widths(rng.uniform_index(4));
    for (auto& w : widths) w = 1 + rng.uniform_index(5);
    const TaskKind task = trial % 2 ? TaskKind::classification(2 + rng.uniform_index(3)) : TaskKind::regression();
    const NetworkConfig c = make_config(d, widths, task, trial % 3 != 0);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const Matrix x = random_inputs(5, d, rng);
    const Matrix got = forward(p, c, x).values;
    const Matrix want = oracle::evaluate(p, c, x);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12);
  }
}

TEST(Forward, AllZeroAlphaIsDegenerate) {
  const NetworkConfig c = make_config(2, {2}, TaskKind::regression());
  NetworkParams p = NetworkParams::zeros(c);
  p.beta = {1, 1};
  EXPECT_THROW(forward(p, c, Matrix(1, 2)), DegenerateModel);
  NetworkConfig no_skip = c;
  no_skip.skip_connections_enabled = false;
  EXPECT_NO_THROW(forward(p, no_skip, Matrix(1, 2)));
}

TEST(Forward, WrongInputWidthIsContractViolation) {
  const NetworkConfig c = make_config(3, {2}, TaskKind::regression());
  RngStream rng(1);
  EXPECT_THROW(forward(init_params(c, rng), c, Matrix(2, 4)), ContractViolation);
}

TEST(Forward, ClassificationRowsSumToOne) {
  RngStream rng(31);
  const NetworkConfig c = make_config(5, {4, 4}, TaskKind::classification(4));
  for (int trial = 0; trial < 20; ++trial) {
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    for (auto& w : p.skip_weights)
      for (double& v : w.data()) v *= 20.0;
    const Matrix out = forward(p, c, random_inputs(8, 5, rng)).values;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double s = 0.0;
      for (double v : out.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Forward, AlphaScaleInvariance) {
  RngStream rng(8);
  for (TaskKind task : {TaskKind::regression(), TaskKind::classification(3)}) {
    const NetworkConfig c = make_config(4, {3, 5, 2}, task);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const Matrix x = random_inputs(10, 4, rng);
    const Matrix base = forward(p, c, x).values;
    for (double scale : {1e-3, 0.37, 2.0, 1e4}) {
      NetworkParams q = p;
      for (double& a : q.alpha) a *= scale;
      const Matrix scaled = forward(q, c, x).values;
      for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(scaled.data()[i], base.data()[i], 1e-12);
    }
  }
}

TEST(Forward, HierarchyEmbedding) {
  RngStream rng(21);
  const NetworkConfig big = make_config(3, {4, 4, 4}, TaskKind::regression());  // L = 5
  for (std::size_t keep = 2; keep <= 4; ++keep) {                                // L' = keep
    NetworkParams p = init_params(big, rng);
    oracle::randomize(p, rng);
    // Zero everything attached to layers >= L'.
    for (std::size_t l = keep; l <= 4; ++l) {
      p.alpha[l - 1] = 0.0;
      for (double& v : p.skip_weights[l - 1].data()) v = 0.0;
      for (double& v : p.skip_biases[l - 1]) v = 0.0;
    }
    for (std::size_t l = keep - 1; l <= 3; ++l) {
      for (double& v : p.weights[l - 1].data()) v = 0.0;
      for (double& v : p.biases[l - 1]) v = 0.0;
    }
    const NetworkConfig small = make_config(3, std::vector<std::size_t>(keep - 2, 4), TaskKind::regression());
    NetworkParams q = NetworkParams::zeros(small);
    q.beta = p.beta;
    for (std::size_t l = 1; l + 2 <= keep; ++l) {
      q.weights[l - 1] = p.weights[l - 1];
      q.biases[l - 1] = p.biases[l - 1];
    }
    for (std::size_t l = 1; l < keep; ++l) {
      q.skip_weights[l - 1] = p.skip_weights[l - 1];
      q.skip_biases[l - 1] = p.skip_biases[l - 1];
      q.alpha[l - 1] = p.alpha[l - 1];
    }
    const Matrix x = random_inputs(7, 3, rng);
    const Matrix a = forward(p, big, x).values;
    const Matrix b = forward(q, small, x).values;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12) << "L' = " << keep;
  }
}

TEST(Loss, Examples) {
  const TaskKind reg = TaskKind::regression();
  Prediction perfect{Matrix::from_rows({{1}, {2}})};
  EXPECT_EQ(loss(perfect, std::vector<double>{1, 2}, std::vector<double>{1, 1}, reg), 0.0);

  Prediction off{Matrix::from_rows({{0}, {2}})};
  EXPECT_DOUBLE_EQ(loss(off, std::vector<double>{1, 1}, std::vector<double>{1, 1}, reg), 1.0);

  Prediction uniform{Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})};
  EXPECT_NEAR(loss(uniform, std::vector<double>{0, 1}, std::vector<double>{1, 1}, TaskKind::classification(2)),
              std::log(2.0), 1e-15);
}

TEST(Loss, ZeroProbabilityIsClamped) {
  Prediction p{Matrix::from_rows({{1.0, 0.0}})};
  const double value = loss(p, std::vector<double>{1}, std::vector<double>{1}, TaskKind::classification(2));
  EXPECT_NEAR(value, -std::log(1e-12), 1e-9);
}

TEST(Gradient, ZeroAtPerfectFit) {
  const NetworkConfig c = make_config(3, {4}, TaskKind::regression());
  RngStream rng(4);
  NetworkParams p = init_params(c, rng);
  oracle::randomize(p, rng);
  const Matrix x = random_inputs(6, 3, rng);
  const Prediction pred = forward(p, c, x);
  std::vector<double> y(6);
  for (std::size_t r = 0; r < 6; ++r) y[r] = pred.values(r, 0);
  const NetworkParams g = gradient(p, c, x, y, std::vector<double>(6, 1.0));
  for (const auto& t : tensors(g))
    for (double v : t.values) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, LinearInObservationWeights) {
  RngStream rng(6);
  for (TaskKind task : {TaskKind::regression(), TaskKind::classification(3)}) {
    const NetworkConfig c = make_config(4, {3, 3}, task);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const Matrix x = random_inputs(9, 4, rng);
    const auto y = random_targets(9, task, rng);
    std::vector<double> w(9), w2(9);
    for (std::size_t i = 0; i < 9; ++i) {
      w[i] = rng.uniform(0.1, 2.0);
      w2[i] = 2.0 * w[i];
    }
    const NetworkParams g1 = gradient(p, c, x, y, w);
    const NetworkParams g2 = gradient(p, c, x, y, w2);
    const auto v1 = tensors(g1);
    const auto v2 = tensors(g2);
    for (std::size_t t = 0; t < v1.size(); ++t)
      for (std::size_t i = 0; i < v1[t].values.size(); ++i) EXPECT_EQ(v2[t].values[i], 2.0 * v1[t].values[i]);
  }
}

TEST(Gradient, MatchesFiniteDifferencesOnReferenceNetwork) {
  RngStream rng(2023);
  for (TaskKind task : {TaskKind::regression(), TaskKind::classification(3)}) {
    const NetworkConfig c = make_config(5, {4, 4}, task);  // d = 5, L = 4
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const Matrix x = random_inputs(7, 5, rng);
    const auto y = random_targets(7, task, rng);
    const std::vector<double> w(7, 1.0);
    const LossGradient lg = loss_and_gradient(p, c, x, y, w);
    EXPECT_NEAR(lg.loss, oracle::reference_loss(p, c, x, y, w), 1e-12);
    const auto check = oracle::check_gradient(p, c, x, y, w, lg.gradient);
    EXPECT_LT(check.max_rel_error, 1e-5);
    EXPECT_GT(check.checked, parameter_count(p) / 2);
  }
}

TEST(Gradient, FiniteDifferencePropertyOverSeeds) {
  std::size_t skipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(derive_seed(77, seed));
    const std::size_t d = 2 + rng.uniform_index(5);
    std::vector<std::size_t> widths(1 + rng.uniform_index(3));
    for (auto& wd : widths) wd = 1 + rng.uniform_index(5);
    const TaskKind task = seed % 2 ? TaskKind::classification(2 + rng.uniform_index(2)) : TaskKind::regression();
    const NetworkConfig c = make_config(d, widths, task, seed % 5 != 4);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    const std::size_t n = 3 + rng.uniform_index(6);
    const Matrix x = random_inputs(n, d, rng);
    const auto y = random_targets(n, task, rng);
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform(0.2, 2.0);
    const auto check = oracle::check_gradient(p, c, x, y, w, gradient(p, c, x, y, w));
    EXPECT_LT(check.max_rel_error, 1e-5) << "seed " << seed;
    skipped += check.skipped;
  }
  RecordProperty("skipped_entries", static_cast<int>(skipped));
}

TEST(PenaltyGroups, Mapping) {
  const TaskKind reg = TaskKind::regression();
  const TaskKind cls = TaskKind::classification(2);
  using G = PenaltyGroup;
  using K = TensorKind;
  EXPECT_EQ(PenaltySpec::group_of(K::Beta, 1, reg), G::Lambda1);
  EXPECT_EQ(PenaltySpec::group_of(K::SkipWeight, 1, reg), G::Lambda1);
  EXPECT_EQ(PenaltySpec::group_of(K::SkipBias, 1, reg), G::Unpenalized);
  EXPECT_EQ(PenaltySpec::group_of(K::SkipBias, 1, cls), G::Lambda1);
  EXPECT_EQ(PenaltySpec::group_of(K::Weight, 1, reg), G::Lambda2);
  EXPECT_EQ(PenaltySpec::group_of(K::Weight, 3, reg), G::Lambda2);
  EXPECT_EQ(PenaltySpec::group_of(K::SkipWeight, 2, reg), G::Lambda2);
  EXPECT_EQ(PenaltySpec::group_of(K::Bias, 1, reg), G::Unpenalized);
  EXPECT_EQ(PenaltySpec::group_of(K::Bias, 1, cls), G::Lambda2);
  EXPECT_EQ(PenaltySpec::group_of(K::SkipBias, 3, cls), G::Lambda2);
  EXPECT_EQ(PenaltySpec::group_of(K::Alpha, 0, reg), G::Unpenalized);
  EXPECT_EQ(PenaltySpec::group_of(K::Alpha, 0, cls), G::Unpenalized);
}

TEST(PenalizedObjective, ZeroPenaltyEqualsLoss) {
  const NetworkConfig c = make_config(3, {3}, TaskKind::regression());
  RngStream rng(2);
  NetworkParams p = init_params(c, rng);
  oracle::randomize(p, rng);
  const Matrix x = random_inputs(5, 3, rng);
  const auto y = random_targets(5, c.task, rng);
  const std::vector<double> w(5, 1.0);
  EXPECT_EQ(penalized_objective(p, c, x, y, w, PenaltySpec{0, 0}), loss(forward(p, c, x), y, w, c.task));
}

TEST(PenalizedObjective, HandComputedBetaPenalty) {
  const NetworkConfig c = make_config(2, {2}, TaskKind::regression());
  NetworkParams p = NetworkParams::zeros(c);
  p.beta = {1.0, -1.0};
  p.alpha = {1.0, 1.0};
  const Matrix x = Matrix::from_rows({{0.3, 0.7}, {1.0, -2.0}});
  EXPECT_DOUBLE_EQ(penalized_objective(p, c, x, std::vector<double>{0, 0}, std::vector<double>{1, 1},
                                       PenaltySpec{0.5, 0.0}),
                   1.0);
}

TEST(PenalizedObjective, PenaltyValueByGroup) {
  RngStream rng(12);
  for (TaskKind task : {TaskKind::regression(), TaskKind::classification(2)}) {
    const NetworkConfig c = make_config(3, {2, 2}, task);
    NetworkParams p = init_params(c, rng);
    oracle::randomize(p, rng);
    auto l1 = [](std::span<const double> v) {
      double s = 0;
      for (double e : v) s += std::abs(e);
      return s;
    };
    double g1 = l1(p.beta) + l1(p.skip_weights[0].data());
    double g2 = 0.0;
    for (const auto& w : p.weights) g2 += l1(w.data());
    for (std::size_t l = 1; l < p.skip_weights.size(); ++l) g2 += l1(p.skip_weights[l].data());
    if (task.is_classification()) {
      g1 += l1(p.skip_biases[0]);
      for (const auto& b : p.biases) g2 += l1(b);
      for (std::size_t l = 1; l < p.skip_biases.size(); ++l) g2 += l1(p.skip_biases[l]);
    }
    EXPECT_NEAR(penalty_value(p, c, PenaltySpec{0.3, 0.7}), 0.3 * g1 + 0.7 * g2, 1e-12);
  }
}

TEST(PenalizedObjective, NegativeLambdaIsContractViolation) {
  const NetworkConfig c = make_config(2, {}, TaskKind::regression());
  const NetworkParams p = NetworkParams::zeros(c);
  EXPECT_THROW(penalty_value(p, c, PenaltySpec{-1.0, 0.0}), ContractViolation);
  EXPECT_THROW(penalty_value(p, c, PenaltySpec{0.0, -0.1}), ContractViolation);
}

TEST(PenalizedObjective, ProxStepAtStationaryPointDoesNotIncrease) {
  // Fit a tiny linear model by least squares so the loss gradient vanishes,
  // then one soft-threshold step can only lower the penalized objective.
  const NetworkConfig c = make_config(1, {}, TaskKind::regression());
  NetworkParams p = NetworkParams::zeros(c);
  const Matrix x = Matrix::from_rows({{-1}, {0}, {1}});
  const std::vector<double> y{-2, 0.5, 2.5};
  const std::vector<double> w(3, 1.0);
  p.beta = {1.0};
  p.skip_weights[0](0, 0) = (-1 * -2 + 1 * 2.5) / 2.0;
  p.skip_biases[0][0] = (-2 + 0.5 + 2.5) / 3.0;
  p.alpha = {1.0};
  const NetworkParams g = gradient(p, c, x, y, w);
  for (const auto& t : tensors(g))
    if (t.kind != TensorKind::Alpha)
      for (double v : t.values) ASSERT_NEAR(v, 0.0, 1e-12);
  const PenaltySpec pen{0.4, 0.0};
  const double before = penalized_objective(p, c, x, y, w, pen);
  NetworkParams q = p;
  q.beta[0] = soft_threshold(q.beta[0], 0.4 * 0.1);
  q.skip_weights[0](0, 0) = soft_threshold(q.skip_weights[0](0, 0), 0.4 * 0.1);
  EXPECT_LE(penalized_objective(q, c, x, y, w, pen), before);
}
