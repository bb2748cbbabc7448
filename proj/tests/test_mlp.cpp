#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace trackcull;

namespace {

struct Batch {
  std::vector<Features> x;
  std::vector<int> y;
};

Batch random_batch(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.x.push_back(oracle::random_features(rng));
    b.y.push_back(static_cast<int>(rng() & 1U));
  }
  return b;
}

Dataset toy_dataset(std::size_t rows, std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  Dataset d;
  while (d.rows.size() < rows) {
    const auto f = oracle::random_features(rng);
    if (std::abs(f[0] - 0.5) < margin) continue;
    LabeledRow row;
    row.event_id = static_cast<EventId>(d.rows.size());
    for (std::size_t k = 0; k < 6; ++k) row.features[k] = static_cast<float>(f[k]);
    row.label = f[0] > 0.5 ? 1 : 0;
    d.rows.push_back(row);
  }
  return d;
}

}  // namespace

TEST(MlpForward, ZeroModelIsUndecided) {
  auto layers = MlpModel::initialized({64, 64, 64}, 1).layers();
  for (auto& l : layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  const MlpModel zero(layers);
  const auto p = zero.predict({0.1, 0.9, 0.3, 0.2, 0.5, 0.7});
  EXPECT_DOUBLE_EQ(p.p_invalid, 0.5);
  EXPECT_DOUBLE_EQ(p.p_valid, 0.5);
}

TEST(MlpForward, HandComputedSoftmax) {
  DenseLayer hidden{6, 1, {2, 0, 0, 0, 0, 0}, {0}, Activation::Relu};
  DenseLayer out{1, 2, {1, -1}, {0, 0}, Activation::Softmax};
  const MlpModel model({hidden, out});
  const std::array<double, 6> x{1, 0, 0, 0, 0, 0};
  const auto p = mlp_forward(model, x);
  const double expected = std::exp(-2.0) / (std::exp(2.0) + std::exp(-2.0));
  EXPECT_NEAR(p.p_valid, expected, 1e-15);
  EXPECT_NEAR(p.p_valid, 0.0180, 5e-5);
}

TEST(MlpForward, ProbabilitiesSumToOne) {
  std::mt19937_64 rng(2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const MlpModel m = oracle::random_mlp({16, 8}, s);
    for (int i = 0; i < 50; ++i) {
      const auto p = m.predict(oracle::random_features(rng));
      EXPECT_NEAR(p.p_invalid + p.p_valid, 1.0, 1e-9);
      EXPECT_GE(p.p_valid, 0.0);
    }
  }
}

TEST(MlpForward, ShapeMismatchIsCorruption) {
  const MlpModel m = MlpModel::initialized({4}, 1);
  const std::array<double, 5> short_input{};
  EXPECT_THROW(mlp_forward(m, short_input), ModelCorruptError);
  DenseLayer a{6, 3, std::vector<double>(18), std::vector<double>(3), Activation::Relu};
  DenseLayer b{4, 2, std::vector<double>(8), std::vector<double>(2), Activation::Softmax};
  EXPECT_THROW(MlpModel({a, b}), ModelCorruptError);
  DenseLayer last_relu{3, 2, std::vector<double>(6), std::vector<double>(2), Activation::Relu};
  EXPECT_THROW(MlpModel({a, last_relu}), ModelCorruptError);
}

TEST(MlpModelTest, DefaultArchitecture) {
  const MlpModel m = MlpModel::initialized(MlpHyperparams{}.hidden_layers, 1);
  ASSERT_EQ(m.layers().size(), 4u);
  EXPECT_EQ(m.layers()[0].inputs, 6u);
  EXPECT_EQ(m.layers()[0].outputs, 64u);
  EXPECT_EQ(m.layers()[3].outputs, 2u);
  EXPECT_EQ(m.parameter_count(), 6u * 64 + 64 + 2 * (64 * 64 + 64) + 64 * 2 + 2);
  // Glorot-uniform bound per layer, zero biases.
  for (const auto& l : m.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
    for (double w : l.weights) EXPECT_LE(std::abs(w), bound);
    for (double b : l.bias) EXPECT_EQ(b, 0.0);
  }
}

TEST(MlpGradient, MatchesCentralFiniteDifferences) {
  const std::vector<std::vector<std::size_t>> shapes{{3}, {5, 4}, {8, 8, 8}, {64, 64, 64}, {2}, {7, 3},
                                                     {16},  {4, 4, 4}, {10, 6}, {12, 12, 12}};
  const double h = 1e-5;
  for (std::size_t trial = 0; trial < shapes.size(); ++trial) {
    const MlpModel model = oracle::random_mlp(shapes[trial], 100 + trial);
    const Batch batch = random_batch(8 + trial, 200 + trial);
    EXPECT_NEAR(mlp_gradient(model, batch.x, batch.y).loss, oracle::mlp_loss(model.layers(), batch.x, batch.y), 1e-12);
    EXPECT_NEAR(mlp_loss(model, batch.x, batch.y), oracle::mlp_loss(model.layers(), batch.x, batch.y), 1e-12);
    EXPECT_LT(oracle::max_gradient_error(model, batch.x, batch.y, h), 1e-4) << "trial " << trial;
  }
}

TEST(MlpGradient, ZeroModelOutputBiasGradientIsAntisymmetric) {
  auto layers = MlpModel::initialized({8, 8}, 3).layers();
  for (auto& l : layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  const MlpModel zero(layers);
  const Batch batch = [] {
    Batch b = random_batch(10, 4);
    for (std::size_t i = 0; i < b.y.size(); ++i) b.y[i] = static_cast<int>(i % 2);
    return b;
  }();
  const auto g = mlp_gradient(zero, batch.x, batch.y);
  const auto& out_bias = g.bias.back();
  // Mean of (p - y) with p = 0.5 and balanced labels is 0 for both logits.
  EXPECT_NEAR(out_bias[0], -out_bias[1], 1e-15);
  EXPECT_NEAR(out_bias[0], 0.0, 1e-15);
  const Batch all_valid = [] {
    Batch b = random_batch(6, 5);
    std::fill(b.y.begin(), b.y.end(), 1);
    return b;
  }();
  const auto g1 = mlp_gradient(zero, all_valid.x, all_valid.y);
  EXPECT_NEAR(g1.bias.back()[0], 0.5, 1e-15);
  EXPECT_NEAR(g1.bias.back()[1], -0.5, 1e-15);
}

TEST(MlpGradient, DuplicatingRowsKeepsMeanGradient) {
  const MlpModel model = oracle::random_mlp({6, 5}, 9);
  const Batch batch = random_batch(7, 10);
  Batch doubled = batch;
  doubled.x.insert(doubled.x.end(), batch.x.begin(), batch.x.end());
  doubled.y.insert(doubled.y.end(), batch.y.begin(), batch.y.end());
  const auto a = mlp_gradient(model, batch.x, batch.y);
  const auto b = mlp_gradient(model, doubled.x, doubled.y);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t p = 0; p < a.weights[l].size(); ++p) EXPECT_NEAR(a.weights[l][p], b.weights[l][p], 1e-14);
    for (std::size_t p = 0; p < a.bias[l].size(); ++p) EXPECT_NEAR(a.bias[l][p], b.bias[l][p], 1e-14);
  }
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
}

TEST(MlpTrain, SeparableToyReachesFullAccuracy) {
  // Rows keep a 0.05 gap around the boundary.
  const Dataset data = toy_dataset(200, 1, 0.05);
  MlpHyperparams hp;
  hp.max_epochs = 50;
  const MlpModel m = mlp_train(data, hp);
  EXPECT_LE(m.training_info().epochs_run, 50u);
  EXPECT_DOUBLE_EQ(m.training_info().training_accuracy, 1.0);
}

TEST(MlpTrain, LossHistoryFiniteAndDecreasing) {
  const Dataset data = toy_dataset(300, 2, 0.0);
  MlpHyperparams hp;
  hp.max_epochs = 20;
  const MlpModel m = mlp_train(data, hp);
  const auto& history = m.training_info().loss_history;
  ASSERT_EQ(history.size(), m.training_info().epochs_run);
  for (double v : history) EXPECT_TRUE(std::isfinite(v));
  EXPECT_LE(history.back(), history.front());
}

TEST(MlpTrain, DeterministicForSeedAndData) {
  const Dataset data = toy_dataset(150, 3, 0.0);
  MlpHyperparams hp;
  hp.max_epochs = 5;
  hp.hidden_layers = {16, 16};
  EXPECT_EQ(mlp_train(data, hp), mlp_train(data, hp));
  MlpHyperparams other = hp;
  other.seed = 2;
  EXPECT_NE(mlp_train(data, hp), mlp_train(data, other));
}

TEST(MlpTrain, PlateauShrinksLearningRateUntilStop) {
  // Identical inputs with alternating labels: the loss cannot go below ln 2.
  Dataset data;
  for (int i = 0; i < 64; ++i) data.rows.push_back({i, {0.3f, 0.3f, 0.3f, 0.3f, 0.3f, 0.3f}, i % 2});
  MlpHyperparams hp;
  hp.hidden_layers = {4};
  hp.max_epochs = 200;
  std::vector<EpochStats> epochs;
  const MlpModel m = mlp_train(data, hp, [&](const EpochStats& s) { epochs.push_back(s); });
  EXPECT_LT(m.training_info().epochs_run, 200u);
  EXPECT_LT(m.training_info().final_lr, hp.min_lr);
  ASSERT_EQ(epochs.size(), m.training_info().epochs_run);
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    const double ratio = epochs[i].lr / epochs[i - 1].lr;
    EXPECT_TRUE(ratio == 1.0 || std::abs(ratio - hp.lr_factor) < 1e-12) << ratio;
  }
}

TEST(MlpTrain, NonFiniteLossAbortsWithDiagnostics) {
  const Dataset data = toy_dataset(64, 4, 0.0);
  MlpHyperparams hp;
  hp.initial_lr = 1e300;
  try {
    mlp_train(data, hp);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("epoch"), std::string::npos) << what;
    EXPECT_NE(what.find("batch"), std::string::npos) << what;
    EXPECT_NE(what.find("lr"), std::string::npos) << what;
  }
}

TEST(MlpHyperparams, Validation) {
  MlpHyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  EXPECT_EQ(hp.hidden_layers, (std::vector<std::size_t>{64, 64, 64}));
  EXPECT_EQ(hp.batch_size, 32u);
  hp.hidden_layers = {64, 0};
  EXPECT_THROW(hp.validate(), ValidationError);
  hp = MlpHyperparams{};
  hp.lr_factor = 1.0;
  EXPECT_THROW(hp.validate(), ValidationError);
  hp = MlpHyperparams{};
  hp.batch_size = 0;
  EXPECT_THROW(hp.validate(), ValidationError);
}

TEST(MlpTrain, EmptyDatasetRejected) {
  EXPECT_THROW(mlp_train(Dataset{}, MlpHyperparams{}), ValidationError);
}
