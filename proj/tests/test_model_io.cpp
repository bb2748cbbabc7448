#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"

using namespace trackcull;

namespace {

Dataset toy(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto f = oracle::random_features(rng);
    LabeledRow row;
    row.event_id = static_cast<EventId>(i);
    for (std::size_t k = 0; k < 6; ++k) row.features[k] = static_cast<float>(f[k]);
    row.label = f[1] + f[4] > 1.0 ? 1 : 0;
    d.rows.push_back(row);
  }
  return d;
}

MlpModel trained_mlp() {
  MlpHyperparams hp;
  hp.hidden_layers = {8, 8};
  hp.max_epochs = 3;
  return mlp_train(toy(100, 1), hp);
}

ErtModel trained_ert() {
  ErtHyperparams hp;
  hp.n_estimators = 12;
  hp.max_depth = 9;
  return ert_train(toy(200, 2), hp, 1);
}

template <typename Model>
void expect_same_predictions(const Model& a, const Classifier& b) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto x = oracle::random_features(rng);
    const auto pa = a.predict(x);
    const auto pb = b.predict(x);
    ASSERT_EQ(pa.p_valid, pb.p_valid);
    ASSERT_EQ(pa.p_invalid, pb.p_invalid);
  }
}

}  // namespace

TEST(ModelIo, MlpRoundTripIsExact) {
  const MlpModel m = trained_mlp();
  const MlpModel back = mlp_from_json(model_to_json(m));
  EXPECT_EQ(m, back);
  expect_same_predictions(m, back);

  const auto path = oracle::scratch_dir("mlp_io") / "m.json";
  save_model(m, path);
  EXPECT_EQ(load_mlp(path), m);
  const auto any = load_model(path);
  EXPECT_EQ(any->kind(), "mlp");
  expect_same_predictions(m, *any);
}

TEST(ModelIo, ErtRoundTripIsExact) {
  const ErtModel m = trained_ert();
  const ErtModel back = ert_from_json(model_to_json(m));
  EXPECT_EQ(m, back);
  expect_same_predictions(m, back);

  const auto path = oracle::scratch_dir("ert_io") / "e.json";
  save_model(m, path);
  EXPECT_EQ(load_ert(path), m);
  EXPECT_EQ(oracle::slurp(path), model_to_json(m));
  const auto any = load_model(path);
  EXPECT_EQ(any->kind(), "ert");
  expect_same_predictions(m, *any);
}

TEST(ModelIo, UnlimitedDepthSurvivesRoundTrip) {
  ErtHyperparams hp;
  hp.n_estimators = 3;
  const ErtModel m = ert_train(toy(50, 4), hp, 1);
  EXPECT_EQ(ert_from_json(model_to_json(m)).hyperparams().max_depth, std::nullopt);
}

TEST(ModelIo, KindMismatch) {
  EXPECT_THROW(ert_from_json(model_to_json(trained_mlp())), ModelKindError);
  EXPECT_THROW(mlp_from_json(model_to_json(trained_ert())), ModelKindError);
  const auto path = oracle::scratch_dir("kind_io") / "m.json";
  save_model(trained_mlp(), path);
  EXPECT_THROW(load_ert(path), ModelKindError);
}

TEST(ModelIo, TruncatedFileIsParseError) {
  const std::string text = model_to_json(trained_ert());
  EXPECT_THROW(ert_from_json(text.substr(0, text.size() / 2)), ModelParseError);
  const std::string mlp_text = model_to_json(trained_mlp());
  EXPECT_THROW(mlp_from_json(mlp_text.substr(0, mlp_text.size() / 2)), ModelParseError);

  const auto path = oracle::scratch_dir("trunc_io") / "e.json";
  std::ofstream(path) << text.substr(0, text.size() - 10);
  EXPECT_THROW(load_ert(path), ModelParseError);
  EXPECT_THROW(load_model(path), ModelParseError);
}

TEST(ModelIo, UnknownFormatIsVersionError) {
  for (std::string text : {model_to_json(trained_mlp()), model_to_json(trained_ert())}) {
    const auto pos = text.find(kModelFormat);
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, kModelFormat.size(), "trackcull-model-v9");
    EXPECT_THROW(
        {
          if (text.find("\"mlp\"") != std::string::npos) {
            mlp_from_json(text);
          } else {
            ert_from_json(text);
          }
        },
        ModelVersionError);
  }
}

TEST(ModelIo, CorruptShapesAreRejected) {
  std::string text = model_to_json(trained_mlp());
  const auto pos = text.find("\"inputs\":6");
  ASSERT_NE(pos, std::string::npos) << text.substr(0, 400);
  text.replace(pos, 10, "\"inputs\":5");
  EXPECT_THROW(mlp_from_json(text), ModelError);
}

TEST(ModelIo, MissingFileIsIoError) {
  EXPECT_THROW(load_model(oracle::scratch_dir("missing_io") / "nope.json"), IoError);
  EXPECT_THROW(load_mlp(oracle::scratch_dir("missing_io") / "nope.json"), IoError);
}

TEST(ModelIo, NotJsonIsParseError) {
  EXPECT_THROW(mlp_from_json("not json"), ModelParseError);
  EXPECT_THROW(ert_from_json("[1,2,3]"), ModelParseError);
  EXPECT_THROW(mlp_from_json("{\"kind\":\"mlp\"}"), ModelParseError);
}
