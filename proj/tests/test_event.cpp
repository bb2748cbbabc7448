#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace trackcull;

TEST(NormalizeWire, MapsChamberOntoUnitInterval) {
  EXPECT_DOUBLE_EQ(normalize_wire(56.0), 0.5);
  EXPECT_DOUBLE_EQ(normalize_wire(112.0), 1.0);
  EXPECT_DOUBLE_EQ(normalize_wire(0.0), 0.0);
}

TEST(NormalizeWire, RejectsValuesOutsideChamberNamingThem) {
  try {
    normalize_wire(112.5);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("112.5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(normalize_wire(-0.1), ValidationError);
  EXPECT_THROW(normalize_wire(std::nan("")), ValidationError);
}

TEST(NormalizeWire, MonotoneWithImageInUnitInterval) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wire(0.0, 112.0);
  for (int i = 0; i < 2000; ++i) {
    double a = wire(rng);
    double b = wire(rng);
    if (a > b) std::swap(a, b);
    const double na = normalize_wire(a);
    const double nb = normalize_wire(b);
    EXPECT_LE(na, nb);
    EXPECT_GE(na, 0.0);
    EXPECT_LE(nb, 1.0);
  }
}

TEST(Geometry, Constants) {
  EXPECT_EQ(Geometry::n_superlayers, 6);
  EXPECT_EQ(Geometry::wires_per_layer, 112);
  EXPECT_EQ(Geometry::n_regions, 3);
  EXPECT_EQ(Geometry::layers_per_superlayer, 6);
}

TEST(Cluster, Validation) {
  EXPECT_NO_THROW(validate(Cluster{1, 0.0}));
  EXPECT_NO_THROW(validate(Cluster{6, 112.0}));
  EXPECT_THROW(validate(Cluster{0, 5.0}), ValidationError);
  EXPECT_THROW(validate(Cluster{7, 5.0}), ValidationError);
  EXPECT_THROW(validate(Cluster{3, 112.01}), ValidationError);
}

namespace {

SuperlayerClusters one_per_layer() {
  SuperlayerClusters clusters;
  for (int sl = 1; sl <= 6; ++sl) clusters[sl - 1].push_back({sl, 10.0 * sl});
  return clusters;
}

}  // namespace

TEST(Event, RejectsClusterFiledUnderWrongSuperlayer) {
  auto clusters = one_per_layer();
  clusters[2].push_back({4, 30.0});
  EXPECT_THROW(Event(1, clusters), ValidationError);
}

TEST(Event, RejectsTruthIndexOutOfRange) {
  TruthTrack t;
  t.cluster_indices = {0, 0, 0, 1, 0, 0};
  EXPECT_THROW(Event(1, one_per_layer(), {t}), ValidationError);
}

TEST(Event, RejectsBadMomentumOrCharge) {
  TruthTrack t;
  t.momentum = 0.0;
  EXPECT_THROW(Event(1, one_per_layer(), {t}), ValidationError);
  t.momentum = 2.0;
  t.charge = 0;
  EXPECT_THROW(Event(1, one_per_layer(), {t}), ValidationError);
}

TEST(Event, CountsAndCompleteness) {
  auto clusters = one_per_layer();
  clusters[0].push_back({1, 1.0});
  clusters[4].push_back({5, 2.0});
  clusters[4].push_back({5, 3.0});
  const Event e(9, clusters);
  EXPECT_EQ(e.total_clusters(), 9u);
  EXPECT_EQ(e.candidate_count(), 6u);
  EXPECT_TRUE(e.complete());
  clusters[3].clear();
  const Event incomplete(10, clusters);
  EXPECT_FALSE(incomplete.complete());
  EXPECT_EQ(incomplete.candidate_count(), 0u);
}

TEST(EventIo, RoundTripKeepsEveryField) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Event e = oracle::random_event(rng, oracle::random_counts(rng, 1, 4), i % 2 == 0, i);
    EXPECT_EQ(parse_event(serialize_event(e)), e);
  }
}

TEST(EventIo, FormatUsesDocumentedKeys) {
  TruthTrack t;
  t.momentum = 2.5;
  t.charge = -1;
  const std::string line = serialize_event(Event(4, one_per_layer(), {t}));
  EXPECT_NE(line.find("\"event_id\":4"), std::string::npos) << line;
  EXPECT_NE(line.find("\"sl\":1"), std::string::npos);
  EXPECT_NE(line.find("\"avg_wire\""), std::string::npos);
  EXPECT_NE(line.find("\"indices\":[0,0,0,0,0,0]"), std::string::npos);
  EXPECT_NE(line.find("\"charge\":-1"), std::string::npos);
}

TEST(EventIo, TruthIsOptionalAndIndicesFollowFileOrder) {
  const Event e = parse_event(
      R"({"event_id":3,"clusters":[{"sl":2,"avg_wire":5},{"sl":1,"avg_wire":1},{"sl":2,"avg_wire":7},)"
      R"({"sl":3,"avg_wire":1},{"sl":4,"avg_wire":1},{"sl":5,"avg_wire":1},{"sl":6,"avg_wire":1}],)"
      R"("truth":[{"indices":[0,1,0,0,0,0],"momentum":1.5,"charge":1}]})");
  ASSERT_EQ(e.clusters(2).size(), 2u);
  EXPECT_DOUBLE_EQ(e.clusters(2)[1].avg_wire, 7.0);
  EXPECT_EQ(e.truth().at(0).cluster_indices[1], 1u);
  const Event unlabeled = parse_event(R"({"event_id":8,"clusters":[{"sl":1,"avg_wire":3}]})");
  EXPECT_TRUE(unlabeled.truth().empty());
}

TEST(EventIo, ParseErrorsCarryLineNumbers) {
  std::istringstream in(serialize_event(Event(1, one_per_layer())) + "\n\n{\"event_id\": 2, \"clusters\": [\n");
  try {
    read_events(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_event(R"({"event_id":1,"clusters":[{"sl":9,"avg_wire":3}]})"), DataError);
  EXPECT_THROW(parse_event(R"({"clusters":[]})"), ParseError);
}

TEST(EventIo, FileRoundTrip) {
  const auto dir = oracle::scratch_dir("event_io");
  std::mt19937_64 rng(8);
  std::vector<Event> events;
  for (int i = 0; i < 20; ++i) events.push_back(oracle::random_event(rng, oracle::random_counts(rng, 1, 3), true, i));
  write_events(dir / "e.jsonl", events);
  EXPECT_EQ(read_events(dir / "e.jsonl"), events);
  EXPECT_THROW(read_events(dir / "missing.jsonl"), IoError);
}
