#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"

using namespace trackcull;

namespace {

TrackCandidate candidate(Features f, ClusterIndices idx, std::optional<bool> is_true = false) {
  return TrackCandidate{f, idx, is_true};
}

std::vector<TrackCandidate> toy_candidates() {
  const Features t{.5, .5, .5, .5, .5, .5};
  Features a = t;
  a[3] = 0.51;
  const Features b{.8, .8, .8, .8, .8, .8};
  return {candidate(t, {0, 0, 0, 0, 0, 0}, true), candidate(a, {0, 0, 0, 1, 0, 0}),
          candidate(b, {1, 1, 1, 1, 1, 1})};
}

std::vector<Event> simulated(std::int64_t n, double noise_mean, std::uint64_t seed = 1) {
  SimConfig c;
  c.n_events = n;
  c.noise_mean = noise_mean;
  c.seed = seed;
  return generate_events(c, 0);
}

}  // namespace

TEST(SelectNegative, ClosestAndLeastLikelyOnToyEvent) {
  const auto cands = toy_candidates();
  Rng rng(1);
  EXPECT_EQ(select_negative(cands, cands[0].features, NegativeStrategy::ClosestNeighbor, rng), 1u);
  EXPECT_EQ(select_negative(cands, cands[0].features, NegativeStrategy::LeastLikely, rng), 2u);
  for (int i = 0; i < 20; ++i) {
    EXPECT_NE(select_negative(cands, cands[0].features, NegativeStrategy::Random, rng), 0u);
  }
}

TEST(SelectNegative, TiesGoToLowestSourceIndex) {
  const Features t{.5, .5, .5, .5, .5, .5};
  Features up = t;
  up[0] = 0.6;
  Features down = t;
  down[1] = 0.4;
  // Listed out of lexicographic order on purpose.
  const std::vector<TrackCandidate> cands{candidate(t, {0, 0, 0, 0, 0, 0}, true), candidate(up, {2, 0, 0, 0, 0, 0}),
                                          candidate(down, {1, 3, 0, 0, 0, 0})};
  Rng rng(1);
  EXPECT_EQ(select_negative(cands, t, NegativeStrategy::ClosestNeighbor, rng), 2u);
  EXPECT_EQ(select_negative(cands, t, NegativeStrategy::LeastLikely, rng), 2u);
}

TEST(SelectNegative, RandomIsSeedDeterministic) {
  std::mt19937_64 gen(3);
  const Event e = oracle::random_event(gen, {3, 3, 2, 2, 2, 2}, true);
  const auto cands = generate_candidates(e);
  Features truth{};
  for (const auto& c : cands) {
    if (*c.is_true) truth = c.features;
  }
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 50; ++i) {
    first.push_back(select_negative(cands, truth, NegativeStrategy::Random, a));
    second.push_back(select_negative(cands, truth, NegativeStrategy::Random, b));
  }
  EXPECT_EQ(first, second);
  EXPECT_GT(std::set<std::size_t>(first.begin(), first.end()).size(), 1u);
}

TEST(SelectNegative, SingleCandidateHasNoNegative) {
  const auto cands = toy_candidates();
  Rng rng(1);
  EXPECT_THROW(select_negative(std::span(cands).first(1), cands[0].features, NegativeStrategy::ClosestNeighbor, rng),
               NoNegativeError);
}

TEST(SelectNegative, MatchesBruteForceOracle) {
  std::mt19937_64 gen(17);
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const Event e = oracle::random_event(gen, oracle::random_counts(gen, 1, 3), true, trial);
    const auto cands = generate_candidates(e);
    if (cands.size() < 2) continue;
    const auto& truth = e.truth()[0].cluster_indices;
    Features tf{};
    for (const auto& c : cands) {
      if (c.source_indices == truth) tf = c.features;
    }
    const auto cn = select_negative(cands, tf, NegativeStrategy::ClosestNeighbor, rng);
    const auto ll = select_negative(cands, tf, NegativeStrategy::LeastLikely, rng);
    EXPECT_EQ(cn, oracle::extreme_negative(cands, truth, true));
    EXPECT_EQ(ll, oracle::extreme_negative(cands, truth, false));
    EXPECT_GE(oracle::l1(cands[ll].features, tf), oracle::l1(cands[cn].features, tf));
  }
}

TEST(ExtractDataset, TrainingModeIsBalanced) {
  auto events = simulated(100, 2.0);
  const auto result = extract_dataset(events, NegativeStrategy::ClosestNeighbor, ExtractionMode::Training, 1, 0);
  EXPECT_EQ(result.dataset.rows.size(), 200u);
  EXPECT_EQ(result.dataset.count_label(1), 100u);
  EXPECT_EQ(result.dataset.count_label(0), 100u);
  EXPECT_EQ(result.report.samples, 100u);
  for (const auto& [begin, end] : result.dataset.groups()) EXPECT_EQ(end - begin, 2u);
}

TEST(ExtractDataset, EvaluationModeKeepsEveryCandidate) {
  std::mt19937_64 gen(5);
  const Event e = oracle::random_event(gen, {2, 1, 3, 1, 2, 1}, true, 7);
  const std::vector<Event> events{e};
  const auto result = extract_dataset(events, NegativeStrategy::ClosestNeighbor, ExtractionMode::Evaluation, 1, 1);
  EXPECT_EQ(result.dataset.rows.size(), 12u);
  EXPECT_EQ(result.dataset.count_label(1), 1u);
}

TEST(ExtractDataset, EvaluationRowsEqualOnePlusNegativesPerEvent) {
  const auto events = simulated(200, 0.8);
  const auto result = extract_dataset(events, NegativeStrategy::Random, ExtractionMode::Evaluation, 1, 0);
  std::size_t expected = 0;
  for (const auto& e : events) expected += e.candidate_count();
  EXPECT_EQ(result.dataset.rows.size(), expected);
  EXPECT_EQ(result.dataset.groups().size(), 200u);
  EXPECT_GE(result.dataset.rows.size(), 2 * 200u);
}

TEST(ExtractDataset, SkippedEventsAreCounted) {
  SimConfig c;
  c.n_events = 20;
  c.noise_mean = 0.0;
  auto events = generate_events(c, 1);
  SuperlayerClusters clusters;
  clusters[0].push_back({1, 3.0});
  events.emplace_back(100, clusters);  // unlabeled and incomplete
  const auto result = extract_dataset(events, NegativeStrategy::ClosestNeighbor, ExtractionMode::Training, 1, 1);
  EXPECT_TRUE(result.dataset.empty());
  EXPECT_EQ(result.report.skipped_no_negative, 20u);
  EXPECT_EQ(result.report.skipped_no_truth, 1u);
}

TEST(ExtractDataset, IndependentOfThreadCountAndSortedByEvent) {
  const auto events = simulated(150, 1.0);
  const auto one = extract_dataset(events, NegativeStrategy::Random, ExtractionMode::Training, 9, 1);
  const auto many = extract_dataset(events, NegativeStrategy::Random, ExtractionMode::Training, 9, 4);
  EXPECT_EQ(one.dataset, many.dataset);
  for (std::size_t i = 1; i < one.dataset.rows.size(); ++i) {
    EXPECT_LE(one.dataset.rows[i - 1].event_id, one.dataset.rows[i].event_id);
  }
}

TEST(SplitDataset, HalfOfTenEvents) {
  const auto events = simulated(10, 1.5);
  const auto data = extract_dataset(events, NegativeStrategy::ClosestNeighbor, ExtractionMode::Training, 1, 1).dataset;
  ASSERT_EQ(data.groups().size(), 10u);
  const auto [train, test] = split_dataset(data, 0.5, 3);
  EXPECT_EQ(train.groups().size(), 5u);
  EXPECT_EQ(test.groups().size(), 5u);
}

TEST(SplitDataset, DeterministicAndGroupPreserving) {
  const auto events = simulated(300, 1.0);
  const auto data = extract_dataset(events, NegativeStrategy::ClosestNeighbor, ExtractionMode::Evaluation, 1, 0).dataset;
  const auto a = split_dataset(data, 0.3, 8);
  const auto b = split_dataset(data, 0.3, 8);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  std::set<EventId> train_ids;
  for (const auto& r : a.first.rows) train_ids.insert(r.event_id);
  for (const auto& r : a.second.rows) EXPECT_FALSE(train_ids.contains(r.event_id));
  EXPECT_EQ(a.first.rows.size() + a.second.rows.size(), data.rows.size());
  const double target = 0.3 * 300.0;
  EXPECT_LE(std::abs(static_cast<double>(a.second.groups().size()) - target), 1.0);
}

TEST(SplitDataset, Errors) {
  EXPECT_THROW(split_dataset(Dataset{}, 0.5, 1), ValidationError);
  Dataset d;
  d.rows.push_back({1, {}, 1});
  EXPECT_THROW(split_dataset(d, 0.0, 1), ValidationError);
  EXPECT_THROW(split_dataset(d, 1.0, 1), ValidationError);
}

TEST(DatasetCsv, RoundTripIsExact) {
  const auto events = simulated(80, 1.0);
  const auto data = extract_dataset(events, NegativeStrategy::LeastLikely, ExtractionMode::Evaluation, 1, 0).dataset;
  std::stringstream buf;
  write_dataset(data, buf);
  EXPECT_EQ(read_dataset(buf), data);
}

TEST(DatasetCsv, EmptyDatasetIsHeaderOnly) {
  std::stringstream buf;
  write_dataset(Dataset{}, buf);
  EXPECT_EQ(buf.str(), "event_id,f1,f2,f3,f4,f5,f6,label\n");
  EXPECT_TRUE(read_dataset(buf).empty());
}

TEST(DatasetCsv, LabelsAreZeroOrOneWithNineDigitFloats) {
  const auto events = simulated(10, 1.0);
  const auto data = extract_dataset(events, NegativeStrategy::Random, ExtractionMode::Training, 1, 1).dataset;
  std::stringstream buf;
  write_dataset(data, buf);
  std::string line;
  std::getline(buf, line);
  while (std::getline(buf, line)) {
    const char label = line.back();
    EXPECT_TRUE(label == '0' || label == '1') << line;
  }
}

TEST(DatasetCsv, MalformedRowsReportLineNumbers) {
  std::stringstream buf("event_id,f1,f2,f3,f4,f5,f6,label\n1,0.1,0.2,0.3,0.4,0.5,0.6,1\n1,0.1,0.2,x,0.4,0.5,0.6,0\n");
  try {
    read_dataset(buf);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream bad_label("event_id,f1,f2,f3,f4,f5,f6,label\n1,0.1,0.2,0.3,0.4,0.5,0.6,2\n");
  EXPECT_THROW(read_dataset(bad_label), ParseError);
  std::stringstream bad_header("id,a\n");
  EXPECT_THROW(read_dataset(bad_header), ParseError);
}

TEST(StrategyNames, ParseAndPrint) {
  EXPECT_EQ(parse_strategy("closest"), NegativeStrategy::ClosestNeighbor);
  EXPECT_EQ(parse_strategy("random"), NegativeStrategy::Random);
  EXPECT_EQ(parse_strategy("least-likely"), NegativeStrategy::LeastLikely);
  EXPECT_FALSE(parse_strategy("nearest").has_value());
  EXPECT_EQ(parse_mode("evaluation"), ExtractionMode::Evaluation);
  EXPECT_EQ(to_string(NegativeStrategy::LeastLikely), "least-likely");
}
