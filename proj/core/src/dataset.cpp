#include "trackcull/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "trackcull/error.hpp"
#include "trackcull/parallel.hpp"

namespace trackcull {

std::string_view to_string(NegativeStrategy strategy) noexcept {
  switch (strategy) {
    case NegativeStrategy::LeastLikely:
      return "least-likely";
    case NegativeStrategy::Random:
      return "random";
    case NegativeStrategy::ClosestNeighbor:
      return "closest";
  }
  return "unknown";
}

std::string_view to_string(ExtractionMode mode) noexcept {
  return mode == ExtractionMode::Training ? "training" : "evaluation";
}

std::optional<NegativeStrategy> parse_strategy(std::string_view name) noexcept {
  if (name == "closest") return NegativeStrategy::ClosestNeighbor;
  if (name == "random") return NegativeStrategy::Random;
  if (name == "least-likely") return NegativeStrategy::LeastLikely;
  return std::nullopt;
}

std::optional<ExtractionMode> parse_mode(std::string_view name) noexcept {
  if (name == "training") return ExtractionMode::Training;
  if (name == "evaluation") return ExtractionMode::Evaluation;
  return std::nullopt;
}

Features LabeledRow::as_features() const noexcept {
  Features f{};
  for (std::size_t k = 0; k < kSuperlayers; ++k) f[k] = static_cast<double>(features[k]);
  return f;
}

std::vector<std::pair<std::size_t, std::size_t>> Dataset::groups() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    if (i == rows.size() || rows[i].event_id != rows[begin].event_id) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  return out;
}

std::size_t Dataset::count_label(int label) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [label](const LabeledRow& r) { return r.label == label; }));
}

std::size_t select_negative(std::span<const TrackCandidate> candidates, const Features& true_features,
                            NegativeStrategy strategy, Rng& rng) {
  std::vector<std::size_t> eligible;
  eligible.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].is_true.value_or(false) || candidates[i].features == true_features) continue;
    eligible.push_back(i);
  }
  if (eligible.empty()) throw NoNegativeError("no negative candidate available");

  if (strategy == NegativeStrategy::Random) {
    std::sort(eligible.begin(), eligible.end(), [&](std::size_t a, std::size_t b) {
      return lexicographically_before(candidates[a].source_indices, candidates[b].source_indices);
    });
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    return eligible[pick(rng)];
  }

  const bool want_max = strategy == NegativeStrategy::LeastLikely;
  std::size_t best = eligible.front();
  double best_distance = candidate_distance(candidates[best].features, true_features);
  for (std::size_t n = 1; n < eligible.size(); ++n) {
    const std::size_t i = eligible[n];
    const double d = candidate_distance(candidates[i].features, true_features);
    const bool better = want_max ? d > best_distance : d < best_distance;
    const bool tie_won = d == best_distance &&
                         lexicographically_before(candidates[i].source_indices, candidates[best].source_indices);
    if (better || tie_won) {
      best = i;
      best_distance = d;
    }
  }
  return best;
}

namespace {

enum class EventStatus { Ok, NoTruth, Incomplete, NoNegative, MultiTrack };

struct EventRows {
  EventStatus status = EventStatus::Ok;
  std::vector<LabeledRow> rows;
};

LabeledRow make_row(EventId id, const Features& f, int label) {
  LabeledRow row;
  row.event_id = id;
  for (std::size_t k = 0; k < kSuperlayers; ++k) row.features[k] = static_cast<float>(f[k]);
  row.label = label;
  return row;
}

std::size_t flat_index(const Event& event, const ClusterIndices& idx) {
  std::size_t flat = 0;
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) flat = flat * event.clusters()[sl].size() + idx[sl];
  return flat;
}

EventRows extract_event(const Event& event, NegativeStrategy strategy, ExtractionMode mode, std::uint64_t seed) {
  EventRows out;
  if (event.truth().empty()) {
    out.status = EventStatus::NoTruth;
    return out;
  }
  if (!event.complete()) {
    out.status = EventStatus::Incomplete;
    return out;
  }
  if (mode == ExtractionMode::Evaluation && event.truth().size() != 1) {
    out.status = EventStatus::MultiTrack;
    return out;
  }

  const auto candidates = generate_candidates(event);
  if (mode == ExtractionMode::Evaluation) {
    out.rows.reserve(candidates.size());
    for (const auto& c : candidates) out.rows.push_back(make_row(event.id(), c.features, c.is_true.value() ? 1 : 0));
    return out;
  }

  Rng rng = make_rng(seed, static_cast<std::uint64_t>(event.id()));
  for (const auto& track : event.truth()) {
    const auto& positive = candidates[flat_index(event, track.cluster_indices)];
    try {
      const auto negative = select_negative(candidates, positive.features, strategy, rng);
      out.rows.push_back(make_row(event.id(), positive.features, 1));
      out.rows.push_back(make_row(event.id(), candidates[negative].features, 0));
    } catch (const NoNegativeError&) {
      out.rows.clear();
      out.status = EventStatus::NoNegative;
      return out;
    }
  }
  return out;
}

}  // namespace

ExtractionResult extract_dataset(std::span<const Event> events, NegativeStrategy strategy, ExtractionMode mode,
                                 std::uint64_t seed, unsigned threads) {
  std::vector<EventRows> per_event(events.size());
  parallel_for(events.size(), threads,
               [&](std::size_t i) { per_event[i] = extract_event(events[i], strategy, mode, seed); });

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return events[a].id() < events[b].id(); });

  ExtractionResult result;
  auto& report = result.report;
  for (const std::size_t i : order) {
    auto& ev = per_event[i];
    switch (ev.status) {
      case EventStatus::NoTruth:
        ++report.skipped_no_truth;
        continue;
      case EventStatus::Incomplete:
        ++report.skipped_incomplete;
        continue;
      case EventStatus::NoNegative:
        ++report.skipped_no_negative;
        continue;
      case EventStatus::MultiTrack:
        ++report.skipped_multi_track;
        continue;
      case EventStatus::Ok:
        break;
    }
    report.samples += mode == ExtractionMode::Training ? ev.rows.size() / 2 : 1;
    for (auto& row : ev.rows) {
      (row.label == 1 ? report.valid_rows : report.invalid_rows) += 1;
      result.dataset.rows.push_back(row);
    }
  }
  report.rows = result.dataset.rows.size();
  return result;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (dataset.empty()) throw ValidationError("cannot split an empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test fraction must lie in (0, 1)");

  const auto groups = dataset.groups();
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(groups.size())));

  std::vector<bool> is_test(groups.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  std::pair<Dataset, Dataset> out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& side = is_test[g] ? out.second : out.first;
    side.rows.insert(side.rows.end(), dataset.rows.begin() + static_cast<std::ptrdiff_t>(groups[g].first),
                     dataset.rows.begin() + static_cast<std::ptrdiff_t>(groups[g].second));
  }
  return out;
}

namespace {

constexpr std::string_view kCsvHeader = "event_id,f1,f2,f3,f4,f5,f6,label";

}  // namespace

void write_dataset(const Dataset& dataset, std::ostream& out) {
  out << kCsvHeader << '\n';
  char buf[32];
  for (const auto& row : dataset.rows) {
    out << row.event_id;
    for (const float f : row.features) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f));
      out << ',' << buf;
    }
    out << ',' << row.label << '\n';
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(dataset, out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(std::string("invalid ") + what + " \"" + std::string(text) + "\"", line);
  }
  return value;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset dataset;
  std::string line;
  std::size_t line_number = 0;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  ++line_number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError("unexpected CSV header \"" + line + "\"", line_number);

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::array<std::string_view, 8> fields;
    std::size_t n_fields = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      if (n_fields == fields.size()) throw ParseError("too many fields", line_number);
      fields[n_fields++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (n_fields != fields.size()) throw ParseError("expected 8 fields", line_number);

    LabeledRow row;
    row.event_id = parse_field<std::int64_t>(fields[0], line_number, "event_id");
    for (std::size_t k = 0; k < kSuperlayers; ++k) {
      row.features[k] = parse_field<float>(fields[k + 1], line_number, "feature");
      if (!std::isfinite(row.features[k])) throw ParseError("non-finite feature", line_number);
    }
    row.label = parse_field<int>(fields[7], line_number, "label");
    if (row.label != 0 && row.label != 1) throw ParseError("label must be 0 or 1", line_number);
    dataset.rows.push_back(row);
  }
  return dataset;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

}  // namespace trackcull
