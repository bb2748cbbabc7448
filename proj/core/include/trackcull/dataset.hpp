#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "trackcull/candidate.hpp"
#include "trackcull/event.hpp"
#include "trackcull/random.hpp"

namespace trackcull {

enum class NegativeStrategy { LeastLikely, Random, ClosestNeighbor };
enum class ExtractionMode { Training, Evaluation };

std::string_view to_string(NegativeStrategy strategy) noexcept;
std::string_view to_string(ExtractionMode mode) noexcept;
/// Accepts the CLI spellings "closest", "random", "least-likely".
std::optional<NegativeStrategy> parse_strategy(std::string_view name) noexcept;
std::optional<ExtractionMode> parse_mode(std::string_view name) noexcept;

/// Row features are stored in single precision so the 9-significant-digit CSV
/// form round-trips exactly.
using RowFeatures = std::array<float, kSuperlayers>;

struct LabeledRow {
  EventId event_id = 0;
  RowFeatures features{};
  int label = 0;  ///< 1 = valid track, 0 = invalid

  Features as_features() const noexcept;
  friend bool operator==(const LabeledRow&, const LabeledRow&) = default;
};

/// Rows of one event are contiguous; groups appear in ascending event_id.
struct Dataset {
  std::vector<LabeledRow> rows;

  /// [begin, end) row ranges of consecutive rows sharing an event_id.
  std::vector<std::pair<std::size_t, std::size_t>> groups() const;
  std::size_t count_label(int label) const noexcept;
  bool empty() const noexcept { return rows.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ExtractionReport {
  std::size_t samples = 0;
  std::size_t rows = 0;
  std::size_t valid_rows = 0;
  std::size_t invalid_rows = 0;
  std::size_t skipped_no_truth = 0;
  std::size_t skipped_incomplete = 0;
  std::size_t skipped_no_negative = 0;
  std::size_t skipped_multi_track = 0;  ///< evaluation mode needs one truth track per event

  std::size_t skipped() const noexcept {
    return skipped_no_truth + skipped_incomplete + skipped_no_negative + skipped_multi_track;
  }
};

/// Index into `candidates` of the negative paired with the true track.
/// Candidates flagged is_true, or whose features equal `true_features`, are
/// never chosen. Ties resolve to the lowest lexicographic source index.
/// Throws NoNegativeError when no other candidate exists.
std::size_t select_negative(std::span<const TrackCandidate> candidates, const Features& true_features,
                            NegativeStrategy strategy, Rng& rng);

struct ExtractionResult {
  Dataset dataset;
  ExtractionReport report;
};

/// Training mode: one valid row and one strategy-selected invalid row per
/// truth track. Evaluation mode: the valid row plus every other candidate of
/// the event. Per-event RNG streams make the output independent of `threads`.
ExtractionResult extract_dataset(std::span<const Event> events, NegativeStrategy strategy,
                                 ExtractionMode mode, std::uint64_t seed, unsigned threads = 0);

/// Event-level split; no event contributes rows to both sides.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// CSV with header `event_id,f1,f2,f3,f4,f5,f6,label`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
void write_dataset(const Dataset& dataset, std::ostream& out);
Dataset read_dataset(const std::filesystem::path& path);
Dataset read_dataset(std::istream& in);

}  // namespace trackcull
