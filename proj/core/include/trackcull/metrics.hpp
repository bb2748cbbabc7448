#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackcull/classifier.hpp"
#include "trackcull/dataset.hpp"

namespace trackcull {

/// counts[actual][predicted], index 0 = invalid, 1 = valid.
using ConfusionMatrix = std::array<std::array<std::uint64_t, 2>, 2>;

/// Throws ValidationError on length mismatch or labels other than 0/1.
ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> truth);

struct LatencyStats {
  double mean_us = 0.0;
  double p99_us = 0.0;
  std::size_t rows = 0;
  std::size_t repetitions = 0;
};

/// Single-threaded per-row inference time. One untimed warm-up pass, then
/// `repetitions` timed passes; each pass contributes its elapsed time divided
/// by the row count. Requires non-empty rows and repetitions >= 3.
LatencyStats latency_benchmark(const Classifier& model, std::span<const Features> rows, std::size_t repetitions);

struct EvalReport {
  std::size_t n_samples = 0;
  std::size_t n_rows = 0;
  std::size_t detected = 0;
  double threshold = 0.5;
  double accuracy = 0.0;
  double a1 = 0.0;
  double ac = 0.0;
  double ah = 0.0;
  double af = 0.0;
  ConfusionMatrix confusion{};
  std::optional<LatencyStats> latency;
};

/// Sample-level and row-level metrics from precomputed p_valid scores.
/// Each event group must contain exactly one valid row (DataIntegrityError otherwise).
EvalReport compute_metrics(const Dataset& eval, std::span<const double> p_valid, double threshold = 0.5);

/// p_valid for every row of the dataset.
std::vector<double> score_rows(const Classifier& model, const Dataset& data, unsigned threads = 0);

struct EvalOptions {
  double threshold = 0.5;
  std::size_t latency_repetitions = 5;
  std::size_t latency_rows = 2000;  ///< leading rows used for the latency measurement; 0 disables it
  unsigned threads = 0;
};

EvalReport evaluate(const Classifier& model, const Dataset& eval, const EvalOptions& options = {});

/// JSON object; latency numbers live under the "timing" key.
std::string report_to_json(const EvalReport& report);

/// Metric / Result table in the layout of the usual classifier summary.
/// Optional rows are printed when the values are known.
struct TableExtras {
  std::optional<double> training_accuracy;
  std::optional<double> train_seconds;
};
std::string report_table(const EvalReport& report, const TableExtras& extras = {});
std::string confusion_table(const ConfusionMatrix& confusion);

}  // namespace trackcull
