#include "trackcull/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "trackcull/error.hpp"
#include "trackcull/parallel.hpp"

namespace trackcull {

ConfusionMatrix confusion_matrix(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) {
    throw ValidationError("prediction and truth sequences differ in length (" + std::to_string(predictions.size()) +
                          " vs " + std::to_string(truth.size()) + ")");
  }
  ConfusionMatrix counts{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int actual = truth[i];
    const int predicted = predictions[i];
    if ((actual != 0 && actual != 1) || (predicted != 0 && predicted != 1)) {
      throw ValidationError("labels must be 0 or 1");
    }
    ++counts[static_cast<std::size_t>(actual)][static_cast<std::size_t>(predicted)];
  }
  return counts;
}

LatencyStats latency_benchmark(const Classifier& model, std::span<const Features> rows, std::size_t repetitions) {
  if (rows.empty()) throw ValidationError("latency benchmark needs at least one row");
  if (repetitions < 3) throw ValidationError("latency benchmark needs at least 3 repetitions");

  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (const auto& row : rows) sink = sink + model.predict(row).p_valid;

  std::vector<double> per_row_us;
  per_row_us.reserve(repetitions);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto start = clock::now();
    for (const auto& row : rows) sink = sink + model.predict(row).p_valid;
    const std::chrono::duration<double, std::micro> elapsed = clock::now() - start;
    per_row_us.push_back(elapsed.count() / static_cast<double>(rows.size()));
  }

  LatencyStats stats;
  stats.rows = rows.size();
  stats.repetitions = repetitions;
  double sum = 0.0;
  for (const double v : per_row_us) sum += v;
  stats.mean_us = sum / static_cast<double>(repetitions);
  std::sort(per_row_us.begin(), per_row_us.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(repetitions)));
  stats.p99_us = per_row_us[std::max<std::size_t>(rank, 1) - 1];
  return stats;
}

EvalReport compute_metrics(const Dataset& eval, std::span<const double> p_valid, double threshold) {
  if (p_valid.size() != eval.rows.size()) throw ValidationError("score count does not match dataset rows");

  EvalReport report;
  report.threshold = threshold;
  report.n_rows = eval.rows.size();

  std::size_t false_positive_samples = 0;
  std::size_t top_ranked = 0;
  for (const auto& [begin, end] : eval.groups()) {
    std::size_t valid_row = end;
    for (std::size_t r = begin; r < end; ++r) {
      if (eval.rows[r].label != 1) continue;
      if (valid_row != end) {
        throw DataIntegrityError("event " + std::to_string(eval.rows[r].event_id) + " has more than one valid row");
      }
      valid_row = r;
    }
    if (valid_row == end) {
      throw DataIntegrityError("event " + std::to_string(eval.rows[begin].event_id) + " has no valid row");
    }
    ++report.n_samples;
    if (p_valid[valid_row] < threshold) continue;

    ++report.detected;
    bool any_false_positive = false;
    bool strictly_highest = true;
    for (std::size_t r = begin; r < end; ++r) {
      if (r == valid_row) continue;
      any_false_positive = any_false_positive || p_valid[r] >= threshold;
      strictly_highest = strictly_highest && p_valid[valid_row] > p_valid[r];
    }
    false_positive_samples += any_false_positive ? 1 : 0;
    top_ranked += strictly_highest ? 1 : 0;
  }

  for (std::size_t r = 0; r < eval.rows.size(); ++r) {
    const int predicted = p_valid[r] >= threshold ? 1 : 0;
    ++report.confusion[static_cast<std::size_t>(eval.rows[r].label)][static_cast<std::size_t>(predicted)];
  }

  if (report.n_samples > 0) {
    report.a1 = static_cast<double>(report.detected) / static_cast<double>(report.n_samples);
    report.af = 1.0 - report.a1;
  }
  if (report.detected > 0) {
    report.ac = static_cast<double>(false_positive_samples) / static_cast<double>(report.detected);
    report.ah = static_cast<double>(top_ranked) / static_cast<double>(report.detected);
  }
  if (report.n_rows > 0) {
    report.accuracy = static_cast<double>(report.confusion[0][0] + report.confusion[1][1]) /
                      static_cast<double>(report.n_rows);
  }
  return report;
}

std::vector<double> score_rows(const Classifier& model, const Dataset& data, unsigned threads) {
  std::vector<double> scores(data.rows.size());
  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (scores.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(scores.size(), (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) scores[r] = model.predict(data.rows[r].as_features()).p_valid;
  });
  return scores;
}

EvalReport evaluate(const Classifier& model, const Dataset& eval, const EvalOptions& options) {
  const auto scores = score_rows(model, eval, options.threads);
  EvalReport report = compute_metrics(eval, scores, options.threshold);
  if (options.latency_rows > 0 && !eval.empty()) {
    const std::size_t n = std::min(options.latency_rows, eval.rows.size());
    std::vector<Features> rows;
    rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) rows.push_back(eval.rows[r].as_features());
    report.latency = latency_benchmark(model, rows, std::max<std::size_t>(options.latency_repetitions, 3));
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["n_samples"] = report.n_samples;
  doc["n_rows"] = report.n_rows;
  doc["detected"] = report.detected;
  doc["threshold"] = report.threshold;
  doc["accuracy"] = report.accuracy;
  doc["a1"] = report.a1;
  doc["ac"] = report.ac;
  doc["ah"] = report.ah;
  doc["af"] = report.af;
  doc["confusion"] = {{"actual_invalid", {report.confusion[0][0], report.confusion[0][1]}},
                      {"actual_valid", {report.confusion[1][0], report.confusion[1][1]}}};
  if (report.latency) {
    doc["timing"] = {{"latency_mean_us", report.latency->mean_us},
                     {"latency_p99_us", report.latency->p99_us},
                     {"latency_rows", report.latency->rows},
                     {"latency_repetitions", report.latency->repetitions}};
  }
  return doc.dump(2) + "\n";
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
  return buf;
}

std::string microseconds(double us) {
  char buf[32];
  if (us >= 1000.0) {
    std::snprintf(buf, sizeof buf, "%.2f ms", us / 1000.0);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f us", us);
  }
  return buf;
}

}  // namespace

std::string report_table(const EvalReport& report, const TableExtras& extras) {
  std::vector<std::pair<std::string, std::string>> rows;
  if (extras.training_accuracy) rows.emplace_back("Training Accuracy", percent(*extras.training_accuracy));
  rows.emplace_back("Testing Accuracy", percent(report.accuracy));
  rows.emplace_back("A1", percent(report.a1));
  rows.emplace_back("Ac", percent(report.ac));
  rows.emplace_back("Ah", percent(report.ah));
  rows.emplace_back("Af", percent(report.af));
  if (extras.train_seconds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f sec", *extras.train_seconds);
    rows.emplace_back("Time to Train", buf);
  }
  if (report.latency) {
    rows.emplace_back("Time to Predict/row", microseconds(report.latency->mean_us));
    if (report.n_samples > 0) {
      const double rows_per_sample = static_cast<double>(report.n_rows) / static_cast<double>(report.n_samples);
      rows.emplace_back("Time to Predict/sample", microseconds(report.latency->mean_us * rows_per_sample));
    }
  }

  std::size_t w0 = 6;
  std::size_t w1 = 6;
  for (const auto& [k, v] : rows) {
    w0 = std::max(w0, k.size());
    w1 = std::max(w1, v.size());
  }
  std::ostringstream out;
  const auto line = [&](const std::string& a, const std::string& b) {
    out << "| " << a << std::string(w0 - a.size(), ' ') << " | " << b << std::string(w1 - b.size(), ' ') << " |\n";
  };
  const std::string rule = "+" + std::string(w0 + 2, '-') + "+" + std::string(w1 + 2, '-') + "+\n";
  out << rule;
  line("Metric", "Result");
  out << rule;
  for (const auto& [k, v] : rows) line(k, v);
  out << rule;
  return out.str();
}

std::string confusion_table(const ConfusionMatrix& confusion) {
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-16s %20s %20s\n", "", "Predicted: Invalid", "Predicted: Valid");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-16s %20llu %20llu\n", "Actual: Invalid",
                static_cast<unsigned long long>(confusion[0][0]), static_cast<unsigned long long>(confusion[0][1]));
  out << buf;
  std::snprintf(buf, sizeof buf, "%-16s %20llu %20llu\n", "Actual: Valid",
                static_cast<unsigned long long>(confusion[1][0]), static_cast<unsigned long long>(confusion[1][1]));
  out << buf;
  return out.str();
}

}  // namespace trackcull
