#include "trackcull/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "trackcull/candidate.hpp"
#include "trackcull/error.hpp"
#include "trackcull/parallel.hpp"

namespace trackcull {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

// Curvatures below this magnitude (wires per super-layer^2) are reported as straight.
constexpr double kStraightCurvature = 1e-9;
constexpr double kSeedInflation = 100.0;

Mat3 invert(const Mat3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Mat3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

/// (A^T A)^-1 and (A^T A)^-1 A^T for design rows (1, k, k^2), k = 0..5.
struct QuadraticDesign {
  Mat3 covariance{};
  std::array<std::array<double, kSuperlayers>, 3> pseudo_inverse{};

  QuadraticDesign() {
    Mat3 normal{};
    for (std::size_t k = 0; k < kSuperlayers; ++k) {
      const Vec3 row{1.0, double(k), double(k * k)};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) normal[i][j] += row[i] * row[j];
    }
    covariance = invert(normal);
    for (int i = 0; i < 3; ++i) {
      for (std::size_t k = 0; k < kSuperlayers; ++k) {
        const Vec3 row{1.0, double(k), double(k * k)};
        double s = 0.0;
        for (int j = 0; j < 3; ++j) s += covariance[i][j] * row[j];
        pseudo_inverse[i][k] = s;
      }
    }
  }
};

const QuadraticDesign& design() {
  static const QuadraticDesign d;
  return d;
}

/// One forward Kalman pass over the six measurements (unit variance). The
/// state is (wire, d wire / d k, curvature), propagated in equal sub-steps.
Vec3 kalman_pass(const std::array<double, kSuperlayers>& wires, const Vec3& seed, std::size_t steps) {
  Vec3 x = seed;  // at k = 0 the state coincides with (intercept, slope, curvature)
  Mat3 p = design().covariance;
  for (auto& row : p)
    for (auto& v : row) v *= kSeedInflation;

  const double h = 1.0 / static_cast<double>(steps);
  for (std::size_t k = 0; k < kSuperlayers; ++k) {
    // Update with measurement wires[k], H = (1, 0, 0), R = 1.
    const double s = p[0][0] + 1.0;
    const Vec3 gain{p[0][0] / s, p[1][0] / s, p[2][0] / s};
    const double residual = wires[k] - x[0];
    for (int i = 0; i < 3; ++i) x[i] += gain[i] * residual;
    const Vec3 top = p[0];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) p[i][j] -= gain[i] * top[j];

    if (k + 1 == kSuperlayers) break;
    for (std::size_t step = 0; step < steps; ++step) {
      // F = [[1, h, h^2], [0, 1, 2h], [0, 0, 1]]
      x = {x[0] + h * x[1] + h * h * x[2], x[1] + 2.0 * h * x[2], x[2]};
      Mat3 fp{};
      for (int j = 0; j < 3; ++j) {
        fp[0][j] = p[0][j] + h * p[1][j] + h * h * p[2][j];
        fp[1][j] = p[1][j] + 2.0 * h * p[2][j];
        fp[2][j] = p[2][j];
      }
      for (int i = 0; i < 3; ++i) {
        p[i][0] = fp[i][0] + h * fp[i][1] + h * h * fp[i][2];
        p[i][1] = fp[i][1] + 2.0 * h * fp[i][2];
        p[i][2] = fp[i][2];
      }
    }
  }
  // Back from the state at k = 5 to polynomial coefficients.
  const double last = static_cast<double>(kSuperlayers - 1);
  const double c = x[2];
  const double b = x[1] - 2.0 * c * last;
  const double a = x[0] - b * last - c * last * last;
  return {a, b, c};
}

}  // namespace

FitConfig FitConfig::for_wire_sigma(double sigma, double curvature_scale) {
  FitConfig config;
  config.chi2_cut = 3.0 * sigma * sigma;
  config.curvature_scale = curvature_scale;
  return config;
}

std::array<double, 3> quadratic_seed(const std::array<double, kSuperlayers>& wires) noexcept {
  std::array<double, 3> coeffs{};
  const auto& pinv = design().pseudo_inverse;
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < kSuperlayers; ++k) s += pinv[i][k] * wires[k];
    coeffs[i] = s;
  }
  return coeffs;
}

FitResult surrogate_fit(const std::array<double, kSuperlayers>& wires, const FitConfig& config) {
  Vec3 coeffs = quadratic_seed(wires);
  const std::size_t steps = std::max<std::size_t>(config.propagation_steps, 1);
  for (std::size_t pass = 0; pass < config.kalman_passes; ++pass) coeffs = kalman_pass(wires, coeffs, steps);
  if (std::abs(coeffs[2]) < kStraightCurvature) coeffs[2] = 0.0;

  FitResult result;
  result.coefficients = coeffs;
  double sum = 0.0;
  for (std::size_t k = 0; k < kSuperlayers; ++k) {
    const double kk = static_cast<double>(k);
    const double r = wires[k] - (coeffs[0] + coeffs[1] * kk + coeffs[2] * kk * kk);
    sum += r * r;
  }
  result.chi2 = sum / static_cast<double>(kSuperlayers);
  result.accepted = result.chi2 <= config.chi2_cut;
  if (coeffs[2] != 0.0) result.momentum_estimate = config.curvature_scale / std::abs(coeffs[2]);
  return result;
}

FitResult surrogate_fit(std::span<const Cluster> points, const FitConfig& config) {
  if (points.size() != kSuperlayers) throw ValidationError("surrogate fit needs exactly 6 points");
  std::array<double, kSuperlayers> wires{};
  for (std::size_t k = 0; k < kSuperlayers; ++k) {
    validate(points[k]);
    if (points[k].superlayer != static_cast<int>(k) + 1) {
      throw ValidationError("surrogate fit points must be ordered by super-layer 1..6");
    }
    wires[k] = points[k].avg_wire;
  }
  return surrogate_fit(wires, config);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void fit_candidate(const Event& event, const TrackCandidate& candidate, const FitConfig& config, EventReco& reco) {
  const FitResult fit = surrogate_fit(candidate_wires(event, candidate.source_indices), config);
  ++reco.candidates_fitted;
  if (!fit.accepted) return;
  if (!reco.chosen_fit || fit.chi2 < reco.chosen_fit->chi2) {
    reco.chosen = candidate.source_indices;
    reco.chosen_fit = fit;
  }
}

template <typename PerEvent>
RecoOutput run_events(std::span<const Event> events, unsigned threads, PerEvent&& per_event) {
  RecoOutput out;
  out.threads = threads == 0 ? default_threads() : threads;
  out.events.resize(events.size());
  const auto start = Clock::now();
  parallel_for(events.size(), out.threads, [&](std::size_t i) {
    const auto event_start = Clock::now();
    EventReco& reco = out.events[i];
    reco.event_id = events[i].id();
    if (!events[i].complete()) {
      reco.skipped = true;
    } else {
      per_event(events[i], reco);
    }
    reco.seconds = seconds_since(event_start);
  });
  out.wall_seconds = seconds_since(start);
  for (const auto& reco : out.events) {
    out.candidates_fitted += reco.candidates_fitted;
    out.candidates_total += reco.candidates_total;
    out.skipped_incomplete += reco.skipped ? 1 : 0;
  }
  return out;
}

}  // namespace

RecoOutput run_conventional(std::span<const Event> events, const FitConfig& config, unsigned threads) {
  return run_events(events, threads, [&](const Event& event, EventReco& reco) {
    const auto candidates = generate_candidates(event);
    reco.candidates_total = candidates.size();
    for (const auto& candidate : candidates) fit_candidate(event, candidate, config, reco);
  });
}

RecoOutput run_ai_assisted(std::span<const Event> events, const Classifier& model, const AiOptions& options,
                           const FitConfig& config, unsigned threads) {
  return run_events(events, threads, [&](const Event& event, EventReco& reco) {
    const auto candidates = generate_candidates(event);
    reco.candidates_total = candidates.size();
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double score = model.predict(candidates[i].features).p_valid;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
      if (score >= options.threshold) fit_candidate(event, candidates[i], config, reco);
    }
    if (reco.candidates_fitted == 0 && options.fallback && !candidates.empty()) {
      reco.fallback_used = true;
      fit_candidate(event, candidates[best], config, reco);
    }
  });
}

std::vector<double> uniform_bin_edges(double low, double high, std::size_t bins) {
  if (bins == 0 || !(low < high)) throw ValidationError("bin range must be non-empty");
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = low + (high - low) * static_cast<double>(i) / static_cast<double>(bins);
  }
  edges.back() = high;
  return edges;
}

namespace {

std::optional<double> matched_momentum(const EventReco& reco, const Event& event) {
  if (!reco.chosen) return std::nullopt;
  for (const auto& t : event.truth()) {
    if (t.cluster_indices == *reco.chosen) return t.momentum;
  }
  return std::nullopt;
}

std::optional<std::size_t> bin_of(std::span<const double> edges, double value) {
  if (value < edges.front() || value > edges.back()) return std::nullopt;
  const auto it = std::upper_bound(edges.begin(), edges.end(), value);
  const auto bin = static_cast<std::size_t>(it - edges.begin());
  return std::min(bin, edges.size() - 1) - 1;
}

}  // namespace

EfficiencyReport compare(const RecoOutput& ai, const RecoOutput& conventional, std::span<const Event> events,
                         std::span<const double> bin_edges) {
  if (ai.events.size() != events.size() || conventional.events.size() != events.size()) {
    throw ValidationError("reconstruction outputs do not cover the same events");
  }
  if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) != bin_edges.end()) {
    throw ValidationError("bin edges must be strictly increasing with at least two entries");
  }

  EfficiencyReport report;
  for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b) {
    EfficiencyBin bin;
    bin.low = bin_edges[b];
    bin.high = bin_edges[b + 1];
    report.bins.push_back(bin);
  }

  std::size_t labeled = 0;
  std::size_t ai_matched = 0;
  std::size_t conv_matched = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& event = events[i];
    if (ai.events[i].event_id != event.id() || conventional.events[i].event_id != event.id()) {
      throw ValidationError("reconstruction outputs are not aligned with the event list");
    }
    if (event.truth().empty()) continue;
    ++labeled;
    if (auto b = bin_of(bin_edges, event.truth().front().momentum)) ++report.bins[*b].n_events;
    if (auto p = matched_momentum(ai.events[i], event)) {
      ++ai_matched;
      if (auto b = bin_of(bin_edges, *p)) ++report.bins[*b].n_ai;
    }
    if (auto p = matched_momentum(conventional.events[i], event)) {
      ++conv_matched;
      if (auto b = bin_of(bin_edges, *p)) ++report.bins[*b].n_conv;
    }
  }
  for (auto& bin : report.bins) {
    if (bin.n_conv > 0) bin.ratio = static_cast<double>(bin.n_ai) / static_cast<double>(bin.n_conv);
  }

  report.events = events.size();
  report.conventional_seconds = conventional.wall_seconds;
  report.ai_seconds = ai.wall_seconds;
  report.speedup = ai.wall_seconds > 0.0 ? conventional.wall_seconds / ai.wall_seconds : 0.0;
  report.conventional_fits = conventional.candidates_fitted;
  report.ai_fits = ai.candidates_fitted;
  report.candidate_reduction =
      ai.candidates_fitted > 0 ? static_cast<double>(conventional.candidates_fitted) / ai.candidates_fitted : 0.0;
  const std::size_t processed = events.size() - conventional.skipped_incomplete;
  report.mean_candidates =
      processed > 0 ? static_cast<double>(conventional.candidates_total) / static_cast<double>(processed) : 0.0;
  if (labeled > 0) {
    report.conventional_efficiency = static_cast<double>(conv_matched) / static_cast<double>(labeled);
    report.ai_efficiency = static_cast<double>(ai_matched) / static_cast<double>(labeled);
  }
  report.threads = std::max(ai.threads, conventional.threads);
  return report;
}

std::string efficiency_csv(const EfficiencyReport& report) {
  std::ostringstream out;
  out << "bin_low,bin_high,ratio,n_ai,n_conv\n";
  char buf[64];
  for (const auto& bin : report.bins) {
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,", bin.low, bin.high);
    out << buf;
    if (bin.ratio) {
      std::snprintf(buf, sizeof buf, "%.6f", *bin.ratio);
      out << buf;
    }
    out << ',' << bin.n_ai << ',' << bin.n_conv << '\n';
  }
  return out.str();
}

std::string efficiency_json(const EfficiencyReport& report) {
  nlohmann::ordered_json doc;
  doc["events"] = report.events;
  doc["mean_candidates"] = report.mean_candidates;
  doc["conventional_fits"] = report.conventional_fits;
  doc["ai_fits"] = report.ai_fits;
  doc["candidate_reduction"] = report.candidate_reduction;
  doc["conventional_efficiency"] = report.conventional_efficiency;
  doc["ai_efficiency"] = report.ai_efficiency;
  auto bins = nlohmann::ordered_json::array();
  for (const auto& bin : report.bins) {
    nlohmann::ordered_json b;
    b["low"] = bin.low;
    b["high"] = bin.high;
    b["n_events"] = bin.n_events;
    b["n_ai"] = bin.n_ai;
    b["n_conv"] = bin.n_conv;
    b["ratio"] = bin.ratio ? nlohmann::ordered_json(*bin.ratio) : nlohmann::ordered_json(nullptr);
    bins.push_back(std::move(b));
  }
  doc["bins"] = std::move(bins);
  doc["timing"] = {{"conventional_seconds", report.conventional_seconds},
                   {"ai_seconds", report.ai_seconds},
                   {"speedup", report.speedup},
                   {"threads", report.threads}};
  return doc.dump(2) + "\n";
}

}  // namespace trackcull
