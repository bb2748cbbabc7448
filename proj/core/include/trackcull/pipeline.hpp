#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trackcull/classifier.hpp"
#include "trackcull/event.hpp"

namespace trackcull {

/// Settings of the surrogate track fitter. The fit is a quadratic least-squares
/// seed refined by iterated Kalman passes that step the state through
/// `propagation_steps` sub-steps between neighbouring super-layers; passes and
/// steps set the per-candidate cost without changing the fitted values.
struct FitConfig {
  double chi2_cut = 3.0 * 0.3 * 0.3;
  double curvature_scale = 8.0;
  std::size_t kalman_passes = 3;
  std::size_t propagation_steps = 256;

  /// chi2_cut = 3 * sigma^2 for a simulated wire resolution sigma.
  static FitConfig for_wire_sigma(double sigma, double curvature_scale = 8.0);
};

struct FitResult {
  bool accepted = false;
  double chi2 = 0.0;  ///< mean squared residual, wire units^2
  std::optional<double> momentum_estimate;
  std::array<double, 3> coefficients{};  ///< intercept, slope, curvature
};

/// Closed-form least-squares quadratic over k = 0..5: (intercept, slope, curvature).
std::array<double, 3> quadratic_seed(const std::array<double, kSuperlayers>& wires) noexcept;

FitResult surrogate_fit(const std::array<double, kSuperlayers>& wires, const FitConfig& config);
/// Points must be super-layers 1..6 in order (ValidationError otherwise).
FitResult surrogate_fit(std::span<const Cluster> points, const FitConfig& config);

struct EventReco {
  EventId event_id = 0;
  std::optional<ClusterIndices> chosen;
  std::optional<FitResult> chosen_fit;
  std::size_t candidates_total = 0;
  std::size_t candidates_fitted = 0;
  bool fallback_used = false;
  bool skipped = false;  ///< incomplete event
  double seconds = 0.0;
};

struct RecoOutput {
  std::vector<EventReco> events;
  double wall_seconds = 0.0;
  std::size_t candidates_fitted = 0;
  std::size_t candidates_total = 0;
  std::size_t skipped_incomplete = 0;
  unsigned threads = 1;
};

/// Fits every candidate and keeps the lowest-chi2 accepted one per event.
RecoOutput run_conventional(std::span<const Event> events, const FitConfig& config, unsigned threads = 1);

struct AiOptions {
  double threshold = 0.5;
  /// Fit the best-scoring candidate when none reaches the threshold.
  bool fallback = true;
};

/// Scores every candidate and fits only those with p_valid >= threshold.
RecoOutput run_ai_assisted(std::span<const Event> events, const Classifier& model, const AiOptions& options,
                           const FitConfig& config, unsigned threads = 1);

struct EfficiencyBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t n_events = 0;
  std::size_t n_ai = 0;
  std::size_t n_conv = 0;
  std::optional<double> ratio;  ///< absent when n_conv == 0
};

struct EfficiencyReport {
  std::vector<EfficiencyBin> bins;
  double speedup = 0.0;
  double candidate_reduction = 0.0;
  double conventional_seconds = 0.0;
  double ai_seconds = 0.0;
  std::size_t conventional_fits = 0;
  std::size_t ai_fits = 0;
  std::size_t events = 0;
  double mean_candidates = 0.0;
  double conventional_efficiency = 0.0;  ///< truth-matched events / events
  double ai_efficiency = 0.0;
  unsigned threads = 1;
};

std::vector<double> uniform_bin_edges(double low, double high, std::size_t bins);

/// Per momentum bin of the generated track, the ratio of AI-path to
/// conventional-path truth-matched reconstructions.
EfficiencyReport compare(const RecoOutput& ai, const RecoOutput& conventional, std::span<const Event> events,
                         std::span<const double> bin_edges);

/// `bin_low,bin_high,ratio,n_ai,n_conv`; ratio left empty for bins without conventional tracks.
std::string efficiency_csv(const EfficiencyReport& report);
/// Timing-dependent numbers are grouped under "timing".
std::string efficiency_json(const EfficiencyReport& report);

}  // namespace trackcull
