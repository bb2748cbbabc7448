#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "trackcull/event.hpp"
#include "trackcull/random.hpp"

namespace trackcull {

/// Synthetic single-sector events: tracks follow a quadratic in super-layer
/// index whose curvature scales as charge / momentum, on top of uniformly
/// distributed noise clusters.
struct SimConfig {
  std::int64_t n_events = 0;
  int tracks_per_event = 1;
  double noise_mean = 2.0;  ///< Poisson mean of noise clusters per super-layer
  double p_min = 0.5;       ///< GeV
  double p_max = 10.0;      ///< GeV
  double curvature_scale = 8.0;
  double wire_noise_sigma = 0.3;
  std::uint64_t seed = 1;

  /// Throws ValidationError on inconsistent parameters.
  void validate() const;
};

/// Retries allowed before a track that leaves the chamber is reported as a GenerationError.
inline constexpr int kMaxTrackAttempts = 100;

struct GeneratedTrack {
  std::array<double, kSuperlayers> avg_wires{};
  double momentum = 0.0;
  int charge = 1;
  double intercept = 0.0;
  double slope = 0.0;
};

/// Curvature (wires per super-layer squared) of a track.
double track_curvature(double momentum, int charge, double curvature_scale);

/// Draws (intercept, slope) such that the noiseless trajectory stays inside
/// [0, 112] on all six super-layers.
std::pair<double, double> draw_track_shape(double curvature, Rng& rng);

/// Wire of super-layer k (0-based) is
///   intercept + slope*k + charge*(curvature_scale/momentum)*k^2 + N(0, sigma).
/// When the result leaves the chamber, intercept and slope are redrawn with
/// draw_track_shape, up to kMaxTrackAttempts attempts in total.
GeneratedTrack generate_track(const SimConfig& config, double momentum, int charge, double intercept,
                              double slope, Rng& rng);

/// Event `event_id` drawn from its own RNG stream derive_seed(config.seed, event_id).
Event generate_event(const SimConfig& config, EventId event_id);

/// Events 0..n_events-1, generated in parallel and returned in id order.
std::vector<Event> generate_events(const SimConfig& config, unsigned threads = 0);

struct SampleSetSummary {
  std::int64_t events = 0;
  double mean_candidates = 0.0;
};

/// Writes config.n_events events as JSONL to `path`.
SampleSetSummary generate_sample_set(const SimConfig& config, const std::filesystem::path& path,
                                     unsigned threads = 0);

}  // namespace trackcull
