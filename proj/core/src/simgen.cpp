#include "trackcull/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <tuple>

#include "trackcull/error.hpp"
#include "trackcull/event_io.hpp"
#include "trackcull/parallel.hpp"

namespace trackcull {

namespace {

constexpr double kSlopeMargin = 25.0;  // wires per super-layer beyond the symmetric-arc slope
constexpr int kShapeAttempts = 10000;

bool inside_chamber(const std::array<double, kSuperlayers>& wires) {
  return std::all_of(wires.begin(), wires.end(), [](double w) { return w >= 0.0 && w <= kWireCount; });
}

}  // namespace

void SimConfig::validate() const {
  if (n_events < 0) throw ValidationError("n_events must be >= 0");
  if (tracks_per_event < 1) throw ValidationError("tracks_per_event must be >= 1");
  if (!(noise_mean >= 0.0) || !std::isfinite(noise_mean)) throw ValidationError("noise mean must be >= 0");
  if (!(p_min > 0.0)) throw ValidationError("p_min must be > 0");
  if (!(p_min <= p_max) || !std::isfinite(p_max)) throw ValidationError("p_min must not exceed p_max");
  if (!(wire_noise_sigma >= 0.0)) throw ValidationError("wire_noise_sigma must be >= 0");
  if (!(curvature_scale >= 0.0) || !std::isfinite(curvature_scale)) {
    throw ValidationError("curvature_scale must be >= 0");
  }
}

double track_curvature(double momentum, int charge, double curvature_scale) {
  return static_cast<double>(charge) * curvature_scale / momentum;
}

std::pair<double, double> draw_track_shape(double curvature, Rng& rng) {
  // The arc spans the least wires when its vertex sits mid-chamber (slope = -5c).
  const double centre = -5.0 * curvature;
  std::uniform_real_distribution<double> slope_dist(std::min(0.0, centre) - kSlopeMargin,
                                                    std::max(0.0, centre) + kSlopeMargin);
  for (int attempt = 0; attempt < kShapeAttempts; ++attempt) {
    const double slope = slope_dist(rng);
    double lo = 0.0;
    double hi = 0.0;
    for (int k = 1; k < static_cast<int>(kSuperlayers); ++k) {
      const double s = slope * k + curvature * k * k;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    if (hi - lo <= kWireCount) {
      std::uniform_real_distribution<double> intercept_dist(-lo, kWireCount - hi);
      return {intercept_dist(rng), slope};
    }
  }
  throw GenerationError("no trajectory with curvature " + std::to_string(curvature) + " fits the chamber");
}

GeneratedTrack generate_track(const SimConfig& config, double momentum, int charge, double intercept, double slope,
                              Rng& rng) {
  if (!(momentum > 0.0)) throw ValidationError("momentum must be > 0");
  if (charge != 1 && charge != -1) throw ValidationError("charge must be +1 or -1");
  const double curvature = track_curvature(momentum, charge, config.curvature_scale);

  GeneratedTrack track;
  track.momentum = momentum;
  track.charge = charge;
  for (int attempt = 0; attempt < kMaxTrackAttempts; ++attempt) {
    if (attempt > 0) std::tie(intercept, slope) = draw_track_shape(curvature, rng);
    for (std::size_t k = 0; k < kSuperlayers; ++k) {
      const double kk = static_cast<double>(k);
      track.avg_wires[k] = intercept + slope * kk + curvature * kk * kk;
    }
    if (config.wire_noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, config.wire_noise_sigma);
      for (auto& w : track.avg_wires) w += noise(rng);
    }
    if (inside_chamber(track.avg_wires)) {
      track.intercept = intercept;
      track.slope = slope;
      return track;
    }
  }
  throw GenerationError("track with momentum " + std::to_string(momentum) + " left the chamber after " +
                        std::to_string(kMaxTrackAttempts) + " attempts");
}

Event generate_event(const SimConfig& config, EventId event_id) {
  Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(event_id));
  std::uniform_real_distribution<double> momentum_dist(config.p_min, config.p_max);

  std::vector<GeneratedTrack> tracks;
  tracks.reserve(static_cast<std::size_t>(config.tracks_per_event));
  for (int t = 0; t < config.tracks_per_event; ++t) {
    const double momentum = config.p_min == config.p_max ? config.p_min : momentum_dist(rng);
    const int charge = (rng() & 1U) ? 1 : -1;
    const auto [intercept, slope] =
        draw_track_shape(track_curvature(momentum, charge, config.curvature_scale), rng);
    tracks.push_back(generate_track(config, momentum, charge, intercept, slope, rng));
  }

  // Per super-layer: track clusters and noise in random order. owner < 0 marks noise.
  struct Entry {
    double wire;
    int owner;
  };
  std::uniform_real_distribution<double> wire_dist(0.0, kWireCount);
  SuperlayerClusters clusters;
  std::vector<TruthTrack> truth(tracks.size());
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
    std::vector<Entry> entries;
    for (std::size_t t = 0; t < tracks.size(); ++t) entries.push_back({tracks[t].avg_wires[sl], static_cast<int>(t)});
    if (config.noise_mean > 0.0) {
      std::poisson_distribution<int> multiplicity(config.noise_mean);
      const int n_noise = multiplicity(rng);
      for (int i = 0; i < n_noise; ++i) entries.push_back({wire_dist(rng), -1});
    }
    std::shuffle(entries.begin(), entries.end(), rng);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      clusters[sl].push_back(Cluster{static_cast<int>(sl) + 1, entries[i].wire});
      if (entries[i].owner >= 0) truth[static_cast<std::size_t>(entries[i].owner)].cluster_indices[sl] =
          static_cast<std::uint32_t>(i);
    }
  }
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    truth[t].momentum = tracks[t].momentum;
    truth[t].charge = tracks[t].charge;
  }
  return Event(event_id, std::move(clusters), std::move(truth));
}

std::vector<Event> generate_events(const SimConfig& config, unsigned threads) {
  config.validate();
  std::vector<Event> events(static_cast<std::size_t>(config.n_events));
  parallel_for(events.size(), threads, [&](std::size_t i) { events[i] = generate_event(config, static_cast<EventId>(i)); });
  return events;
}

SampleSetSummary generate_sample_set(const SimConfig& config, const std::filesystem::path& path, unsigned threads) {
  config.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  constexpr std::int64_t kChunk = 4096;
  SampleSetSummary summary;
  double candidate_sum = 0.0;
  for (std::int64_t begin = 0; begin < config.n_events; begin += kChunk) {
    const std::int64_t end = std::min(config.n_events, begin + kChunk);
    std::vector<Event> chunk(static_cast<std::size_t>(end - begin));
    parallel_for(chunk.size(), threads,
                 [&](std::size_t i) { chunk[i] = generate_event(config, begin + static_cast<EventId>(i)); });
    for (const auto& e : chunk) candidate_sum += static_cast<double>(e.candidate_count());
    write_events(out, chunk);
  }
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
  summary.events = config.n_events;
  summary.mean_candidates = config.n_events > 0 ? candidate_sum / static_cast<double>(config.n_events) : 0.0;
  return summary;
}

}  // namespace trackcull
