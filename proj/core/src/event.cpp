#include "trackcull/event.hpp"

#include <string>

#include "trackcull/error.hpp"

namespace trackcull {

void validate(const Cluster& cluster) {
  if (cluster.superlayer < 1 || cluster.superlayer > Geometry::n_superlayers) {
    throw ValidationError("super-layer " + std::to_string(cluster.superlayer) + " outside 1..6");
  }
  if (!(cluster.avg_wire >= 0.0 && cluster.avg_wire <= kWireCount)) {
    throw ValidationError("average wire " + std::to_string(cluster.avg_wire) + " outside [0, 112]");
  }
}

Event::Event(EventId id, SuperlayerClusters clusters, std::vector<TruthTrack> truth)
    : id_(id), clusters_(std::move(clusters)), truth_(std::move(truth)) {
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
    for (const auto& cluster : clusters_[sl]) {
      validate(cluster);
      if (cluster.superlayer != static_cast<int>(sl) + 1) {
        throw ValidationError("event " + std::to_string(id_) + ": cluster of super-layer " +
                              std::to_string(cluster.superlayer) + " stored under super-layer " +
                              std::to_string(sl + 1));
      }
    }
  }
  for (const auto& track : truth_) {
    if (!(track.momentum > 0.0)) {
      throw ValidationError("event " + std::to_string(id_) + ": truth momentum must be positive");
    }
    if (track.charge != 1 && track.charge != -1) {
      throw ValidationError("event " + std::to_string(id_) + ": truth charge must be +1 or -1");
    }
    for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
      if (track.cluster_indices[sl] >= clusters_[sl].size()) {
        throw ValidationError("event " + std::to_string(id_) + ": truth index " +
                              std::to_string(track.cluster_indices[sl]) + " out of range in super-layer " +
                              std::to_string(sl + 1));
      }
    }
  }
}

std::array<std::size_t, kSuperlayers> Event::cluster_counts() const noexcept {
  std::array<std::size_t, kSuperlayers> counts{};
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) counts[sl] = clusters_[sl].size();
  return counts;
}

std::size_t Event::total_clusters() const noexcept {
  std::size_t total = 0;
  for (const auto& list : clusters_) total += list.size();
  return total;
}

std::size_t Event::candidate_count() const noexcept {
  std::size_t product = 1;
  for (const auto& list : clusters_) product *= list.size();
  return product;
}

bool Event::complete() const noexcept {
  for (const auto& list : clusters_) {
    if (list.empty()) return false;
  }
  return true;
}

}  // namespace trackcull
