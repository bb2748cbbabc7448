#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "trackcull/geometry.hpp"

namespace trackcull {

using EventId = std::int64_t;

/// Position of one cluster inside each super-layer's list.
using ClusterIndices = std::array<std::uint32_t, kSuperlayers>;

struct Cluster {
  int superlayer = 1;  ///< 1..6
  double avg_wire = 0.0;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

/// Throws ValidationError unless 1 <= superlayer <= 6 and 0 <= avg_wire <= 112.
void validate(const Cluster& cluster);

struct TruthTrack {
  ClusterIndices cluster_indices{};
  double momentum = 1.0;  ///< GeV, > 0
  int charge = 1;         ///< -1 or +1

  friend bool operator==(const TruthTrack&, const TruthTrack&) = default;
};

using SuperlayerClusters = std::array<std::vector<Cluster>, kSuperlayers>;

/// Clusters of one sector grouped by super-layer, plus simulation truth.
/// Immutable once built; the constructor checks every invariant.
class Event {
 public:
  Event() = default;
  Event(EventId id, SuperlayerClusters clusters, std::vector<TruthTrack> truth = {});

  EventId id() const noexcept { return id_; }
  const SuperlayerClusters& clusters() const noexcept { return clusters_; }
  const std::vector<Cluster>& clusters(int superlayer) const { return clusters_.at(superlayer - 1); }
  const std::vector<TruthTrack>& truth() const noexcept { return truth_; }

  std::array<std::size_t, kSuperlayers> cluster_counts() const noexcept;
  std::size_t total_clusters() const noexcept;
  /// Product of per-super-layer counts; 0 when any super-layer is empty.
  std::size_t candidate_count() const noexcept;
  bool complete() const noexcept;

  friend bool operator==(const Event&, const Event&) = default;

 private:
  EventId id_ = 0;
  SuperlayerClusters clusters_{};
  std::vector<TruthTrack> truth_{};
};

}  // namespace trackcull
