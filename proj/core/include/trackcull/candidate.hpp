#pragma once

#include <optional>
#include <vector>

#include "trackcull/event.hpp"
#include "trackcull/geometry.hpp"

namespace trackcull {

struct TrackCandidate {
  Features features{};
  ClusterIndices source_indices{};
  /// Set when the event carries truth: true iff source_indices match a truth track.
  std::optional<bool> is_true;
};

/// Every combination of one cluster per super-layer, in lexicographic order of
/// source indices. Throws IncompleteEventError naming the first empty super-layer.
std::vector<TrackCandidate> generate_candidates(const Event& event);

/// Average wires of the clusters selected by `indices`, in wire units.
std::array<double, kSuperlayers> candidate_wires(const Event& event, const ClusterIndices& indices);

/// L1 distance in normalized feature space.
double candidate_distance(const Features& a, const Features& b) noexcept;

/// Lexicographic comparison of source indices.
bool lexicographically_before(const ClusterIndices& a, const ClusterIndices& b) noexcept;

}  // namespace trackcull
