#include "trackcull/candidate.hpp"

#include <algorithm>
#include <cmath>

#include "trackcull/error.hpp"

namespace trackcull {

std::vector<TrackCandidate> generate_candidates(const Event& event) {
  const auto counts = event.cluster_counts();
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
    if (counts[sl] == 0) throw IncompleteEventError(event.id(), static_cast<int>(sl) + 1);
  }
  const bool labeled = !event.truth().empty();

  std::vector<TrackCandidate> out;
  out.reserve(event.candidate_count());

  // Odometer over the six index digits; the last super-layer varies fastest.
  ClusterIndices idx{};
  while (true) {
    TrackCandidate candidate;
    candidate.source_indices = idx;
    for (std::size_t sl = 0; sl < kSuperlayers; ++sl) {
      candidate.features[sl] = event.clusters()[sl][idx[sl]].avg_wire / kWireCount;
    }
    if (labeled) {
      candidate.is_true = std::any_of(event.truth().begin(), event.truth().end(),
                                      [&](const TruthTrack& t) { return t.cluster_indices == idx; });
    }
    out.push_back(candidate);

    std::size_t digit = kSuperlayers;
    while (digit > 0) {
      --digit;
      if (++idx[digit] < counts[digit]) break;
      idx[digit] = 0;
      if (digit == 0) return out;
    }
  }
}

std::array<double, kSuperlayers> candidate_wires(const Event& event, const ClusterIndices& indices) {
  std::array<double, kSuperlayers> wires{};
  for (std::size_t sl = 0; sl < kSuperlayers; ++sl) wires[sl] = event.clusters()[sl].at(indices[sl]).avg_wire;
  return wires;
}

double candidate_distance(const Features& a, const Features& b) noexcept {
  double sum = 0.0;
  for (std::size_t k = 0; k < kSuperlayers; ++k) sum += std::abs(a[k] - b[k]);
  return sum;
}

bool lexicographically_before(const ClusterIndices& a, const ClusterIndices& b) noexcept {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace trackcull
