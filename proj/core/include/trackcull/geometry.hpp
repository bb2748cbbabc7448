#pragma once

#include <array>
#include <cstddef>

namespace trackcull {

/// Drift-chamber sector layout. Only one sector is modeled.
struct Geometry {
  static constexpr int n_superlayers = 6;
  static constexpr int wires_per_layer = 112;
  static constexpr int n_regions = 3;
  static constexpr int layers_per_superlayer = 6;
};

inline constexpr std::size_t kSuperlayers = Geometry::n_superlayers;
inline constexpr double kWireCount = Geometry::wires_per_layer;

/// One normalized average wire per super-layer, ordered by super-layer.
using Features = std::array<double, kSuperlayers>;

/// Maps an average wire number in [0, 112] to [0, 1]. Throws ValidationError
/// for values outside the chamber.
double normalize_wire(double avg_wire);

}  // namespace trackcull
