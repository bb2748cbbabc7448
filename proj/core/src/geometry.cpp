#include "trackcull/geometry.hpp"

#include <cmath>
#include <string>

#include "trackcull/error.hpp"

namespace trackcull {

double normalize_wire(double avg_wire) {
  if (!(avg_wire >= 0.0 && avg_wire <= kWireCount)) {
    throw ValidationError("average wire " + std::to_string(avg_wire) + " outside [0, 112]");
  }
  return avg_wire / kWireCount;
}

}  // namespace trackcull
