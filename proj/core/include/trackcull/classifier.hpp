#pragma once

#include <array>
#include <string_view>

#include "trackcull/geometry.hpp"

namespace trackcull {

/// (p_invalid, p_valid); the two entries sum to 1.
struct Probabilities {
  double p_invalid = 0.5;
  double p_valid = 0.5;
};

/// Binary track-candidate classifier. Implementations are immutable after
/// training or loading, so predict() may be called concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual Probabilities predict(const Features& features) const = 0;
  virtual std::string_view kind() const noexcept = 0;
};

}  // namespace trackcull
