#pragma once

// Independent reference computations and random generators shared by the
// unit and acceptance tests. Nothing here calls into the library's own
// implementations of the quantity being checked.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <trackcull/trackcull.hpp>

namespace oracle {

using trackcull::ClusterIndices;
using trackcull::Features;

inline std::size_t count_combinations(const trackcull::Event& event) {
  // Count by explicit enumeration rather than by multiplying list sizes.
  std::size_t count = 0;
  std::array<std::size_t, 6> sizes{};
  for (int sl = 1; sl <= 6; ++sl) sizes[sl - 1] = event.clusters(sl).size();
  for (std::size_t a = 0; a < sizes[0]; ++a)
    for (std::size_t b = 0; b < sizes[1]; ++b)
      for (std::size_t c = 0; c < sizes[2]; ++c)
        for (std::size_t d = 0; d < sizes[3]; ++d)
          for (std::size_t e = 0; e < sizes[4]; ++e)
            for (std::size_t f = 0; f < sizes[5]; ++f) ++count;
  return count;
}

inline double l1(const Features& a, const Features& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += std::fabs(a[k] - b[k]);
  return sum;
}

inline bool index_less(const ClusterIndices& a, const ClusterIndices& b) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] != b[k]) return a[k] < b[k];
  }
  return false;
}

/// Brute-force argmin (closest = true) or argmax of the L1 distance to the
/// true candidate over all other candidates, ties to the smallest indices.
inline std::size_t extreme_negative(const std::vector<trackcull::TrackCandidate>& candidates,
                                    const ClusterIndices& truth, bool closest) {
  std::size_t truth_pos = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].source_indices == truth) truth_pos = i;
  }
  std::size_t best = candidates.size();
  double best_d = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == truth_pos || candidates[i].features == candidates[truth_pos].features) continue;
    const double d = l1(candidates[i].features, candidates[truth_pos].features);
    const bool better = best == candidates.size() || (closest ? d < best_d : d > best_d) ||
                        (d == best_d && index_less(candidates[i].source_indices, candidates[best].source_indices));
    if (better) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

/// Quadratic least squares over k = 0..5 through the normal equations,
/// solved by Gaussian elimination with partial pivoting in long double.
inline std::array<double, 3> lsq_quadratic(const std::array<double, 6>& wires) {
  long double m[3][4] = {};
  for (int k = 0; k < 6; ++k) {
    const long double row[3] = {1.0L, static_cast<long double>(k), static_cast<long double>(k) * k};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
      m[i][3] += row[i] * wires[static_cast<std::size_t>(k)];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    for (int j = 0; j < 4; ++j) std::swap(m[col][j], m[pivot][j]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const long double f = m[r][col] / m[col][col];
      for (int j = col; j < 4; ++j) m[r][j] -= f * m[col][j];
    }
  }
  return {static_cast<double>(m[0][3] / m[0][0]), static_cast<double>(m[1][3] / m[1][1]),
          static_cast<double>(m[2][3] / m[2][2])};
}

inline double lsq_mean_squared_residual(const std::array<double, 6>& wires) {
  const auto c = lsq_quadratic(wires);
  double sum = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double r = wires[static_cast<std::size_t>(k)] - (c[0] + c[1] * k + c[2] * k * k);
    sum += r * r;
  }
  return sum / 6.0;
}

/// Event with `counts[sl]` uniform clusters per super-layer and, if
/// requested, a truth track on a random index of each list.
inline trackcull::Event random_event(std::mt19937_64& rng, const std::array<std::size_t, 6>& counts,
                                     bool with_truth, trackcull::EventId id = 0) {
  std::uniform_real_distribution<double> wire(0.0, 112.0);
  trackcull::SuperlayerClusters clusters;
  trackcull::TruthTrack truth;
  for (std::size_t sl = 0; sl < 6; ++sl) {
    for (std::size_t i = 0; i < counts[sl]; ++i) clusters[sl].push_back({static_cast<int>(sl) + 1, wire(rng)});
    if (counts[sl] > 0) {
      truth.cluster_indices[sl] =
          static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, counts[sl] - 1)(rng));
    }
  }
  truth.momentum = 1.0 + std::uniform_real_distribution<double>(0.0, 9.0)(rng);
  std::vector<trackcull::TruthTrack> tracks;
  if (with_truth) tracks.push_back(truth);
  return trackcull::Event(id, std::move(clusters), std::move(tracks));
}

inline std::array<std::size_t, 6> random_counts(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> dist(lo, hi);
  std::array<std::size_t, 6> counts{};
  for (auto& c : counts) c = dist(rng);
  return counts;
}

inline Features random_features(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Features f{};
  for (auto& v : f) v = u(rng);
  return f;
}

/// Forward pass and mean cross-entropy written without the library's MLP code.
inline double mlp_loss(const std::vector<trackcull::DenseLayer>& layers, const std::vector<Features>& inputs,
                       const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t n = 0; n < inputs.size(); ++n) {
    std::vector<double> a(inputs[n].begin(), inputs[n].end());
    for (const auto& layer : layers) {
      std::vector<double> z(layer.outputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        z[o] = layer.bias[o];
        for (std::size_t i = 0; i < layer.inputs; ++i) z[o] += a[i] * layer.weights[i * layer.outputs + o];
      }
      if (layer.activation == trackcull::Activation::Relu) {
        for (auto& v : z) v = std::max(0.0, v);
      }
      a = std::move(z);
    }
    const double m = std::max(a[0], a[1]);
    const double lse = m + std::log(std::exp(a[0] - m) + std::exp(a[1] - m));
    total += lse - a[static_cast<std::size_t>(labels[n])];
  }
  return total / static_cast<double>(inputs.size());
}

/// Largest relative error |analytic - numeric| / max(1, |analytic|) over every
/// parameter, using central differences with step h.
inline double max_gradient_error(const trackcull::MlpModel& model, const std::vector<Features>& inputs,
                                 const std::vector<int>& labels, double h) {
  const auto g = trackcull::mlp_gradient(model, inputs, labels);
  auto layers = model.layers();
  double worst = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t nw = layers[l].weights.size();
    for (std::size_t p = 0; p < nw + layers[l].bias.size(); ++p) {
      double& param = p < nw ? layers[l].weights[p] : layers[l].bias[p - nw];
      const double analytic = p < nw ? g.weights[l][p] : g.bias[l][p - nw];
      const double saved = param;
      param = saved + h;
      const double up = mlp_loss(layers, inputs, labels);
      param = saved - h;
      const double down = mlp_loss(layers, inputs, labels);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
    }
  }
  return worst;
}

/// Model with Glorot weights and small random biases so every parameter matters.
inline trackcull::MlpModel random_mlp(const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  auto layers = trackcull::MlpModel::initialized(hidden, seed).layers();
  std::mt19937_64 rng(seed + 1000);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : layers) {
    for (auto& b : l.bias) b = u(rng);
  }
  return trackcull::MlpModel(layers);
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("trackcull_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
