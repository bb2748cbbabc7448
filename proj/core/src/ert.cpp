#include "trackcull/ert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trackcull/error.hpp"
#include "trackcull/parallel.hpp"
#include "trackcull/random.hpp"

namespace trackcull {

void ErtHyperparams::validate() const {
  if (n_estimators < 1) throw ValidationError("n_estimators must be >= 1");
  if (features_per_split < 1 || features_per_split > kSuperlayers) {
    throw ValidationError("features_per_split must lie in 1..6");
  }
  if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
  if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1 when set");
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ModelCorruptError("decision tree without nodes");
  const auto n = static_cast<std::int64_t>(nodes_.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.samples() == 0) throw ModelCorruptError("tree node " + std::to_string(i) + " has no samples");
    if (node.is_leaf()) continue;
    if (node.feature >= static_cast<std::int32_t>(kSuperlayers)) {
      throw ModelCorruptError("tree node " + std::to_string(i) + " splits on feature " + std::to_string(node.feature));
    }
    // Children always follow their parent, which rules out cycles.
    for (const auto child : {node.left, node.right}) {
      if (child <= i || child >= n) {
        throw ModelCorruptError("tree node " + std::to_string(i) + " has invalid child " + std::to_string(child));
      }
      if (nodes_[static_cast<std::size_t>(child)].samples() >= node.samples()) {
        throw ModelCorruptError("tree node " + std::to_string(i) + " child does not shrink the sample count");
      }
    }
    if (!std::isfinite(node.threshold)) throw ModelCorruptError("tree node " + std::to_string(i) + " threshold");
  }
}

Probabilities DecisionTree::predict(const Features& features) const {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    node = &nodes_[static_cast<std::size_t>(features[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                ? node->left
                                                : node->right)];
  }
  const double total = static_cast<double>(node->samples());
  const double p_valid = static_cast<double>(node->n_valid) / total;
  return {1.0 - p_valid, p_valid};
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t max_depth = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    max_depth = std::max(max_depth, depth[i]);
    if (nodes_[i].is_leaf()) continue;
    depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
  }
  return max_depth;
}

std::size_t DecisionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

ErtModel::ErtModel(std::vector<DecisionTree> trees, ErtHyperparams hyperparams, ErtTrainingInfo info)
    : trees_(std::move(trees)), hyperparams_(std::move(hyperparams)), info_(info) {
  if (trees_.empty()) throw ModelCorruptError("ERT model without trees");
}

Probabilities ErtModel::predict(const Features& features) const {
  double p_valid = 0.0;
  for (const auto& tree : trees_) p_valid += tree.predict(features).p_valid;
  p_valid /= static_cast<double>(trees_.size());
  return {1.0 - p_valid, p_valid};
}

Probabilities ert_predict(const ErtModel& model, const Features& features) { return model.predict(features); }

namespace {

/// Column-major copy of the training rows.
struct TrainingColumns {
  std::array<std::vector<float>, kSuperlayers> x;
  std::vector<std::uint8_t> y;
  std::size_t rows = 0;
};

double entropy(std::uint32_t n0, std::uint32_t n1) {
  const double n = static_cast<double>(n0) + static_cast<double>(n1);
  double h = 0.0;
  for (const std::uint32_t c : {n0, n1}) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

DecisionTree grow_tree(const TrainingColumns& data, const ErtHyperparams& hp, Rng& rng) {
  struct Task {
    std::int32_t node;
    std::uint32_t begin;
    std::uint32_t end;
    std::size_t depth;
  };

  std::vector<std::uint32_t> idx(data.rows);
  std::iota(idx.begin(), idx.end(), 0U);

  std::vector<TreeNode> nodes;
  TreeNode root;
  for (const auto label : data.y) (label ? root.n_valid : root.n_invalid) += 1;
  nodes.push_back(root);

  std::vector<Task> stack{{0, 0, static_cast<std::uint32_t>(data.rows), 0}};
  std::array<std::size_t, kSuperlayers> all_features{};
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  std::vector<std::size_t> chosen;

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const TreeNode parent = nodes[static_cast<std::size_t>(task.node)];
    const std::uint32_t n = task.end - task.begin;

    if (parent.n_invalid == 0 || parent.n_valid == 0 || n < hp.min_samples_split ||
        (hp.max_depth && task.depth >= *hp.max_depth)) {
      continue;
    }

    chosen.assign(all_features.begin(), all_features.end());
    if (hp.features_per_split < kSuperlayers) {
      for (std::size_t i = 0; i < hp.features_per_split; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, kSuperlayers - 1);
        std::swap(chosen[i], chosen[pick(rng)]);
      }
      chosen.resize(hp.features_per_split);
      std::sort(chosen.begin(), chosen.end());
    }

    const double parent_entropy = entropy(parent.n_invalid, parent.n_valid);
    double best_gain = -std::numeric_limits<double>::infinity();
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::uint32_t best_left[2] = {0, 0};

    for (const std::size_t f : chosen) {
      const auto& col = data.x[f];
      float lo = col[idx[task.begin]];
      float hi = lo;
      for (std::uint32_t i = task.begin + 1; i < task.end; ++i) {
        const float v = col[idx[i]];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(lo < hi)) continue;

      std::uniform_real_distribution<double> draw(lo, hi);
      double threshold = draw(rng);
      if (!(threshold < static_cast<double>(hi))) threshold = lo;

      std::uint32_t left[2] = {0, 0};
      for (std::uint32_t i = task.begin; i < task.end; ++i) {
        const std::uint32_t r = idx[i];
        if (static_cast<double>(col[r]) <= threshold) ++left[data.y[r]];
      }
      const std::uint32_t right[2] = {parent.n_invalid - left[0], parent.n_valid - left[1]};
      const double n_left = static_cast<double>(left[0] + left[1]);
      const double n_right = static_cast<double>(right[0] + right[1]);
      const double gain = parent_entropy - (n_left * entropy(left[0], left[1]) +
                                            n_right * entropy(right[0], right[1])) / static_cast<double>(n);
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<std::int32_t>(f);
        best_threshold = threshold;
        best_left[0] = left[0];
        best_left[1] = left[1];
      }
    }
    if (best_feature < 0) continue;  // all features constant

    const auto& col = data.x[static_cast<std::size_t>(best_feature)];
    const auto mid = std::partition(idx.begin() + task.begin, idx.begin() + task.end,
                                    [&](std::uint32_t r) { return static_cast<double>(col[r]) <= best_threshold; });
    const auto split = static_cast<std::uint32_t>(mid - idx.begin());

    TreeNode left_node;
    left_node.n_invalid = best_left[0];
    left_node.n_valid = best_left[1];
    TreeNode right_node;
    right_node.n_invalid = parent.n_invalid - best_left[0];
    right_node.n_valid = parent.n_valid - best_left[1];

    const auto left_index = static_cast<std::int32_t>(nodes.size());
    nodes.push_back(left_node);
    const auto right_index = static_cast<std::int32_t>(nodes.size());
    nodes.push_back(right_node);

    auto& node = nodes[static_cast<std::size_t>(task.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_index;
    node.right = right_index;

    stack.push_back({right_index, split, task.end, task.depth + 1});
    stack.push_back({left_index, task.begin, split, task.depth + 1});
  }
  nodes.shrink_to_fit();
  return DecisionTree(std::move(nodes));
}

}  // namespace

ErtModel ert_train(const Dataset& train, const ErtHyperparams& hp, unsigned threads) {
  hp.validate();
  if (train.empty()) throw ValidationError("cannot train on an empty dataset");

  TrainingColumns data;
  data.rows = train.rows.size();
  for (auto& col : data.x) col.resize(data.rows);
  data.y.resize(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) {
    for (std::size_t f = 0; f < kSuperlayers; ++f) data.x[f][r] = train.rows[r].features[f];
    data.y[r] = static_cast<std::uint8_t>(train.rows[r].label);
  }

  std::vector<DecisionTree> trees(hp.n_estimators);
  parallel_for(trees.size(), threads, [&](std::size_t t) {
    Rng rng = make_rng(hp.seed, t);
    trees[t] = grow_tree(data, hp, rng);
  });

  ErtTrainingInfo info;
  info.training_rows = data.rows;
  for (const auto& tree : trees) info.total_nodes += tree.nodes().size();

  // Same summation order as ErtModel::predict.
  std::vector<std::uint8_t> correct(data.rows, 0);
  parallel_for(data.rows, threads, [&](std::size_t r) {
    const Features f = train.rows[r].as_features();
    double p_valid = 0.0;
    for (const auto& tree : trees) p_valid += tree.predict(f).p_valid;
    p_valid /= static_cast<double>(trees.size());
    correct[r] = (p_valid >= 0.5 ? 1 : 0) == train.rows[r].label ? 1 : 0;
  });
  info.training_accuracy = static_cast<double>(std::accumulate(correct.begin(), correct.end(), std::size_t{0})) /
                           static_cast<double>(data.rows);
  return ErtModel(std::move(trees), hp, info);
}

}  // namespace trackcull
