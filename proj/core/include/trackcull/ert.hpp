#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trackcull/classifier.hpp"
#include "trackcull/dataset.hpp"

namespace trackcull {

struct ErtHyperparams {
  std::size_t n_estimators = 300;
  std::size_t features_per_split = kSuperlayers;
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> max_depth;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const ErtHyperparams&, const ErtHyperparams&) = default;
};

/// Internal nodes send x[feature] <= threshold left. Leaves have feature == -1.
/// Every node keeps the class counts of the training rows that reached it.
struct TreeNode {
  double threshold = 0.0;
  std::int32_t feature = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t n_invalid = 0;
  std::uint32_t n_valid = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  std::uint32_t samples() const noexcept { return n_invalid + n_valid; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  /// Node 0 is the root. Throws ModelCorruptError on dangling or cyclic links.
  explicit DecisionTree(std::vector<TreeNode> nodes);

  Probabilities predict(const Features& features) const;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const noexcept;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct ErtTrainingInfo {
  double training_accuracy = 0.0;
  std::size_t total_nodes = 0;
  std::size_t training_rows = 0;

  friend bool operator==(const ErtTrainingInfo&, const ErtTrainingInfo&) = default;
};

/// Extremely randomized trees with entropy splits and no bootstrap.
class ErtModel final : public Classifier {
 public:
  ErtModel() = default;
  ErtModel(std::vector<DecisionTree> trees, ErtHyperparams hyperparams = {}, ErtTrainingInfo info = {});

  /// Unweighted mean of per-tree leaf class frequencies.
  Probabilities predict(const Features& features) const override;
  std::string_view kind() const noexcept override { return "ert"; }

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ErtHyperparams& hyperparams() const noexcept { return hyperparams_; }
  const ErtTrainingInfo& training_info() const noexcept { return info_; }

  friend bool operator==(const ErtModel& x, const ErtModel& y) {
    return x.trees_ == y.trees_ && x.hyperparams_ == y.hyperparams_ && x.info_ == y.info_;
  }

 private:
  std::vector<DecisionTree> trees_;
  ErtHyperparams hyperparams_;
  ErtTrainingInfo info_;
};

/// Builds one tree per estimator on the full training set; each tree draws
/// from derive_seed(hp.seed, tree index), so results do not depend on `threads`.
ErtModel ert_train(const Dataset& train, const ErtHyperparams& hp, unsigned threads = 0);

Probabilities ert_predict(const ErtModel& model, const Features& features);

}  // namespace trackcull
