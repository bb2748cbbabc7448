#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "trackcull/classifier.hpp"
#include "trackcull/dataset.hpp"

namespace trackcull {

enum class Activation { Relu, Softmax };

std::string_view to_string(Activation activation) noexcept;

/// Fully connected layer. Weights are stored input-major:
/// weights[i * outputs + o] connects input i to output o.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Relu;

  double weight(std::size_t input, std::size_t output) const { return weights[input * outputs + output]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpHyperparams {
  std::vector<std::size_t> hidden_layers{64, 64, 64};
  std::size_t batch_size = 32;
  double initial_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_epochs = 200;
  std::size_t lr_patience = 2;
  double lr_factor = 0.2;
  double min_lr = 1e-6;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const MlpHyperparams&, const MlpHyperparams&) = default;
};

struct MlpTrainingInfo {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  double final_lr = 0.0;
  double training_accuracy = 0.0;
  std::vector<double> loss_history;  ///< mean cross-entropy per epoch

  friend bool operator==(const MlpTrainingInfo&, const MlpTrainingInfo&) = default;
};

/// 6 -> hidden... -> 2 perceptron with ReLU hidden layers and a softmax output.
class MlpModel final : public Classifier {
 public:
  MlpModel() = default;
  /// Throws ModelCorruptError unless the layer shapes chain from 6 inputs to 2 outputs.
  explicit MlpModel(std::vector<DenseLayer> layers, MlpHyperparams hyperparams = {},
                    MlpTrainingInfo info = {});

  /// Glorot-uniform weights, zero biases. `widths` lists the hidden layers only.
  static MlpModel initialized(const std::vector<std::size_t>& hidden_widths, std::uint64_t seed);

  Probabilities predict(const Features& features) const override;
  std::string_view kind() const noexcept override { return "mlp"; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const MlpHyperparams& hyperparams() const noexcept { return hyperparams_; }
  const MlpTrainingInfo& training_info() const noexcept { return info_; }
  std::size_t parameter_count() const noexcept;

  friend bool operator==(const MlpModel& x, const MlpModel& y) {
    return x.layers_ == y.layers_ && x.hyperparams_ == y.hyperparams_ && x.info_ == y.info_;
  }

 private:
  std::vector<DenseLayer> layers_;
  MlpHyperparams hyperparams_;
  MlpTrainingInfo info_;
};

/// Forward pass. Throws ModelCorruptError if `features` does not have 6 entries.
Probabilities mlp_forward(const MlpModel& model, std::span<const double> features);

/// d(mean cross-entropy)/d(parameter), laid out like the model's layers.
struct MlpGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
  double loss = 0.0;
};

/// Backpropagation over a batch. Labels are 0 (invalid) or 1 (valid).
MlpGradients mlp_gradient(const MlpModel& model, std::span<const Features> inputs, std::span<const int> labels);

/// Mean cross-entropy of the model on a batch.
double mlp_loss(const MlpModel& model, std::span<const Features> inputs, std::span<const int> labels);

struct EpochStats {
  std::size_t epoch = 0;  ///< 1-based
  double loss = 0.0;
  double lr = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on mean cross-entropy. The learning rate is multiplied by
/// lr_factor after lr_patience consecutive epochs without a new best loss;
/// training ends at max_epochs or once the rate drops below min_lr.
/// Throws TrainingError on a non-finite loss.
MlpModel mlp_train(std::span<const Features> inputs, std::span<const int> labels, const MlpHyperparams& hp,
                   const EpochCallback& on_epoch = {});
MlpModel mlp_train(const Dataset& train, const MlpHyperparams& hp, const EpochCallback& on_epoch = {});

}  // namespace trackcull
