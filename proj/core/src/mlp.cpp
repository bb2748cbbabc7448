#include "trackcull/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "trackcull/error.hpp"
#include "trackcull/random.hpp"

namespace trackcull {

std::string_view to_string(Activation activation) noexcept {
  return activation == Activation::Relu ? "relu" : "softmax";
}

void MlpHyperparams::validate() const {
  for (const auto w : hidden_layers) {
    if (w < 1) throw ValidationError("hidden layer widths must be >= 1");
  }
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(initial_lr > 0.0)) throw ValidationError("initial learning rate must be > 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ValidationError("lr factor must lie in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("Adam epsilon must be > 0");
  if (lr_patience < 1) throw ValidationError("lr patience must be >= 1");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, MlpHyperparams hyperparams, MlpTrainingInfo info)
    : layers_(std::move(layers)), hyperparams_(std::move(hyperparams)), info_(std::move(info)) {
  if (layers_.empty()) throw ModelCorruptError("MLP has no layers");
  std::size_t width = kSuperlayers;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.inputs != width) {
      throw ModelCorruptError("layer " + std::to_string(l) + " expects " + std::to_string(layer.inputs) +
                              " inputs but receives " + std::to_string(width));
    }
    if (layer.outputs == 0 || layer.weights.size() != layer.inputs * layer.outputs ||
        layer.bias.size() != layer.outputs) {
      throw ModelCorruptError("layer " + std::to_string(l) + " has inconsistent parameter shapes");
    }
    const bool last = l + 1 == layers_.size();
    if (layer.activation != (last ? Activation::Softmax : Activation::Relu)) {
      throw ModelCorruptError("layer " + std::to_string(l) + " has unexpected activation");
    }
    width = layer.outputs;
  }
  if (width != 2) throw ModelCorruptError("MLP output layer must have 2 units");
}

MlpModel MlpModel::initialized(const std::vector<std::size_t>& hidden_widths, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  std::vector<DenseLayer> layers;
  std::size_t fan_in = kSuperlayers;
  for (std::size_t l = 0; l <= hidden_widths.size(); ++l) {
    const bool last = l == hidden_widths.size();
    DenseLayer layer;
    layer.inputs = fan_in;
    layer.outputs = last ? 2 : hidden_widths[l];
    layer.activation = last ? Activation::Softmax : Activation::Relu;
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = dist(rng);
    layer.bias.assign(layer.outputs, 0.0);
    fan_in = layer.outputs;
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

std::size_t MlpModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

namespace {

// out[o] = bias[o] + sum_i in[i] * W[i][o]; zero inputs (ReLU) are skipped.
void affine(const DenseLayer& layer, const double* in, double* out) {
  const std::size_t n_out = layer.outputs;
  std::copy(layer.bias.begin(), layer.bias.end(), out);
  for (std::size_t i = 0; i < layer.inputs; ++i) {
    const double xi = in[i];
    if (xi == 0.0) continue;
    const double* w = layer.weights.data() + i * n_out;
    for (std::size_t o = 0; o < n_out; ++o) out[o] += xi * w[o];
  }
}

void relu(double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

Probabilities softmax2(double z0, double z1) {
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m);
  const double e1 = std::exp(z1 - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

// -log softmax(z)[label]
double cross_entropy(double z0, double z1, int label) {
  const double m = std::max(z0, z1);
  const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
  return lse - (label == 1 ? z1 : z0);
}

Probabilities forward_one(const std::vector<DenseLayer>& layers, const double* x) {
  thread_local std::vector<double> a;
  thread_local std::vector<double> b;
  a.assign(x, x + kSuperlayers);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    b.resize(layers[l].outputs);
    affine(layers[l], a.data(), b.data());
    if (l + 1 < layers.size()) relu(b.data(), b.size());
    std::swap(a, b);
  }
  return softmax2(a[0], a[1]);
}

/// Scratch buffers for batched forward/backward passes.
struct Workspace {
  std::vector<std::vector<double>> act;  // act[0] inputs, act[l+1] output of layer l (logits for the last)
  std::vector<std::vector<double>> delta;
  std::vector<std::vector<double>> grad_w;
  std::vector<std::vector<double>> grad_b;

  explicit Workspace(const std::vector<DenseLayer>& layers) {
    act.resize(layers.size() + 1);
    delta.resize(layers.size() + 1);
    for (const auto& layer : layers) {
      grad_w.emplace_back(layer.weights.size(), 0.0);
      grad_b.emplace_back(layer.bias.size(), 0.0);
    }
  }
};

/// Mean cross-entropy over the batch; fills ws.grad_* with its gradient.
double forward_backward(const std::vector<DenseLayer>& layers, std::span<const Features> x, std::span<const int> y,
                        Workspace& ws, bool with_gradient) {
  const std::size_t batch = x.size();
  const std::size_t n_layers = layers.size();

  ws.act[0].resize(batch * kSuperlayers);
  for (std::size_t r = 0; r < batch; ++r) std::copy(x[r].begin(), x[r].end(), ws.act[0].begin() + r * kSuperlayers);

  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = layers[l];
    auto& out = ws.act[l + 1];
    out.resize(batch * layer.outputs);
    for (std::size_t r = 0; r < batch; ++r) {
      affine(layer, ws.act[l].data() + r * layer.inputs, out.data() + r * layer.outputs);
    }
    if (l + 1 < n_layers) relu(out.data(), out.size());
  }

  const auto& logits = ws.act[n_layers];
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) loss += cross_entropy(logits[2 * r], logits[2 * r + 1], y[r]);
  loss /= static_cast<double>(batch);
  if (!with_gradient) return loss;

  // d loss / d logits = (softmax - onehot) / batch
  auto& d_out = ws.delta[n_layers];
  d_out.resize(batch * 2);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    const auto p = softmax2(logits[2 * r], logits[2 * r + 1]);
    d_out[2 * r] = (p.p_invalid - (y[r] == 0 ? 1.0 : 0.0)) * inv_batch;
    d_out[2 * r + 1] = (p.p_valid - (y[r] == 1 ? 1.0 : 0.0)) * inv_batch;
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = layers[l];
    const std::size_t n_in = layer.inputs;
    const std::size_t n_out = layer.outputs;
    const auto& in = ws.act[l];
    const auto& d = ws.delta[l + 1];
    auto& gw = ws.grad_w[l];
    auto& gb = ws.grad_b[l];
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);

    for (std::size_t r = 0; r < batch; ++r) {
      const double* dr = d.data() + r * n_out;
      for (std::size_t o = 0; o < n_out; ++o) gb[o] += dr[o];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double xi = in[r * n_in + i];
        if (xi == 0.0) continue;
        double* g = gw.data() + i * n_out;
        for (std::size_t o = 0; o < n_out; ++o) g[o] += xi * dr[o];
      }
    }

    if (l == 0) break;
    // Propagate through W and the ReLU of the previous layer.
    auto& d_in = ws.delta[l];
    d_in.resize(batch * n_in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dr = d.data() + r * n_out;
      for (std::size_t i = 0; i < n_in; ++i) {
        if (in[r * n_in + i] <= 0.0) {
          d_in[r * n_in + i] = 0.0;
          continue;
        }
        const double* w = layer.weights.data() + i * n_out;
        double s = 0.0;
        for (std::size_t o = 0; o < n_out; ++o) s += w[o] * dr[o];
        d_in[r * n_in + i] = s;
      }
    }
  }
  return loss;
}

void check_batch(std::span<const Features> inputs, std::span<const int> labels) {
  if (inputs.empty()) throw ValidationError("empty batch");
  if (inputs.size() != labels.size()) throw ValidationError("inputs and labels differ in length");
  for (const int y : labels) {
    if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
  }
}

}  // namespace

Probabilities MlpModel::predict(const Features& features) const { return forward_one(layers_, features.data()); }

Probabilities mlp_forward(const MlpModel& model, std::span<const double> features) {
  if (features.size() != kSuperlayers) {
    throw ModelCorruptError("MLP input has " + std::to_string(features.size()) + " features, expected 6");
  }
  return forward_one(model.layers(), features.data());
}

MlpGradients mlp_gradient(const MlpModel& model, std::span<const Features> inputs, std::span<const int> labels) {
  check_batch(inputs, labels);
  Workspace ws(model.layers());
  MlpGradients g;
  g.loss = forward_backward(model.layers(), inputs, labels, ws, true);
  g.weights = std::move(ws.grad_w);
  g.bias = std::move(ws.grad_b);
  return g;
}

double mlp_loss(const MlpModel& model, std::span<const Features> inputs, std::span<const int> labels) {
  check_batch(inputs, labels);
  Workspace ws(model.layers());
  return forward_backward(model.layers(), inputs, labels, ws, false);
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
  std::size_t step = 0;

  explicit AdamState(const std::vector<DenseLayer>& layers) {
    for (const auto& layer : layers) {
      m_w.emplace_back(layer.weights.size(), 0.0);
      v_w.emplace_back(layer.weights.size(), 0.0);
      m_b.emplace_back(layer.bias.size(), 0.0);
      v_b.emplace_back(layer.bias.size(), 0.0);
    }
  }
};

void adam_update(std::vector<double>& param, const std::vector<double>& grad, std::vector<double>& m,
                 std::vector<double>& v, double lr_t, const MlpHyperparams& hp) {
  const double b1 = hp.adam_beta1;
  const double b2 = hp.adam_beta2;
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
    param[i] -= lr_t * m[i] / (std::sqrt(v[i]) + hp.adam_eps);
  }
}

}  // namespace

MlpModel mlp_train(std::span<const Features> inputs, std::span<const int> labels, const MlpHyperparams& hp,
                   const EpochCallback& on_epoch) {
  hp.validate();
  check_batch(inputs, labels);

  std::vector<DenseLayer> layers = MlpModel::initialized(hp.hidden_layers, hp.seed).layers();
  Workspace ws(layers);
  AdamState adam(layers);
  Rng shuffle_rng = make_rng(hp.seed, 1);

  const std::size_t n = inputs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Features> batch_x;
  std::vector<int> batch_y;
  batch_x.reserve(hp.batch_size);
  batch_y.reserve(hp.batch_size);

  MlpTrainingInfo info;
  double lr = hp.initial_lr;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += hp.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, begin + hp.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = begin; i < end; ++i) {
        batch_x.push_back(inputs[order[i]]);
        batch_y.push_back(labels[order[i]]);
      }
      const double loss = forward_backward(layers, batch_x, batch_y, ws, true);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_index << ", lr " << lr;
        throw TrainingError(msg.str());
      }
      loss_sum += loss * static_cast<double>(end - begin);

      ++adam.step;
      const double t = static_cast<double>(adam.step);
      const double lr_t =
          lr * std::sqrt(1.0 - std::pow(hp.adam_beta2, t)) / (1.0 - std::pow(hp.adam_beta1, t));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        adam_update(layers[l].weights, ws.grad_w[l], adam.m_w[l], adam.v_w[l], lr_t, hp);
        adam_update(layers[l].bias, ws.grad_b[l], adam.m_b[l], adam.v_b[l], lr_t, hp);
      }
    }

    const double epoch_loss = loss_sum / static_cast<double>(n);
    info.loss_history.push_back(epoch_loss);
    info.epochs_run = epoch;
    if (on_epoch) on_epoch(EpochStats{epoch, epoch_loss, lr});

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      stale_epochs = 0;
    } else if (++stale_epochs >= hp.lr_patience) {
      lr *= hp.lr_factor;
      stale_epochs = 0;
    }
    if (lr < hp.min_lr) break;
  }

  info.final_loss = info.loss_history.empty() ? 0.0 : info.loss_history.back();
  info.final_lr = lr;
  MlpModel trained(std::move(layers), hp, info);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int predicted = trained.predict(inputs[i]).p_valid >= 0.5 ? 1 : 0;
    correct += predicted == labels[i] ? 1 : 0;
  }
  info.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return MlpModel(trained.layers(), hp, info);
}

MlpModel mlp_train(const Dataset& train, const MlpHyperparams& hp, const EpochCallback& on_epoch) {
  std::vector<Features> inputs;
  std::vector<int> labels;
  inputs.reserve(train.rows.size());
  labels.reserve(train.rows.size());
  for (const auto& row : train.rows) {
    inputs.push_back(row.as_features());
    labels.push_back(row.label);
  }
  return mlp_train(inputs, labels, hp, on_epoch);
}

}  // namespace trackcull
