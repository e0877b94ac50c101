#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fedgroup/data.hpp"
#include "fedgroup/errors.hpp"
#include "fedgroup/rng.hpp"

namespace fedgroup {

// Dense ReLU network with softmax-cross-entropy loss, flat parameter vector.
// Parameter layout per layer: weight matrix row-major [out][in], then bias.

enum class Activation { Relu };
enum class LossKind { SoftmaxCrossEntropy };

struct ModelSpec {
  std::vector<std::size_t> layer_dims;  // input dim, hidden dims..., class count
  Activation activation = Activation::Relu;
  LossKind loss = LossKind::SoftmaxCrossEntropy;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t class_count() const { return layer_dims.back(); }
  std::size_t layer_count() const { return layer_dims.size() - 1; }

  void validate() const {
    if (layer_dims.size() < 2) throw ConfigError("model spec needs at least 2 layer dims");
    for (std::size_t d : layer_dims) {
      if (d < 1) throw ConfigError("model spec layer dims must be >= 1");
    }
  }

  bool operator==(const ModelSpec&) const = default;
};

inline std::size_t param_count(const ModelSpec& spec) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    total += spec.layer_dims[l] * spec.layer_dims[l + 1] + spec.layer_dims[l + 1];
  }
  return total;
}

struct ModelWeights {
  std::vector<double> params;
  ModelSpec spec;
};

struct WeightDelta {
  std::vector<double> delta;
  ModelSpec spec;
};

struct Batch {
  std::vector<double> inputs;  // row-major batch_size x input_dim
  std::vector<int> labels;
  std::size_t input_dim = 0;

  std::size_t size() const { return labels.size(); }
};

struct LossStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

inline void check_weights(const ModelWeights& w, const char* where) {
  if (w.params.size() != param_count(w.spec)) {
    throw ContractError(std::string(where) + ": params length " +
                        std::to_string(w.params.size()) + " != spec parameter count " +
                        std::to_string(param_count(w.spec)));
  }
  for (double v : w.params) {
    if (!std::isfinite(v)) throw NumericError(std::string(where) + ": non-finite weight");
  }
}

inline void check_batch(const ModelWeights& w, const Batch& b, const char* where) {
  if (b.labels.empty()) throw ContractError(std::string(where) + ": empty batch");
  if (b.input_dim != w.spec.input_dim()) {
    throw ContractError(std::string(where) + ": batch input dim " + std::to_string(b.input_dim) +
                        " != model input dim " + std::to_string(w.spec.input_dim()));
  }
  if (b.inputs.size() != b.labels.size() * b.input_dim) {
    throw ContractError(std::string(where) + ": batch inputs/labels size mismatch");
  }
  for (int y : b.labels) {
    if (y < 0 || std::size_t(y) >= w.spec.class_count()) {
      throw ContractError(std::string(where) + ": label " + std::to_string(y) +
                          " out of range for " + std::to_string(w.spec.class_count()) +
                          " classes");
    }
  }
}

// Forward pass for one sample plus optional backprop accumulation into
// grad_acc (unnormalized, caller divides by batch size). Returns the sample
// loss and whether argmax (lowest index on ties) hits the label.
struct SampleResult {
  double loss;
  bool correct;
};

class Workspace {
public:
  explicit Workspace(const ModelSpec& spec) {
    acts_.resize(spec.layer_dims.size());
    for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) {
      acts_[l].resize(spec.layer_dims[l]);
    }
    deltas_.resize(spec.layer_dims.size());
    for (std::size_t l = 1; l < spec.layer_dims.size(); ++l) {
      deltas_[l].resize(spec.layer_dims[l]);
    }
  }

  SampleResult run(const ModelWeights& w, const double* x, int label,
                   std::vector<double>* grad_acc) {
    const auto& dims = w.spec.layer_dims;
    const std::size_t layers = dims.size() - 1;
    std::copy(x, x + dims[0], acts_[0].begin());

    // Forward: hidden layers ReLU, final layer linear (logits).
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = dims[l], out = dims[l + 1];
      const double* W = w.params.data() + offset;
      const double* bias = W + in * out;
      const double* src = acts_[l].data();
      double* dst = acts_[l + 1].data();
      for (std::size_t o = 0; o < out; ++o) {
        double z = bias[o];
        const double* row = W + o * in;
        for (std::size_t i = 0; i < in; ++i) z += row[i] * src[i];
        dst[o] = (l + 1 < layers && z < 0.0) ? 0.0 : z;
      }
      offset += in * out + out;
    }

    // Loss and accuracy from the logits.
    const std::size_t classes = dims.back();
    double* logits = acts_[layers].data();
    double max_logit = logits[0];
    std::size_t argmax = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (logits[c] > max_logit) {
        max_logit = logits[c];
        argmax = c;
      }
    }
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum_exp += std::exp(logits[c] - max_logit);
    const double log_sum = std::log(sum_exp) + max_logit;
    SampleResult res;
    res.loss = log_sum - logits[std::size_t(label)];
    res.correct = (argmax == std::size_t(label));

    if (grad_acc != nullptr) {
      // dL/dlogits = softmax - onehot
      auto& dl = deltas_[layers];
      for (std::size_t c = 0; c < classes; ++c) {
        dl[c] = std::exp(logits[c] - log_sum) - (c == std::size_t(label) ? 1.0 : 0.0);
      }
      std::size_t layer_offset = param_count(w.spec);
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = dims[l], out = dims[l + 1];
        layer_offset -= in * out + out;
        const double* W = w.params.data() + layer_offset;
        double* gW = grad_acc->data() + layer_offset;
        double* gb = gW + in * out;
        const double* src = acts_[l].data();
        const double* d = deltas_[l + 1].data();
        for (std::size_t o = 0; o < out; ++o) {
          const double g = d[o];
          double* grow = gW + o * in;
          for (std::size_t i = 0; i < in; ++i) grow[i] += g * src[i];
          gb[o] += g;
        }
        if (l > 0) {
          auto& dprev = deltas_[l];
          const double* act = acts_[l].data();
          for (std::size_t i = 0; i < in; ++i) {
            // ReLU derivative: activation is zero exactly where z was clipped.
            if (act[i] <= 0.0) {
              dprev[i] = 0.0;
              continue;
            }
            double s = 0.0;
            for (std::size_t o = 0; o < out; ++o) s += W[o * in + i] * d[o];
            dprev[i] = s;
          }
        }
      }
    }
    return res;
  }

private:
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> deltas_;
};

}  // namespace detail

// Deterministic per-layer uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights,
// zero biases.
inline ModelWeights init_weights(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelWeights w;
  w.spec = spec;
  w.params.resize(param_count(spec));
  RngStream rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const std::size_t in = spec.layer_dims[l], out = spec.layer_dims[l + 1];
    const double scale = 1.0 / std::sqrt(double(in));
    for (std::size_t k = 0; k < in * out; ++k) w.params[offset + k] = rng.uniform(-scale, scale);
    for (std::size_t k = 0; k < out; ++k) w.params[offset + in * out + k] = 0.0;
    offset += in * out + out;
  }
  return w;
}

// Mean softmax-cross-entropy and top-1 accuracy over a batch. Argmax ties
// break toward the lowest class index.
inline LossStats forward_loss(const ModelWeights& w, const Batch& b) {
  detail::check_weights(w, "forward_loss");
  detail::check_batch(w, b, "forward_loss");
  detail::Workspace ws(w.spec);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < b.size(); ++s) {
    const auto res = ws.run(w, b.inputs.data() + s * b.input_dim, b.labels[s], nullptr);
    loss_sum += res.loss;
    correct += res.correct ? 1 : 0;
  }
  return {loss_sum / double(b.size()), double(correct) / double(b.size())};
}

// Exact backprop gradient of the mean batch loss, flat layout matching params.
inline std::vector<double> gradient(const ModelWeights& w, const Batch& b) {
  detail::check_weights(w, "gradient");
  detail::check_batch(w, b, "gradient");
  detail::Workspace ws(w.spec);
  std::vector<double> grad(w.params.size(), 0.0);
  for (std::size_t s = 0; s < b.size(); ++s) {
    ws.run(w, b.inputs.data() + s * b.input_dim, b.labels[s], &grad);
  }
  const double inv = 1.0 / double(b.size());
  for (double& g : grad) g *= inv;
  return grad;
}

// Gathers device samples (by shuffled order) into a dense double batch.
inline Batch gather_batch(const std::vector<Sample>& samples,
                          const std::vector<std::size_t>& order, std::size_t begin,
                          std::size_t end, std::size_t input_dim) {
  Batch b;
  b.input_dim = input_dim;
  b.labels.reserve(end - begin);
  b.inputs.reserve((end - begin) * input_dim);
  for (std::size_t k = begin; k < end; ++k) {
    const Sample& s = samples[order[k]];
    b.labels.push_back(s.label);
    for (float v : s.input) b.inputs.push_back(double(v));
  }
  return b;
}

inline Batch full_batch(const std::vector<Sample>& samples, std::size_t input_dim) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  return gather_batch(samples, order, 0, samples.size(), input_dim);
}

// E epochs of mini-batch SGD starting from a copy of the dispatched global
// weights; returns trained minus dispatched. Batches are formed by shuffling
// the device data with rng each epoch; a short final batch is kept.
inline WeightDelta local_train(const ModelWeights& w_global, const DeviceDataset& data,
                               std::size_t epochs, double lr, std::size_t batch_size,
                               RngStream& rng) {
  detail::check_weights(w_global, "local_train");
  if (data.samples.empty()) {
    throw ContractError("local_train: device " + std::to_string(data.device_id) +
                        " has no samples");
  }
  if (batch_size < 1) throw ContractError("local_train: batch_size must be positive");

  ModelWeights w = w_global;
  const std::size_t n = data.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t(0));
    rng.shuffle(order);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      const std::size_t stop = std::min(n, start + batch_size);
      const Batch b = gather_batch(data.samples, order, start, stop, w.spec.input_dim());
      const std::vector<double> g = gradient(w, b);
      bool finite = true;
      for (std::size_t k = 0; k < w.params.size(); ++k) {
        w.params[k] -= lr * g[k];
        finite = finite && std::isfinite(w.params[k]);
      }
      if (!finite) {
        throw NumericError("local_train: non-finite weights on device " +
                           std::to_string(data.device_id) + ", epoch " + std::to_string(e + 1) +
                           ", batch " + std::to_string(batch_index + 1));
      }
    }
  }

  WeightDelta d;
  d.spec = w.spec;
  d.delta.resize(w.params.size());
  for (std::size_t k = 0; k < w.params.size(); ++k) d.delta[k] = w.params[k] - w_global.params[k];
  return d;
}

}  // namespace fedgroup
