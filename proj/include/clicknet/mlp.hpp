#pragma once

// Dense feed-forward classifier: rectified-linear hidden layers, a sigmoid
// output unit, mean-square loss, Adam, and early stopping on validation loss.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clicknet/errors.hpp"
#include "clicknet/rng.hpp"
#include "clicknet/sampling.hpp"
#include "clicknet/states.hpp"
#include "clicknet/textfmt.hpp"

namespace clicknet {

enum class Activation { relu, sigmoid };

inline std::string_view activation_tag(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

inline Activation parse_activation(std::string_view tag) {
    if (tag == "relu") return Activation::relu;
    if (tag == "sigmoid") return Activation::sigmoid;
    throw ArgumentError("unknown activation '" + std::string(tag) + "'");
}

/// Fully connected layer; weights are outputs x inputs, row-major.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(std::size_t out, std::size_t in) { return weights[out * inputs + in]; }
    double w(std::size_t out, std::size_t in) const { return weights[out * inputs + in]; }
};

struct NetworkModel {
    std::vector<std::size_t> layer_dims;
    std::vector<DenseLayer> layers;
    Activation hidden_activation = Activation::relu;
    Activation output_activation = Activation::sigmoid;
    std::map<std::string, std::string> metadata;

    std::size_t input_dim() const { return layer_dims.empty() ? 0 : layer_dims.front(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }

    void validate() const {
        if (layer_dims.size() < 2) throw ArgumentError("network needs at least an input and an output layer");
        if (layer_dims.back() != 1) throw ArgumentError("network output layer must have exactly one unit");
        if (layers.size() != layer_dims.size() - 1) throw ArgumentError("layer count does not match layer_dims");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            if (l.inputs != layer_dims[i] || l.outputs != layer_dims[i + 1] || l.weights.size() != l.inputs * l.outputs ||
                l.bias.size() != l.outputs) {
                throw ArgumentError("layer " + std::to_string(i) + " shape does not match layer_dims");
            }
            for (double v : l.weights) {
                if (!std::isfinite(v)) throw ArgumentError("non-finite weight in layer " + std::to_string(i));
            }
            for (double v : l.bias) {
                if (!std::isfinite(v)) throw ArgumentError("non-finite bias in layer " + std::to_string(i));
            }
        }
    }
};

inline const std::vector<std::size_t> kDefaultHiddenLayers{50, 50, 50};

/// All-zero parameters with the given shape.
inline NetworkModel zero_network(const std::vector<std::size_t>& dims) {
    NetworkModel net;
    net.layer_dims = dims;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer l;
        l.inputs = dims[i];
        l.outputs = dims[i + 1];
        l.weights.assign(l.inputs * l.outputs, 0.0);
        l.bias.assign(l.outputs, 0.0);
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
inline NetworkModel make_network(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    NetworkModel net = zero_network(dims);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto& l = net.layers[i];
        Rng rng = derive_stream(seed, stream_key(purpose::init, 0, i));
        const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs + l.outputs));
        for (double& w : l.weights) w = rng.uniform(-limit, limit);
    }
    return net;
}

namespace detail {

inline double sigmoid(double z) {
    const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    // Keep the output strictly inside (0, 1) even where exp saturates.
    return std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

inline double activate(Activation a, double z) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : sigmoid(z); }

/// Derivative from the pre-activation z and output y; the rectifier uses 0 at z == 0.
inline double activation_slope(Activation a, double z, double y) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : y * (1.0 - y);
}

/// Per-layer pre-activations and outputs of one forward pass.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;

    explicit ForwardTrace(const NetworkModel& net) {
        for (const auto& l : net.layers) {
            pre.emplace_back(l.outputs);
            post.emplace_back(l.outputs);
        }
    }
};

inline double forward(const NetworkModel& net, std::span<const double> x, ForwardTrace& trace) {
    std::span<const double> in = x;
    const std::size_t last = net.layers.size() - 1;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& l = net.layers[li];
        const Activation act = li == last ? net.output_activation : net.hidden_activation;
        auto& z = trace.pre[li];
        auto& a = trace.post[li];
        for (std::size_t o = 0; o < l.outputs; ++o) {
            const double* row = &l.weights[o * l.inputs];
            double s = l.bias[o];
            for (std::size_t i = 0; i < l.inputs; ++i) s += row[i] * in[i];
            z[o] = s;
            a[o] = activate(act, s);
        }
        in = a;
    }
    return trace.post.back()[0];
}

}  // namespace detail

/// Network output in (0, 1) for one input vector.
inline double predict(const NetworkModel& net, std::span<const double> input) {
    if (net.layers.empty()) throw ArgumentError("network has no layers");
    if (input.size() != net.input_dim()) {
        throw ArgumentError("input has " + std::to_string(input.size()) + " entries, network expects " +
                            std::to_string(net.input_dim()));
    }
    detail::ForwardTrace trace(net);
    return detail::forward(net, input, trace);
}

inline double predict(const NetworkModel& net, const ClickHistogram& hist) {
    const auto f = hist.freqs();
    return predict(net, f);
}

inline double loss(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.empty()) throw ArgumentError("loss of an empty batch");
    if (predictions.size() != labels.size()) throw ArgumentError("predictions and labels differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - labels[i];
        s += d * d;
    }
    return s / static_cast<double>(predictions.size());
}

/// Fixed-dimension feature rows with scalar labels, stored row-major.
struct Examples {
    std::size_t dim = 0;
    std::vector<double> inputs;
    std::vector<double> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::span<const double> row(std::size_t i) const { return {inputs.data() + i * dim, dim}; }

    void add(std::span<const double> x, double label) {
        if (empty() && dim == 0) dim = x.size();
        if (x.size() != dim) throw ArgumentError("example dimension mismatch");
        inputs.insert(inputs.end(), x.begin(), x.end());
        labels.push_back(label);
    }
};

/// Same layout as the model parameters.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    explicit Gradients(const NetworkModel& net) {
        for (const auto& l : net.layers) {
            weights.emplace_back(l.weights.size(), 0.0);
            biases.emplace_back(l.bias.size(), 0.0);
        }
    }

    void zero() {
        for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
        for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
    }
};

namespace detail {

/// Adds the gradient of mean((y_hat - y)^2) over `indices` into `grads` and
/// returns the summed squared error.
class Backprop {
public:
    explicit Backprop(const NetworkModel& net) : trace_(net) {
        for (const auto& l : net.layers) delta_.emplace_back(l.outputs);
    }

    double accumulate(const NetworkModel& net, const Examples& data, std::span<const std::size_t> indices,
                      Gradients& grads) {
        const double scale = 2.0 / static_cast<double>(indices.size());
        const std::size_t L = net.layers.size();
        double sse = 0.0;
        for (std::size_t idx : indices) {
            const auto x = data.row(idx);
            const double y_hat = forward(net, x, trace_);
            const double err = y_hat - data.labels[idx];
            sse += err * err;

            delta_[L - 1][0] = scale * err * activation_slope(net.output_activation, trace_.pre[L - 1][0], y_hat);
            for (std::size_t li = L; li-- > 0;) {
                const auto& l = net.layers[li];
                const std::span<const double> in = li == 0 ? x : std::span<const double>(trace_.post[li - 1]);
                auto& gw = grads.weights[li];
                auto& gb = grads.biases[li];
                const auto& d = delta_[li];
                for (std::size_t o = 0; o < l.outputs; ++o) {
                    if (d[o] == 0.0) continue;
                    gb[o] += d[o];
                    double* grow = &gw[o * l.inputs];
                    for (std::size_t i = 0; i < l.inputs; ++i) grow[i] += d[o] * in[i];
                }
                if (li == 0) break;
                auto& prev = delta_[li - 1];
                std::fill(prev.begin(), prev.end(), 0.0);
                for (std::size_t o = 0; o < l.outputs; ++o) {
                    if (d[o] == 0.0) continue;
                    const double* row = &l.weights[o * l.inputs];
                    for (std::size_t i = 0; i < l.inputs; ++i) prev[i] += row[i] * d[o];
                }
                for (std::size_t i = 0; i < prev.size(); ++i) {
                    prev[i] *= activation_slope(net.hidden_activation, trace_.pre[li - 1][i], trace_.post[li - 1][i]);
                }
            }
        }
        return sse;
    }

private:
    ForwardTrace trace_;
    std::vector<std::vector<double>> delta_;
};

}  // namespace detail

/// Exact gradient of the mean-square loss over the whole batch.
inline Gradients gradients(const NetworkModel& net, const Examples& batch) {
    if (batch.empty()) throw ArgumentError("gradients of an empty batch");
    if (batch.dim != net.input_dim()) throw ArgumentError("batch dimension does not match the network");
    Gradients g(net);
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    detail::Backprop bp(net);
    bp.accumulate(net, batch, idx, g);
    return g;
}

inline double mean_square_error(const NetworkModel& net, const Examples& data) {
    if (data.empty()) throw ArgumentError("mean square error of an empty set");
    detail::ForwardTrace trace(net);
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = detail::forward(net, data.row(i), trace) - data.labels[i];
        s += d * d;
    }
    return s / static_cast<double>(data.size());
}

struct TrainingConfig {
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 2000;
    std::size_t patience = 50;
    /// An epoch only resets the patience counter when it beats the reference
    /// validation MSE by more than this.
    double min_delta = 1e-8;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_layers = kDefaultHiddenLayers;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
            throw ArgumentError("Adam betas must lie in (0, 1)");
        }
        if (!(adam_epsilon > 0.0)) throw ArgumentError("Adam epsilon must be positive");
        if (!(min_delta >= 0.0)) throw ArgumentError("min_delta must be >= 0");
        if (batch_size < 1 || max_epochs < 1 || patience < 1) {
            throw ArgumentError("batch size, max epochs and patience must be >= 1");
        }
    }

    std::string digest() const {
        using text::format_double;
        std::string d = "lr=" + format_double(learning_rate) + ";beta1=" + format_double(adam_beta1) +
                        ";beta2=" + format_double(adam_beta2) + ";eps=" + format_double(adam_epsilon) +
                        ";batch=" + std::to_string(batch_size) + ";max_epochs=" + std::to_string(max_epochs) +
                        ";patience=" + std::to_string(patience) + ";min_delta=" + format_double(min_delta) + ";hidden=";
        for (std::size_t i = 0; i < hidden_layers.size(); ++i) d += (i ? "x" : "") + std::to_string(hidden_layers[i]);
        return d;
    }
};

/// First and second moment estimates for every parameter, plus the step count.
struct AdamState {
    std::uint64_t step = 0;
    Gradients first;
    Gradients second;

    explicit AdamState(const NetworkModel& net) : first(net), second(net) {}
};

/// One bias-corrected Adam update of `params` at step t (t >= 1).
inline void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first,
                        std::span<double> second, std::uint64_t t, const TrainingConfig& cfg) {
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        first[i] = b1 * first[i] + (1.0 - b1) * g;
        second[i] = b2 * second[i] + (1.0 - b2) * g * g;
        const double m_hat = first[i] / c1;
        const double v_hat = second[i] / c2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
}

inline void adam_step(NetworkModel& net, AdamState& state, const Gradients& grads, const TrainingConfig& cfg) {
    ++state.step;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        adam_update(net.layers[li].weights, grads.weights[li], state.first.weights[li], state.second.weights[li],
                    state.step, cfg);
        adam_update(net.layers[li].bias, grads.biases[li], state.first.biases[li], state.second.biases[li], state.step,
                    cfg);
    }
}

struct EpochRecord {
    std::size_t epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double best_val_mse = 0.0;
};

struct TrainingResult {
    NetworkModel model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
};

/// Mini-batch Adam from `initial`. Stops after `patience` epochs without a
/// validation improvement larger than min_delta (or at max_epochs) and
/// returns the parameters of the lowest validation MSE seen.
inline TrainingResult train(NetworkModel initial, const Examples& train_set, const Examples& val_set,
                            const TrainingConfig& cfg, const DetectorConfig& detector) {
    cfg.validate();
    initial.validate();
    if (train_set.empty() || val_set.empty()) throw ArgumentError("training and validation sets must be nonempty");
    if (train_set.dim != initial.input_dim() || val_set.dim != initial.input_dim()) {
        throw ArgumentError("dataset dimension does not match the network input");
    }

    NetworkModel net = std::move(initial);
    AdamState adam(net);
    Gradients grads(net);
    detail::Backprop bp(net);
    Rng order_rng = derive_stream(cfg.seed, stream_key(purpose::batches, 0, 0));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainingResult result{net, {}, 0, std::numeric_limits<double>::infinity()};
    std::size_t since_best = 0;
    double reference = std::numeric_limits<double>::infinity();
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        double sse = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            grads.zero();
            sse += bp.accumulate(net, train_set, std::span<const std::size_t>(order).subspan(start, len), grads);
            adam_step(net, adam, grads, cfg);
        }
        const double train_mse = sse / static_cast<double>(train_set.size());
        const double val_mse = mean_square_error(net, val_set);
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse)) throw TrainingError("non-finite loss", epoch);

        if (val_mse < result.best_val_mse) {
            result.best_val_mse = val_mse;
            result.best_epoch = epoch;
            result.model = net;
        }
        if (val_mse < reference - cfg.min_delta) {
            reference = val_mse;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.history.push_back({epoch, train_mse, val_mse, result.best_val_mse});
        if (since_best >= cfg.patience) break;
    }

    result.model.metadata["training_config"] = cfg.digest();
    result.model.metadata["seed"] = std::to_string(cfg.seed);
    result.model.metadata["detector"] = to_text(detector);
    result.model.metadata["best_epoch"] = std::to_string(result.best_epoch);
    result.model.metadata["val_mse"] = text::format_double(result.best_val_mse);
    return result;
}

/// Fresh network of shape [input, hidden..., 1] initialized from cfg.seed.
inline TrainingResult train(const Examples& train_set, const Examples& val_set, const TrainingConfig& cfg,
                            const DetectorConfig& detector) {
    std::vector<std::size_t> dims{train_set.dim};
    dims.insert(dims.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
    dims.push_back(1);
    return train(make_network(dims, cfg.seed), train_set, val_set, cfg, detector);
}

inline std::string history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_mse,val_mse\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + text::format_double(r.train_mse) + "," + text::format_double(r.val_mse) + "\n";
    }
    return out;
}

}  // namespace clicknet
