// Backpropagation, plain SGD on the half squared error, and a central
// finite-difference gradient checker.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "tailsitter/dataset.hpp"
#include "tailsitter/error.hpp"
#include "tailsitter/extended.hpp"
#include "tailsitter/mlp.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::train {

using mlp::Network;

enum class Target { f1, f2 };

inline double target_of(const data::Sample &s, Target target) { return target == Target::f1 ? s.f1 : s.f2; }

enum class LrSchedule {
    constant,
    linear_decay, // lr * (1 - epoch / epochs), one value per epoch
};

struct TrainConfig {
    std::size_t epochs = 10;
    double learning_rate = 1e-2;
    std::size_t batch_size = 1;
    std::uint64_t shuffle_seed = 0;
    LrSchedule schedule = LrSchedule::linear_decay;
    // Train on inputs and target divided by their standard deviations, then
    // fold the scales back into the first and last (linear) transitions. The
    // incoming parameters are taken as standardized-space values, so an
    // initialization scheme sees unit-scale inputs; the result is in raw units.
    bool standardize = true;

    double learning_rate_at(std::size_t epoch) const {
        if (schedule == LrSchedule::constant) {
            return learning_rate;
        }
        return learning_rate * (1.0 - static_cast<double>(epoch) / static_cast<double>(epochs));
    }

    void validate() const {
        if (epochs < 1 || batch_size < 1 || !std::isfinite(learning_rate) || !(learning_rate > 0.0)) {
            throw Error(ErrorKind::invalid_argument, "need epochs >= 1, batch_size >= 1, learning_rate > 0");
        }
    }
};

struct TrainReport {
    std::vector<double> loss_history; // mean squared error per epoch, (m/s^2)^2
    double test_rmse = 0.0;           // m/s^2
    double final_weight_delta = 0.0;  // max |w_end - w_start| over the last epoch
    double wall_seconds = 0.0;
};

inline double loss_mse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || predictions.empty()) {
        throw Error(ErrorKind::invalid_argument, "loss_mse needs equal, non-empty inputs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        sum += d * d;
    }
    return sum / static_cast<double>(predictions.size());
}

/// Per-layer pre-activations and activations kept for the backward pass.
class BackpropWorkspace {
public:
    explicit BackpropWorkspace(const mlp::Topology &topology) {
        std::size_t offset = 0;
        for (std::size_t size : topology.layer_sizes) {
            offsets_.push_back(offset);
            offset += size;
        }
        pre_.assign(offset, 0.0);
        act_.assign(offset, 0.0);
        delta_.assign(offset, 0.0);
    }

    std::span<double> pre(std::size_t layer, std::size_t n) { return {pre_.data() + offsets_[layer], n}; }
    std::span<double> act(std::size_t layer, std::size_t n) { return {act_.data() + offsets_[layer], n}; }
    std::span<double> delta(std::size_t layer, std::size_t n) { return {delta_.data() + offsets_[layer], n}; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<double> pre_, act_, delta_;
};

/**
 * @brief Accumulates scale * d/dp [ 1/2 (forward(net, (u, w)) - target)^2 ] into grad.
 *
 * Runs the forward pass storing every layer, then walks the transitions from
 * the output back to the input. Returns the network output.
 */
inline double accumulate_gradient(const Network &net, double u, double w, double target, double scale,
                                  std::span<double> grad, BackpropWorkspace &ws) {
    const auto &topo = net.topology();
    if (topo.input_size() != 2 || topo.output_size() != 1 || grad.size() != net.params().size()) {
        throw Error(ErrorKind::invalid_argument, "backprop expects a 2-input, 1-output network");
    }
    const std::size_t layers = topo.layer_sizes.size();

    auto a0 = ws.act(0, 2);
    a0[0] = u;
    a0[1] = w;
    for (std::size_t t = 0; t < topo.transitions(); ++t) {
        const std::size_t n_out = net.rows(t), n_in = net.cols(t);
        const auto W = net.weights(t);
        const auto b = net.biases(t);
        const auto src = ws.act(t, n_in);
        auto z = ws.pre(t + 1, n_out);
        auto a = ws.act(t + 1, n_out);
        for (std::size_t r = 0; r < n_out; ++r) {
            double sum = b.empty() ? 0.0 : b[r];
            for (std::size_t c = 0; c < n_in; ++c) {
                sum += W[r * n_in + c] * src[c];
            }
            z[r] = sum;
            a[r] = mlp::activate(topo.activations[t], sum);
        }
    }
    const double output = ws.act(layers - 1, 1)[0];

    // output delta of the half squared error
    {
        auto d = ws.delta(layers - 1, 1);
        d[0] = (output - target) * mlp::activate_derivative(topo.activations.back(), ws.pre(layers - 1, 1)[0]);
    }
    for (std::size_t t = topo.transitions(); t-- > 0;) {
        const std::size_t n_out = net.rows(t), n_in = net.cols(t);
        const auto W = net.weights(t);
        const auto d_out = ws.delta(t + 1, n_out);
        const auto src = ws.act(t, n_in);
        const std::size_t w_off = net.weight_offset(t);
        for (std::size_t r = 0; r < n_out; ++r) {
            const double dr = scale * d_out[r];
            for (std::size_t c = 0; c < n_in; ++c) {
                grad[w_off + r * n_in + c] += dr * src[c];
            }
        }
        if (net.biases_enabled()) {
            const std::size_t b_off = net.bias_offset(t);
            for (std::size_t r = 0; r < n_out; ++r) {
                grad[b_off + r] += scale * d_out[r];
            }
        }
        if (t == 0) {
            break;
        }
        auto d_in = ws.delta(t, n_in);
        const auto z_in = ws.pre(t, n_in);
        for (std::size_t c = 0; c < n_in; ++c) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n_out; ++r) {
                sum += W[r * n_in + c] * d_out[r];
            }
            d_in[c] = sum * mlp::activate_derivative(topo.activations[t - 1], z_in[c]);
        }
    }
    return output;
}

/// Exact gradient of 1/2 (forward(net, input) - target)^2, laid out like net.params().
inline std::vector<double> backprop_gradients(const Network &net, double u, double w, double target) {
    std::vector<double> grad(net.params().size(), 0.0);
    BackpropWorkspace ws(net.topology());
    accumulate_gradient(net, u, w, target, 1.0, grad, ws);
    return grad;
}

namespace detail {

/**
 * Re-evaluates the network output after shifting one pre-activation, reusing
 * a cached unperturbed forward pass. Perturbing weight (r, c) of transition t
 * shifts unit r of layer t+1 by h * a_t[c]; a bias shifts it by h. Only the
 * layers downstream of that unit are recomputed.
 */
template <typename Real>
class ShiftedForward {
public:
    explicit ShiftedForward(const mlp::BasicNetwork<Real> &net) : net_(net) {
        const auto &topo = net.topology();
        for (std::size_t size : topo.layer_sizes) {
            pre_.emplace_back(size, Real(0));
            act_.emplace_back(size, Real(0));
        }
        scratch_a_.assign(topo.max_width(), Real(0));
        scratch_b_.assign(topo.max_width(), Real(0));
        build_tails();
    }

    void prime(Real u, Real w) {
        const auto &topo = net_.topology();
        act_[0][0] = u;
        act_[0][1] = w;
        for (std::size_t t = 0; t < topo.transitions(); ++t) {
            const auto W = net_.weights(t);
            const auto b = net_.biases(t);
            const std::size_t n_in = net_.cols(t);
            for (std::size_t r = 0; r < net_.rows(t); ++r) {
                Real z = b.empty() ? Real(0) : b[r];
                for (std::size_t c = 0; c < n_in; ++c) {
                    z += W[r * n_in + c] * act_[t][c];
                }
                pre_[t + 1][r] = z;
                act_[t + 1][r] = mlp::activate(topo.activations[t], z);
            }
        }
    }

    void build_tails() {
        const auto &topo = net_.topology();
        const std::size_t last = topo.layer_sizes.size() - 1;
        tails_.assign(topo.layer_sizes.size(), {});
        tails_[last].assign(1, Real(1));
        linear_from_ = last;
        while (linear_from_ > 1 && topo.activations[linear_from_ - 1] == mlp::Activation::linear) {
            const std::size_t t = linear_from_ - 1;
            const auto W = net_.weights(t);
            const std::size_t n_in = net_.cols(t);
            tails_[t].assign(n_in, Real(0));
            for (std::size_t r = 0; r < net_.rows(t); ++r) {
                for (std::size_t c = 0; c < n_in; ++c) {
                    tails_[t][c] += tails_[t + 1][r] * W[r * n_in + c];
                }
            }
            linear_from_ = t;
        }
    }

    Real activation(std::size_t layer, std::size_t unit) const { return act_[layer][unit]; }

    /// Output with pre-activation (layer, unit) shifted by dz; layer >= 1.
    Real output_with_shift(std::size_t layer, std::size_t unit, Real dz) {
        const auto &topo = net_.topology();
        const Real da = mlp::activate(topo.activations[layer - 1], pre_[layer][unit] + dz) - act_[layer][unit];
        if (layer >= linear_from_) {
            return output() + tails_[layer][unit] * da;
        }
        // next layer: only column `unit` of its input changed
        std::size_t t = layer;
        const auto W = net_.weights(t);
        const std::size_t n_in = net_.cols(t);
        Real *cur = scratch_a_.data();
        Real *nxt = scratch_b_.data();
        for (std::size_t r = 0; r < net_.rows(t); ++r) {
            cur[r] = mlp::activate(topo.activations[t], pre_[t + 1][r] + W[r * n_in + unit] * da);
        }
        for (++t; t < linear_from_; ++t) {
            const auto W2 = net_.weights(t);
            const auto b2 = net_.biases(t);
            const std::size_t n2 = net_.cols(t);
            for (std::size_t r = 0; r < net_.rows(t); ++r) {
                Real z = b2.empty() ? Real(0) : b2[r];
                for (std::size_t c = 0; c < n2; ++c) {
                    z += W2[r * n2 + c] * cur[c];
                }
                nxt[r] = mlp::activate(topo.activations[t], z);
            }
            std::swap(cur, nxt);
        }
        Real out = output();
        for (std::size_t c = 0; c < topo.layer_sizes[t]; ++c) {
            out += tails_[t][c] * (cur[c] - act_[t][c]);
        }
        return out;
    }

private:
    const mlp::BasicNetwork<Real> &net_;
    std::vector<std::vector<Real>> pre_, act_;
    std::vector<Real> scratch_a_, scratch_b_;
    // Layers from linear_from_ onward feed the output through linear maps
    // only; tails_[L] is d(output)/d(activation of layer L) there.
    std::size_t linear_from_ = 0;
    std::vector<std::vector<Real>> tails_;

    Real output() const { return act_.back()[0]; }
};

} // namespace detail

/**
 * @brief Largest relative disagreement between backprop and central differences.
 *
 * Every parameter p is moved to p + step and p - step and the half squared
 * error is re-evaluated in OracleReal (quad precision when available), so the
 * difference quotient resolves even the tiny gradients of saturated tanh
 * units. Relative error per parameter is
 * |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
 */
template <typename OracleReal = ExtendedReal>
double gradient_check(const Network &net, double u, double w, double target, double step) {
    if (!std::isfinite(step) || !(step > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "finite-difference step must be positive");
    }
    const auto analytic = backprop_gradients(net, u, w, target);
    const auto wide = mlp::network_cast<OracleReal>(net);
    detail::ShiftedForward<OracleReal> oracle(wide);
    oracle.prime(OracleReal(u), OracleReal(w));

    const OracleReal h = step;
    const OracleReal t = target;
    const auto half_sq = [&](OracleReal y) { return OracleReal(0.5) * (y - t) * (y - t); };
    double worst = 0.0;
    const auto compare = [&](std::size_t index, std::size_t layer, std::size_t unit, OracleReal input) {
        const OracleReal plus = half_sq(oracle.output_with_shift(layer, unit, h * input));
        const OracleReal minus = half_sq(oracle.output_with_shift(layer, unit, -h * input));
        const double numeric = static_cast<double>((plus - minus) / (OracleReal(2) * h));
        const double denom = std::max({std::abs(analytic[index]), std::abs(numeric), 1e-12});
        worst = std::max(worst, std::abs(analytic[index] - numeric) / denom);
    };
    for (std::size_t tr = 0; tr < net.topology().transitions(); ++tr) {
        const std::size_t n_in = net.cols(tr);
        for (std::size_t r = 0; r < net.rows(tr); ++r) {
            for (std::size_t c = 0; c < n_in; ++c) {
                compare(net.weight_offset(tr) + r * n_in + c, tr + 1, r, oracle.activation(tr, c));
            }
            if (net.biases_enabled()) {
                compare(net.bias_offset(tr) + r, tr + 1, r, OracleReal(1));
            }
        }
    }
    return worst;
}

struct EpochResult {
    double mean_loss = 0.0;         // mean squared error of the pre-update predictions
    double max_weight_delta = 0.0;  // max |p_end - p_start|
};

/// One shuffled pass with w <- w - lr * mean batch gradient. Deterministic in
/// (shuffle_seed, epoch_index).
inline EpochResult sgd_epoch(Network &net, const std::vector<data::Sample> &samples, Target target,
                             const TrainConfig &config, std::size_t epoch_index = 0) {
    // lr = 0 is allowed here so a pass can report the loss without updating.
    if (config.batch_size < 1 || !std::isfinite(config.learning_rate) || config.learning_rate < 0.0) {
        throw Error(ErrorKind::invalid_argument, "need batch_size >= 1 and learning_rate >= 0");
    }
    if (samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "cannot train on an empty dataset");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = seeded_engine(config.shuffle_seed, epoch_index + 1);
    deterministic_shuffle(order.begin(), order.end(), rng);

    const std::vector<double> start(net.params().begin(), net.params().end());
    std::vector<double> grad(start.size(), 0.0);
    BackpropWorkspace ws(net.topology());
    auto params = net.params();

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config.batch_size);
        const double scale = 1.0 / static_cast<double>(end - begin);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t k = begin; k < end; ++k) {
            const auto &s = samples[order[k]];
            const double t = target_of(s, target);
            const double y = accumulate_gradient(net, s.u, s.w, t, scale, grad, ws);
            loss_sum += (y - t) * (y - t);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] -= config.learning_rate * grad[i];
        }
    }
    if (!net.all_finite()) {
        throw Error(ErrorKind::numerical, "training diverged (non-finite weights)");
    }
    EpochResult result;
    result.mean_loss = loss_sum / static_cast<double>(samples.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        result.max_weight_delta = std::max(result.max_weight_delta, std::abs(params[i] - start[i]));
    }
    return result;
}

inline double evaluate_rmse(const Network &net, const std::vector<data::Sample> &samples, Target target) {
    if (samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "cannot evaluate on an empty dataset");
    }
    mlp::ForwardWorkspace<double> ws(net.topology());
    double sum = 0.0;
    for (const auto &s : samples) {
        const double e = mlp::forward(net, s.u, s.w, ws) - target_of(s, target);
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(samples.size()));
}

/// Population standard deviation of one label column.
inline double label_stddev(const std::vector<data::Sample> &samples, Target target) {
    if (samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "empty sample set");
    }
    double mean = 0.0;
    for (const auto &s : samples) mean += target_of(s, target);
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const auto &s : samples) {
        const double d = target_of(s, target) - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(samples.size()));
}

/// Per-axis scale factors between raw units and the standardized training problem.
struct Scaling {
    double u = 1.0;
    double w = 1.0;
    double target = 1.0;

    static Scaling from_samples(const std::vector<data::Sample> &samples, Target target) {
        const auto stddev = [&](auto field) {
            double mean = 0.0;
            for (const auto &s : samples) mean += field(s);
            mean /= static_cast<double>(samples.size());
            double var = 0.0;
            for (const auto &s : samples) var += (field(s) - mean) * (field(s) - mean);
            const double sd = std::sqrt(var / static_cast<double>(samples.size()));
            return sd > 0.0 ? sd : 1.0;
        };
        return {stddev([](const data::Sample &s) { return s.u; }), stddev([](const data::Sample &s) { return s.w; }),
                stddev([target](const data::Sample &s) { return target_of(s, target); })};
    }
};

/**
 * Maps a raw-unit network to its standardized twin (forward = true) or back.
 * Requires linear first and last transitions; with biases, only the output
 * bias carries the target scale (inputs are scaled, not centered).
 */
inline void rescale_network(Network &net, const Scaling &scaling, bool forward) {
    const auto &topo = net.topology();
    if (topo.activations.front() != mlp::Activation::linear || topo.activations.back() != mlp::Activation::linear) {
        throw Error(ErrorKind::invalid_argument, "standardized training needs linear first and last transitions");
    }
    const double su = forward ? scaling.u : 1.0 / scaling.u;
    const double sw = forward ? scaling.w : 1.0 / scaling.w;
    const double so = forward ? 1.0 / scaling.target : scaling.target;
    auto first = net.weights(0);
    for (std::size_t r = 0; r < net.rows(0); ++r) {
        first[r * 2] *= su;
        first[r * 2 + 1] *= sw;
    }
    const std::size_t last = topo.transitions() - 1;
    for (double &v : net.weights(last)) v *= so;
    for (double &v : net.biases(last)) v *= so;
}

inline TrainReport train(Network &net, const data::Dataset &train_set, const data::Dataset &test_set,
                         Target target, const TrainConfig &config) {
    config.validate();
    if (train_set.samples.empty() || test_set.samples.empty()) {
        throw Error(ErrorKind::invalid_argument, "train and test sets must be non-empty");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Scaling scaling = config.standardize ? Scaling::from_samples(train_set.samples, target) : Scaling{};

    std::vector<data::Sample> samples = train_set.samples;
    for (auto &s : samples) {
        s.u /= scaling.u;
        s.w /= scaling.w;
        s.f1 /= scaling.target;
        s.f2 /= scaling.target;
    }
    TrainReport report;
    std::vector<double> previous(net.params().begin(), net.params().end());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        TrainConfig epoch_config = config;
        epoch_config.learning_rate = config.learning_rate_at(epoch);
        const auto r = sgd_epoch(net, samples, target, epoch_config, epoch);
        report.loss_history.push_back(r.mean_loss * scaling.target * scaling.target);
        if (epoch + 1 == config.epochs) {
            // delta measured on the raw-unit parameters
            Network before = net;
            std::copy(previous.begin(), previous.end(), before.params().begin());
            Network after = net;
            if (config.standardize) {
                rescale_network(before, scaling, false);
                rescale_network(after, scaling, false);
            }
            for (std::size_t i = 0; i < previous.size(); ++i) {
                report.final_weight_delta =
                    std::max(report.final_weight_delta, std::abs(after.params()[i] - before.params()[i]));
            }
        }
        std::copy(net.params().begin(), net.params().end(), previous.begin());
    }
    if (config.standardize) {
        rescale_network(net, scaling, false);
    }
    report.test_rmse = evaluate_rmse(net, test_set.samples, target);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace tailsitter::train
