// Fixed-topology multilayer perceptron.
//
// All parameters live in one flat buffer: every weight matrix in transition
// order (row-major, destination x source), followed by the bias vectors when
// biases are enabled. The weight file and the gradient use the same order.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailsitter/error.hpp"
#include "tailsitter/extended.hpp"
#include "tailsitter/numeric.hpp"

namespace tailsitter::mlp {

enum class Activation { linear, tanh };

inline std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "linear"; }

inline bool parse_activation(std::string_view text, Activation &out) {
    if (text == "linear") {
        out = Activation::linear;
        return true;
    }
    if (text == "tanh") {
        out = Activation::tanh;
        return true;
    }
    return false;
}

template <typename Real>
Real activate(Activation a, Real z) {
    return a == Activation::tanh ? math::tanh(z) : z;
}

/// d(activation)/dz evaluated from the pre-activation. For tanh this is
/// sech^2(z), which keeps full relative precision when the unit saturates
/// (1 - tanh^2 does not).
template <typename Real>
Real activate_derivative(Activation a, Real z) {
    if (a == Activation::linear) {
        return Real(1);
    }
    const Real c = math::cosh(z);
    return Real(1) / (c * c);
}

struct Topology {
    std::vector<std::size_t> layer_sizes;  // input dimension first
    std::vector<Activation> activations;   // one per non-input layer

    /// 2 -> 10 -> 20 -> 50 -> 10 -> 1 with tanh on the second and third layers.
    static Topology paper_default() {
        return {{2, 10, 20, 50, 10, 1},
                {Activation::linear, Activation::tanh, Activation::tanh, Activation::linear, Activation::linear}};
    }

    std::size_t transitions() const noexcept { return activations.size(); }
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t max_width() const { return *std::max_element(layer_sizes.begin(), layer_sizes.end()); }

    void validate() const {
        if (layer_sizes.size() < 2) {
            throw Error(ErrorKind::invalid_argument, "topology needs at least two layers");
        }
        if (activations.size() + 1 != layer_sizes.size()) {
            throw Error(ErrorKind::invalid_argument, "need exactly one activation per non-input layer");
        }
        if (std::find(layer_sizes.begin(), layer_sizes.end(), std::size_t{0}) != layer_sizes.end()) {
            throw Error(ErrorKind::invalid_argument, "layer sizes must be positive");
        }
    }

    friend bool operator==(const Topology &, const Topology &) = default;
};

/// Number of trainable values: sum of n_i * n_{i+1}, plus sum of n_{i+1} with biases.
inline std::size_t param_count(const Topology &topology, bool biases_enabled) {
    topology.validate();
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < topology.layer_sizes.size(); ++i) {
        count += topology.layer_sizes[i] * topology.layer_sizes[i + 1];
        if (biases_enabled) {
            count += topology.layer_sizes[i + 1];
        }
    }
    return count;
}

/// Stored-value count quoted for the reference on-board network. It cannot be
/// reproduced by a fully-connected 2-10-20-50-10-1 network, which has 1730
/// weights (its first row lists 2 weights for 10 neurons). Kept so tests can
/// pin the discrepancy instead of claiming a match.
inline constexpr std::size_t kQuotedOnboardValueCount = 1712;

template <typename Real = double>
class BasicNetwork {
public:
    using value_type = Real;

    BasicNetwork(Topology topology, bool biases_enabled)
        : topology_(std::move(topology)), biases_(biases_enabled) {
        topology_.validate();
        params_.assign(param_count(topology_, biases_), Real(0));
        std::size_t offset = 0;
        for (std::size_t t = 0; t < topology_.transitions(); ++t) {
            weight_offsets_.push_back(offset);
            offset += rows(t) * cols(t);
        }
        for (std::size_t t = 0; t < topology_.transitions(); ++t) {
            bias_offsets_.push_back(offset);
            offset += biases_ ? rows(t) : 0;
        }
    }

    const Topology &topology() const noexcept { return topology_; }
    bool biases_enabled() const noexcept { return biases_; }

    /// Destination width of transition t.
    std::size_t rows(std::size_t t) const { return topology_.layer_sizes[t + 1]; }
    /// Source width of transition t.
    std::size_t cols(std::size_t t) const { return topology_.layer_sizes[t]; }

    std::span<Real> weights(std::size_t t) {
        return {params_.data() + weight_offsets_[t], rows(t) * cols(t)};
    }
    std::span<const Real> weights(std::size_t t) const {
        return {params_.data() + weight_offsets_[t], rows(t) * cols(t)};
    }
    /// Empty when biases are disabled.
    std::span<Real> biases(std::size_t t) { return {params_.data() + bias_offsets_[t], biases_ ? rows(t) : 0}; }
    std::span<const Real> biases(std::size_t t) const {
        return {params_.data() + bias_offsets_[t], biases_ ? rows(t) : 0};
    }

    std::span<Real> params() noexcept { return params_; }
    std::span<const Real> params() const noexcept { return params_; }

    std::size_t weight_offset(std::size_t t) const { return weight_offsets_[t]; }
    std::size_t bias_offset(std::size_t t) const { return bias_offsets_[t]; }

    bool all_finite() const {
        return std::all_of(params_.begin(), params_.end(), [](Real v) { return std::isfinite(v); });
    }

    friend bool operator==(const BasicNetwork &, const BasicNetwork &) = default;

private:
    Topology topology_;
    bool biases_;
    std::vector<Real> params_;
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;
};

using Network = BasicNetwork<double>;

template <typename To, typename From>
BasicNetwork<To> network_cast(const BasicNetwork<From> &net) {
    BasicNetwork<To> out(net.topology(), net.biases_enabled());
    std::transform(net.params().begin(), net.params().end(), out.params().begin(),
                   [](From v) { return static_cast<To>(v); });
    return out;
}

enum class InitScheme { zeros, uniform_xavier };

/// Deterministic in (seed, scheme). Xavier draws each transition from
/// U(-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))); biases start at zero.
inline Network init_network(const Topology &topology, std::uint64_t seed, InitScheme scheme,
                            bool biases_enabled = false) {
    Network net(topology, biases_enabled);
    if (scheme == InitScheme::zeros) {
        return net;
    }
    auto rng = seeded_engine(seed);
    for (std::size_t t = 0; t < topology.transitions(); ++t) {
        const double limit = std::sqrt(6.0 / static_cast<double>(net.rows(t) + net.cols(t)));
        for (double &w : net.weights(t)) {
            w = uniform_between(rng, -limit, limit);
        }
    }
    return net;
}

/**
 * Scratch space for one forward pass: two ping-pong buffers of the widest
 * layer, i.e. 2 * max_width values. Allocated once; forward() never
 * allocates. One workspace per concurrent caller.
 */
template <typename Real = double>
class ForwardWorkspace {
public:
    explicit ForwardWorkspace(const Topology &topology)
        : front_(topology.max_width()), back_(topology.max_width()) {}

    std::size_t capacity() const noexcept { return front_.size() + back_.size(); }

private:
    template <typename R>
    friend void forward_into(const BasicNetwork<R> &, std::span<const R>, std::span<R>, ForwardWorkspace<R> &);

    std::vector<Real> front_;
    std::vector<Real> back_;
};

/// Affine map then activation, layer by layer. Output span must match the output width.
template <typename Real>
void forward_into(const BasicNetwork<Real> &net, std::span<const Real> input, std::span<Real> output,
                  ForwardWorkspace<Real> &ws) {
    const Topology &topo = net.topology();
    if (input.size() != topo.input_size() || output.size() != topo.output_size() ||
        ws.front_.size() < topo.max_width()) {
        throw Error(ErrorKind::invalid_argument, "forward: buffer sizes do not match the topology");
    }
    std::copy(input.begin(), input.end(), ws.front_.begin());
    Real *src = ws.front_.data();
    Real *dst = ws.back_.data();
    for (std::size_t t = 0; t < topo.transitions(); ++t) {
        const std::size_t n_out = net.rows(t);
        const std::size_t n_in = net.cols(t);
        const Real *w = net.weights(t).data();
        const auto bias = net.biases(t);
        const Activation act = topo.activations[t];
        for (std::size_t r = 0; r < n_out; ++r) {
            Real z = bias.empty() ? Real(0) : bias[r];
            const Real *row = w + r * n_in;
            for (std::size_t c = 0; c < n_in; ++c) {
                z += row[c] * src[c];
            }
            dst[r] = activate(act, z);
        }
        std::swap(src, dst);
    }
    std::copy(src, src + topo.output_size(), output.begin());
}

/// Scalar estimate for a 2-input, 1-output network: forward(net, (u, w)).
template <typename Real>
Real forward(const BasicNetwork<Real> &net, Real u, Real w, ForwardWorkspace<Real> &ws) {
    const Real input[2] = {u, w};
    Real output[1];
    forward_into<Real>(net, input, output, ws);
    return output[0];
}

/// Convenience overload; allocates a workspace per call, so keep it off hot paths.
template <typename Real>
Real forward(const BasicNetwork<Real> &net, Real u, Real w) {
    ForwardWorkspace<Real> ws(net.topology());
    return forward(net, u, w, ws);
}

} // namespace tailsitter::mlp
