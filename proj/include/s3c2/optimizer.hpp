#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "s3c2/error.hpp"
#include "s3c2/nn.hpp"

namespace s3c2 {

enum class OptimizerKind { SGD, Adam };

inline const char* to_string(OptimizerKind k) {
    return k == OptimizerKind::SGD ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::SGD;
    if (s == "adam") return OptimizerKind::Adam;
    fail(ErrKind::Parse, "unknown optimizer '", s, "'");
}

/// Per-network optimizer state. Moment accumulators mirror the parameter
/// shapes exactly and are allocated on the first step.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<LayerGrads> m;  // first moments (Adam only)
    std::vector<LayerGrads> v;  // second moments (Adam only)

    static OptimizerState sgd(double lr) { return {OptimizerKind::SGD, lr}; }
    static OptimizerState adam(double lr) { return {OptimizerKind::Adam, lr}; }
};

namespace detail {

inline void check_grad_shapes(const Network& net, const NetworkGrads& grads) {
    if (grads.layers.size() != net.layers.size())
        fail(ErrKind::Dimension, "optimizer_step: grads have ", grads.layers.size(),
             " layers, network has ", net.layers.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const DenseLayer& l = net.layers[li];
        const LayerGrads& g = grads.layers[li];
        if (!g.weights.same_shape(l.weights) || g.biases.size() != l.biases.size())
            fail(ErrKind::Dimension, "optimizer_step: gradient shape mismatch at layer ", li);
    }
}

inline void init_moments(std::vector<LayerGrads>& moments, const Network& net) {
    moments.clear();
    moments.reserve(net.layers.size());
    for (const DenseLayer& l : net.layers)
        moments.push_back({Matrix(l.in_dim(), l.out_dim()),
                           std::vector<double>(l.out_dim(), 0.0)});
}

inline void adam_update(double& p, double& m, double& v, double g, double lr,
                        double c1, double c2, double b1, double b2, double eps) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    p -= lr * (m * c1) / (std::sqrt(v * c2) + eps);
}

}  // namespace detail

inline void optimizer_step(OptimizerState& state, Network& net,
                           const NetworkGrads& grads) {
    if (state.learning_rate <= 0.0)
        fail(ErrKind::InvalidArgument, "optimizer_step: learning rate must be > 0");
    detail::check_grad_shapes(net, grads);
    state.step_count += 1;

    if (state.kind == OptimizerKind::SGD) {
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            DenseLayer& l = net.layers[li];
            const LayerGrads& g = grads.layers[li];
            for (std::size_t t = 0; t < l.weights.size(); ++t)
                l.weights.data()[t] -= state.learning_rate * g.weights.data()[t];
            for (std::size_t t = 0; t < l.biases.size(); ++t)
                l.biases[t] -= state.learning_rate * g.biases[t];
        }
        return;
    }

    if (state.m.empty()) {
        detail::init_moments(state.m, net);
        detail::init_moments(state.v, net);
    }
    if (state.m.size() != net.layers.size())
        fail(ErrKind::Dimension, "optimizer_step: moment/network layer count mismatch");

    const double c1 = 1.0 / (1.0 - std::pow(state.beta1, state.step_count));
    const double c2 = 1.0 / (1.0 - std::pow(state.beta2, state.step_count));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        DenseLayer& l = net.layers[li];
        const LayerGrads& g = grads.layers[li];
        LayerGrads& m = state.m[li];
        LayerGrads& v = state.v[li];
        if (!m.weights.same_shape(l.weights))
            fail(ErrKind::Dimension, "optimizer_step: stale moment shapes at layer ", li);
        for (std::size_t t = 0; t < l.weights.size(); ++t)
            detail::adam_update(l.weights.data()[t], m.weights.data()[t],
                                v.weights.data()[t], g.weights.data()[t],
                                state.learning_rate, c1, c2, state.beta1,
                                state.beta2, state.epsilon);
        for (std::size_t t = 0; t < l.biases.size(); ++t)
            detail::adam_update(l.biases[t], m.biases[t], v.biases[t], g.biases[t],
                                state.learning_rate, c1, c2, state.beta1,
                                state.beta2, state.epsilon);
    }
}

}  // namespace s3c2
