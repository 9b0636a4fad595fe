#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "s3c2/error.hpp"
#include "s3c2/matrix.hpp"
#include "s3c2/rng.hpp"

namespace s3c2 {

enum class Activation { ReLU, Sigmoid, Softmax, Identity };
enum class Mode { Train, Infer };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    if (s == "identity") return Activation::Identity;
    fail(ErrKind::Parse, "unknown activation tag '", s, "'");
}

struct DenseLayer {
    Matrix weights;              // in_dim x out_dim
    std::vector<double> biases;  // out_dim
    Activation activation = Activation::Identity;
    double dropout_rate = 0.0;   // in [0,1); applied after activation, train mode only

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
};

struct Network {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    void validate() const {
        if (layers.empty()) fail(ErrKind::State, "network has no layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const DenseLayer& l = layers[i];
            if (l.biases.size() != l.out_dim())
                fail(ErrKind::Dimension, "layer ", i, ": bias size ",
                     l.biases.size(), " != out_dim ", l.out_dim());
            if (l.dropout_rate < 0.0 || l.dropout_rate >= 1.0)
                fail(ErrKind::InvalidArgument, "layer ", i, ": dropout rate ",
                     l.dropout_rate, " outside [0,1)");
            if (i > 0 && layers[i - 1].out_dim() != l.in_dim())
                fail(ErrKind::Dimension, "layer ", i, ": in_dim ", l.in_dim(),
                     " != previous out_dim ", layers[i - 1].out_dim());
        }
    }
};

// He-uniform for ReLU fan-in, Xavier-uniform otherwise; biases start at zero.
inline DenseLayer make_dense_layer(std::size_t in_dim, std::size_t out_dim,
                                   Activation act, double dropout, Rng& rng) {
    DenseLayer layer;
    layer.weights = Matrix(in_dim, out_dim);
    layer.biases.assign(out_dim, 0.0);
    layer.activation = act;
    layer.dropout_rate = dropout;
    const double limit = act == Activation::ReLU
                             ? std::sqrt(6.0 / static_cast<double>(in_dim))
                             : std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : layer.weights.data()) w = dist(rng);
    return layer;
}

/// Builds a chain of dense layers. dims has one more entry than acts.
inline Network make_network(const std::vector<std::size_t>& dims,
                            const std::vector<Activation>& acts,
                            const std::vector<double>& dropouts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1 ||
        dropouts.size() != acts.size())
        fail(ErrKind::InvalidArgument, "make_network: inconsistent spec sizes");
    Network net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        net.layers.push_back(
            make_dense_layer(dims[i], dims[i + 1], acts[i], dropouts[i], rng));
    net.validate();
    return net;
}

struct LayerTape {
    Matrix input;         // batch x in_dim
    Matrix activated;     // batch x out_dim, post-activation, pre-dropout
    Matrix dropout_mask;  // empty when no dropout was sampled; else 0 or 1/keep
};

struct ForwardTape {
    std::vector<LayerTape> layers;
};

namespace detail {

inline void apply_activation(Activation act, Matrix& z) {
    switch (act) {
        case Activation::Identity:
            break;
        case Activation::ReLU:
            for (double& v : z.data())
                if (v < 0.0) v = 0.0;
            break;
        case Activation::Sigmoid:
            for (double& v : z.data())
                v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                             : std::exp(v) / (1.0 + std::exp(v));
            break;
        case Activation::Softmax:
            // per-row max subtraction keeps exp() in range
            for (std::size_t i = 0; i < z.rows(); ++i) {
                double* row = z.row_ptr(i);
                double mx = row[0];
                for (std::size_t j = 1; j < z.cols(); ++j) mx = std::max(mx, row[j]);
                double sum = 0.0;
                for (std::size_t j = 0; j < z.cols(); ++j) {
                    row[j] = std::exp(row[j] - mx);
                    sum += row[j];
                }
                for (std::size_t j = 0; j < z.cols(); ++j) row[j] /= sum;
            }
            break;
    }
}

}  // namespace detail

/// Forward pass. In train mode dropout masks are sampled from rng (inverted
/// scaling, so inference needs no rescaling); in infer mode the rng is never
/// touched. When tape is non-null it records everything backward() needs to
/// reproduce the sampled pass exactly.
inline Matrix forward(const Network& net, const Matrix& batch, Mode mode, Rng& rng,
                      ForwardTape* tape = nullptr) {
    if (net.layers.empty()) fail(ErrKind::State, "forward: network has no layers");
    if (batch.cols() != net.in_dim())
        fail(ErrKind::Dimension, "forward: layer 0 expects ", net.in_dim(),
             " columns, batch has ", batch.cols());
    if (tape) {
        tape->layers.clear();
        tape->layers.reserve(net.layers.size());
    }
    Matrix x = batch;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const DenseLayer& layer = net.layers[li];
        if (x.cols() != layer.in_dim())
            fail(ErrKind::Dimension, "forward: layer ", li, " expects ",
                 layer.in_dim(), " columns, got ", x.cols());
        Matrix z = matmul(x, layer.weights);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* row = z.row_ptr(i);
            for (std::size_t j = 0; j < z.cols(); ++j) row[j] += layer.biases[j];
        }
        detail::apply_activation(layer.activation, z);

        LayerTape lt;
        if (tape) {
            lt.input = std::move(x);
            lt.activated = z;
        }
        if (mode == Mode::Train && layer.dropout_rate > 0.0) {
            const double keep = 1.0 - layer.dropout_rate;
            const double inv_keep = 1.0 / keep;
            Matrix mask(z.rows(), z.cols());
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double* mp = mask.data().data();
            double* zp = z.data().data();
            for (std::size_t t = 0; t < z.size(); ++t) {
                mp[t] = u(rng) < keep ? inv_keep : 0.0;
                zp[t] *= mp[t];
            }
            if (tape) lt.dropout_mask = std::move(mask);
        }
        if (tape) tape->layers.push_back(std::move(lt));
        x = std::move(z);
    }
    return x;
}

inline Matrix infer(const Network& net, const Matrix& batch) {
    Rng unused(0);
    return forward(net, batch, Mode::Infer, unused);
}

struct LayerGrads {
    Matrix weights;
    std::vector<double> biases;
};

struct NetworkGrads {
    std::vector<LayerGrads> layers;

    void add(const NetworkGrads& other) {
        if (layers.size() != other.layers.size())
            fail(ErrKind::Dimension, "NetworkGrads::add: layer count mismatch");
        for (std::size_t li = 0; li < layers.size(); ++li) {
            LayerGrads& a = layers[li];
            const LayerGrads& b = other.layers[li];
            if (!a.weights.same_shape(b.weights) || a.biases.size() != b.biases.size())
                fail(ErrKind::Dimension, "NetworkGrads::add: shape mismatch at layer ", li);
            for (std::size_t t = 0; t < a.weights.size(); ++t)
                a.weights.data()[t] += b.weights.data()[t];
            for (std::size_t t = 0; t < a.biases.size(); ++t)
                a.biases[t] += b.biases[t];
        }
    }

    void scale(double s) {
        for (LayerGrads& g : layers) {
            for (double& v : g.weights.data()) v *= s;
            for (double& v : g.biases) v *= s;
        }
    }
};

inline NetworkGrads zero_grads(const Network& net) {
    NetworkGrads g;
    g.layers.reserve(net.layers.size());
    for (const DenseLayer& l : net.layers)
        g.layers.push_back({Matrix(l.in_dim(), l.out_dim()),
                            std::vector<double>(l.out_dim(), 0.0)});
    return g;
}

/// Backpropagates grad_output through the taped pass, accumulating parameter
/// gradients into grads (callers sum Siamese twins by reusing one grads
/// object). Returns the gradient with respect to the batch input.
inline Matrix backward(const Network& net, const ForwardTape& tape,
                       const Matrix& grad_output, NetworkGrads& grads) {
    if (tape.layers.size() != net.layers.size())
        fail(ErrKind::State, "backward: tape has ", tape.layers.size(),
             " layers, network has ", net.layers.size());
    if (grads.layers.size() != net.layers.size())
        fail(ErrKind::Dimension, "backward: grads/network layer count mismatch");
    const LayerTape& last = tape.layers.back();
    if (!grad_output.same_shape(last.activated))
        fail(ErrKind::Dimension, "backward: grad_output ", grad_output.rows(), "x",
             grad_output.cols(), " does not match forward output ",
             last.activated.rows(), "x", last.activated.cols());

    Matrix grad = grad_output;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const DenseLayer& layer = net.layers[li];
        const LayerTape& lt = tape.layers[li];
        if (lt.input.empty())
            fail(ErrKind::State, "backward: tape for layer ", li,
                 " is missing the cached input");

        if (!lt.dropout_mask.empty()) {
            // reuse the sampled mask so the gradient matches the forward pass
            for (std::size_t t = 0; t < grad.size(); ++t)
                grad.data()[t] *= lt.dropout_mask.data()[t];
        }

        const Matrix& a = lt.activated;
        switch (layer.activation) {
            case Activation::Identity:
                break;
            case Activation::ReLU:
                for (std::size_t t = 0; t < grad.size(); ++t)
                    if (a.data()[t] <= 0.0) grad.data()[t] = 0.0;
                break;
            case Activation::Sigmoid:
                for (std::size_t t = 0; t < grad.size(); ++t) {
                    const double s = a.data()[t];
                    grad.data()[t] *= s * (1.0 - s);
                }
                break;
            case Activation::Softmax:
                for (std::size_t i = 0; i < grad.rows(); ++i) {
                    double* grow = grad.row_ptr(i);
                    const double* arow = a.row_ptr(i);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < grad.cols(); ++j)
                        dot += grow[j] * arow[j];
                    for (std::size_t j = 0; j < grad.cols(); ++j)
                        grow[j] = arow[j] * (grow[j] - dot);
                }
                break;
        }

        // grad is now dL/dZ for this layer
        LayerGrads& lg = grads.layers[li];
        Matrix dw = matmul_at_b(lt.input, grad);
        for (std::size_t t = 0; t < dw.size(); ++t)
            lg.weights.data()[t] += dw.data()[t];
        for (std::size_t i = 0; i < grad.rows(); ++i) {
            const double* grow = grad.row_ptr(i);
            for (std::size_t j = 0; j < grad.cols(); ++j) lg.biases[j] += grow[j];
        }
        if (li > 0) grad = matmul_a_bt(grad, layer.weights);
    }
    return matmul_a_bt(grad, net.layers.front().weights);
}

}  // namespace s3c2
