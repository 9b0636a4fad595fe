#pragma once

// Test-only oracles: a scalar re-implementation of the forward pass and the
// batch losses (plain per-element loops, no shared code with the library
// kernels) plus a central finite-difference gradient checker. These stay
// independent of the implementation paths they verify.

#include <cmath>
#include <functional>
#include <vector>

#include "s3c2/clunet.hpp"
#include "s3c2/labnet.hpp"
#include "s3c2/matrix.hpp"
#include "s3c2/nn.hpp"

namespace oracle {

using s3c2::Activation;
using s3c2::LinkLabel;
using s3c2::Matrix;
using s3c2::Network;

inline Matrix mat(std::size_t rows, std::size_t cols, std::vector<double> values) {
    Matrix m(rows, cols);
    for (std::size_t t = 0; t < values.size(); ++t) m.data()[t] = values[t];
    return m;
}

// ---- scalar forward pass (dropout-free networks only) ----

inline std::vector<double> naive_layer(const s3c2::DenseLayer& layer,
                                       const std::vector<double>& x) {
    std::vector<double> z(layer.out_dim(), 0.0);
    for (std::size_t j = 0; j < layer.out_dim(); ++j) {
        double acc = layer.biases[j];
        for (std::size_t i = 0; i < layer.in_dim(); ++i)
            acc += x[i] * layer.weights(i, j);
        z[j] = acc;
    }
    switch (layer.activation) {
        case Activation::Identity:
            break;
        case Activation::ReLU:
            for (double& v : z) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Sigmoid:
            for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::Softmax: {
            double mx = z[0];
            for (double v : z) mx = std::max(mx, v);
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (double& v : z) v /= sum;
            break;
        }
    }
    return z;
}

inline std::vector<double> naive_forward(const Network& net,
                                         const std::vector<double>& x) {
    std::vector<double> cur = x;
    for (const auto& layer : net.layers) cur = naive_layer(layer, cur);
    return cur;
}

inline std::vector<double> row_of(const Matrix& m, std::size_t i) {
    return std::vector<double>(m.row_ptr(i), m.row_ptr(i) + m.cols());
}

// ---- scalar batch losses ----

inline double naive_contrastive_loss(const Network& encoder, const Matrix& left,
                                     const Matrix& right,
                                     const std::vector<LinkLabel>& labels) {
    double must_sum = 0.0, cannot_sum = 0.0;
    for (std::size_t p = 0; p < left.rows(); ++p) {
        const std::vector<double> u = naive_forward(encoder, row_of(left, p));
        const std::vector<double> v = naive_forward(encoder, row_of(right, p));
        double d2 = 0.0;
        for (std::size_t t = 0; t < u.size(); ++t)
            d2 += (u[t] - v[t]) * (u[t] - v[t]);
        const double d = std::sqrt(d2);
        if (labels[p] == LinkLabel::Must) {
            must_sum += d * d;
        } else {
            const double m = std::max(1.0 - d, 0.0);
            cannot_sum += m * m;
        }
    }
    return (must_sum + cannot_sum) / static_cast<double>(left.rows());
}

inline double naive_reconstruction_loss(const Network& encoder, const Network& decoder,
                                        const Matrix& points) {
    double sum = 0.0;
    for (std::size_t p = 0; p < points.rows(); ++p) {
        const std::vector<double> x = row_of(points, p);
        const std::vector<double> r = naive_forward(decoder, naive_forward(encoder, x));
        for (std::size_t t = 0; t < x.size(); ++t) sum += (r[t] - x[t]) * (r[t] - x[t]);
    }
    return sum / static_cast<double>(points.rows());
}

inline double naive_misclassification_loss(const Network& classifier, const Matrix& left,
                                           const Matrix& right,
                                           const std::vector<LinkLabel>& labels) {
    double sum = 0.0;
    for (std::size_t p = 0; p < left.rows(); ++p) {
        const std::vector<double> pk = naive_forward(classifier, row_of(left, p));
        const std::vector<double> qk = naive_forward(classifier, row_of(right, p));
        double ps = 0.0;
        for (std::size_t t = 0; t < pk.size(); ++t) ps += pk[t] * qk[t];
        sum += labels[p] == LinkLabel::Must ? 1.0 - ps : ps;
    }
    return sum / static_cast<double>(left.rows());
}

/// Kahan-compensated mean of p^s over all ordered pairs of posterior rows;
/// the left side of the class-mass identity.
inline double naive_pairwise_ps_mean(const Matrix& posteriors) {
    const std::size_t n = posteriors.rows();
    double sum = 0.0, comp = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            double ps = 0.0;
            for (std::size_t t = 0; t < posteriors.cols(); ++t)
                ps += posteriors(a, t) * posteriors(b, t);
            const double y = ps - comp;
            const double s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
    return sum / (static_cast<double>(n) * static_cast<double>(n));
}

// ---- finite-difference gradient checking ----

template <typename Fn>
void for_each_param(Network& net, Fn&& fn) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        for (std::size_t t = 0; t < net.layers[li].weights.size(); ++t)
            fn(net.layers[li].weights.data()[t], li, true, t);
        for (std::size_t t = 0; t < net.layers[li].biases.size(); ++t)
            fn(net.layers[li].biases[t], li, false, t);
    }
}

struct GradCheck {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    bool ok(double rtol = 1e-4) const { return checked > 0 && max_rel_err < rtol; }
};

/// Central differences with step eps against the analytic grads. Relative
/// error per parameter, with an absolute floor for near-zero pairs.
inline GradCheck finite_diff_check(Network& net, const s3c2::NetworkGrads& analytic,
                                   const std::function<double()>& loss,
                                   double eps = 1e-5, double atol = 1e-8) {
    GradCheck res;
    for_each_param(net, [&](double& p, std::size_t li, bool is_weight, std::size_t t) {
        const double saved = p;
        p = saved + eps;
        const double up = loss();
        p = saved - eps;
        const double down = loss();
        p = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double exact = is_weight ? analytic.layers[li].weights.data()[t]
                                       : analytic.layers[li].biases[t];
        const double diff = std::abs(numeric - exact);
        if (diff > atol) {
            const double rel = diff / std::max(std::abs(numeric), std::abs(exact));
            res.max_rel_err = std::max(res.max_rel_err, rel);
        }
        ++res.checked;
    });
    return res;
}

/// Checks two networks that contribute to the same loss (encoder + decoder).
inline GradCheck finite_diff_check2(Network& a, const s3c2::NetworkGrads& ga, Network& b,
                                    const s3c2::NetworkGrads& gb,
                                    const std::function<double()>& loss,
                                    double eps = 1e-5) {
    GradCheck ra = finite_diff_check(a, ga, loss, eps);
    GradCheck rb = finite_diff_check(b, gb, loss, eps);
    ra.max_rel_err = std::max(ra.max_rel_err, rb.max_rel_err);
    ra.checked += rb.checked;
    return ra;
}

/// ReLU kinks, the contrastive margin, and d = 0 all break central
/// differences; reject configurations that evaluate too close to them.
inline bool contrastive_config_is_safe(const s3c2::LabNetModel& model,
                                       const Matrix& left, const Matrix& right,
                                       double guard = 1e-3) {
    const Matrix eu = s3c2::embed(model, left);
    const Matrix ev = s3c2::embed(model, right);
    const std::vector<double> d = s3c2::euclidean_pair_distance(eu, ev);
    for (double v : d)
        if (v < guard || std::abs(1.0 - v) < guard) return false;
    return true;
}

inline bool relu_preacts_are_safe(const Network& net, const Matrix& inputs,
                                  double guard = 1e-4) {
    Matrix x = inputs;
    for (const auto& layer : net.layers) {
        Matrix z = matmul(x, layer.weights);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) {
                z(i, j) += layer.biases[j];
                if (layer.activation == Activation::ReLU &&
                    std::abs(z(i, j)) < guard)
                    return false;
            }
        s3c2::detail::apply_activation(layer.activation, z);
        x = std::move(z);
    }
    return true;
}

}  // namespace oracle
