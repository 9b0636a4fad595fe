#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "s3c2/constraints.hpp"
#include "s3c2/dataset.hpp"
#include "s3c2/labnet.hpp"
#include "s3c2/matrix.hpp"
#include "s3c2/nn.hpp"
#include "s3c2/optimizer.hpp"

// Stage 2 of S3C2: a Siamese softmax classifier over K clusters trained to
// minimize the expected number of misclassified pairs, using the given
// constraints plus pairs labeled on demand by the frozen stage-1 model.

namespace s3c2 {

struct CluNetConfig {
    std::size_t hidden = 256;  // two ReLU hidden layers with dropout
    double dropout = 0.1;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t given_per_batch = 100;
    std::size_t unlabeled_per_batch = 1000;
};

struct CluNetModel {
    Network classifier;  // D -> hidden -> hidden -> K, softmax output
    std::size_t k = 0;
    OptimizerState opt;
};

inline CluNetModel make_clunet(std::size_t input_dim, std::size_t k,
                               const CluNetConfig& cfg, Rng& rng) {
    if (k < 2) fail(ErrKind::InvalidArgument, "clunet: need k >= 2, got ", k);
    CluNetModel model;
    model.classifier = make_network(
        {input_dim, cfg.hidden, cfg.hidden, k},
        {Activation::ReLU, Activation::ReLU, Activation::Softmax},
        {cfg.dropout, cfg.dropout, 0.0}, rng);
    model.k = k;
    model.opt = cfg.optimizer == OptimizerKind::Adam
                    ? OptimizerState::adam(cfg.learning_rate)
                    : OptimizerState::sgd(cfg.learning_rate);
    return model;
}

/// Class posteriors p(k|x), one simplex row per point. Deterministic
/// (inference mode, dropout off).
inline Matrix posterior(const CluNetModel& model, const Matrix& points) {
    return infer(model.classifier, points);
}

namespace detail {

inline void check_simplex(const double* p, std::size_t k, const char* what) {
    double sum = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        if (!(p[t] >= -1e-9 && p[t] <= 1.0 + 1e-9))
            fail(ErrKind::InvalidArgument, what, ": entry ", p[t],
                 " outside [0,1]");
        sum += p[t];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        fail(ErrKind::InvalidArgument, what, ": entries sum to ", sum);
}

}  // namespace detail

/// p^s = sum_k p_k q_k, the probability the pair lands in the same cluster
/// under independent assignment; 1 - p^s is the different-cluster probability.
inline double same_cluster_prob(const std::vector<double>& p,
                                const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty())
        fail(ErrKind::Dimension, "same_cluster_prob: sizes ", p.size(), " vs ",
             q.size());
    detail::check_simplex(p.data(), p.size(), "same_cluster_prob: p");
    detail::check_simplex(q.data(), q.size(), "same_cluster_prob: q");
    double s = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) s += p[t] * q[t];
    return s;
}

enum class PairSource { Given, Predicted };

/// A training batch of pairs; all vectors are aligned by row.
struct PairBatch {
    Matrix left;
    Matrix right;
    std::vector<LinkLabel> link;
    std::vector<PairSource> source;

    std::size_t size() const { return link.size(); }

    void validate() const {
        if (left.rows() != right.rows() || left.cols() != right.cols() ||
            link.size() != left.rows() || source.size() != link.size())
            fail(ErrKind::Dimension, "pair batch rows are not aligned");
    }
};

struct CluNetLossResult {
    double loss = 0.0;
    NetworkGrads grads;
};

/// Misclassification loss: mean over pairs of [must: 1 - p^s, cannot: p^s].
/// Each term lies in [0,1], so the loss does too.
inline CluNetLossResult misclassification_loss(const CluNetModel& model,
                                               const Matrix& left, const Matrix& right,
                                               const std::vector<LinkLabel>& labels,
                                               Mode mode, Rng& rng) {
    detail::check_pair_batch(left, right, labels);
    const std::size_t n = left.rows();

    ForwardTape tape_l, tape_r;
    Matrix p = forward(model.classifier, left, mode, rng, &tape_l);
    Matrix q = forward(model.classifier, right, mode, rng, &tape_r);

    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    Matrix grad_p(n, model.k), grad_q(n, model.k);
    for (std::size_t i = 0; i < n; ++i) {
        const double* pi = p.row_ptr(i);
        const double* qi = q.row_ptr(i);
        double s = 0.0;
        for (std::size_t t = 0; t < model.k; ++t) s += pi[t] * qi[t];
        const double sign = labels[i] == LinkLabel::Must ? -1.0 : 1.0;
        loss += labels[i] == LinkLabel::Must ? 1.0 - s : s;
        double* gp = grad_p.row_ptr(i);
        double* gq = grad_q.row_ptr(i);
        for (std::size_t t = 0; t < model.k; ++t) {
            gp[t] = sign * inv_n * qi[t];
            gq[t] = sign * inv_n * pi[t];
        }
    }
    loss *= inv_n;

    CluNetLossResult res;
    res.loss = loss;
    res.grads = zero_grads(model.classifier);
    backward(model.classifier, tape_l, grad_p, res.grads);
    backward(model.classifier, tape_r, grad_q, res.grads);
    if (!std::isfinite(res.loss))
        fail(ErrKind::State, "misclassification loss is not finite");
    return res;
}

inline CluNetLossResult misclassification_loss(const CluNetModel& model,
                                               const PairBatch& batch, Mode mode,
                                               Rng& rng) {
    batch.validate();
    return misclassification_loss(model, batch.left, batch.right, batch.link, mode, rng);
}

/// Labels a pair of point indices for clustering training.
using PairLabeler = std::function<LinkLabel(std::size_t, std::size_t)>;

/// Frozen-labnet labeler: embeds all points once, then thresholds squared
/// distances against the model's T. Safe to call from anywhere once built.
inline PairLabeler labnet_labeler(const LabNetModel& labnet, const Matrix& points) {
    auto emb = std::make_shared<Matrix>(embed(labnet, points));
    const double threshold = labnet.threshold_T;
    return [emb, threshold](std::size_t i, std::size_t j) {
        const double* a = emb->row_ptr(i);
        const double* b = emb->row_ptr(j);
        double d2 = 0.0;
        for (std::size_t t = 0; t < emb->cols(); ++t) {
            const double diff = a[t] - b[t];
            d2 += diff * diff;
        }
        return d2 < threshold ? LinkLabel::Must : LinkLabel::Cannot;
    };
}

/// True-label oracle, for the paired oracle-vs-model comparison.
inline PairLabeler oracle_labeler(const Dataset& ds) {
    if (!ds.true_labels)
        fail(ErrKind::InvalidArgument, "oracle_labeler: dataset has no labels");
    auto labels = std::make_shared<std::vector<int>>(*ds.true_labels);
    return [labels](std::size_t i, std::size_t j) {
        return (*labels)[i] == (*labels)[j] ? LinkLabel::Must : LinkLabel::Cannot;
    };
}

struct CluNetTrace {
    std::vector<double> epoch_loss;
};

/// One epoch = ceil(|L| / given_per_batch) batches over the shuffled given
/// pairs; each batch adds unlabeled_per_batch pairs sampled from U and
/// labeled by the (frozen) labeler. Fewer given pairs than a batch needs are
/// drawn with replacement.
inline CluNetTrace train_clunet(CluNetModel& model, const Dataset& ds,
                                const ConstraintSet& given, const PairLabeler& labeler,
                                const CluNetConfig& cfg, Rng& rng) {
    if (cfg.given_per_batch == 0)
        fail(ErrKind::InvalidArgument, "train_clunet: given_per_batch 0");
    if (given.n_points() != ds.size())
        fail(ErrKind::InvalidArgument, "train_clunet: constraint set covers ",
             given.n_points(), " points, dataset has ", ds.size());
    struct Item {
        std::size_t i, j;
        LinkLabel label;
    };
    std::vector<Item> items;
    for (const auto& [i, j] : given.must_pairs()) items.push_back({i, j, LinkLabel::Must});
    for (const auto& [i, j] : given.cannot_pairs())
        items.push_back({i, j, LinkLabel::Cannot});
    if (items.empty())
        fail(ErrKind::EmptyInput, "train_clunet: no non-reflexive given constraints");

    CluNetTrace trace;
    trace.epoch_loss.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(items.begin(), items.end(), rng);
        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        const std::size_t n_batches =
            (items.size() + cfg.given_per_batch - 1) / cfg.given_per_batch;
        for (std::size_t b = 0; b < n_batches; ++b) {
            std::vector<std::size_t> li, ri;
            PairBatch batch;
            if (items.size() >= cfg.given_per_batch) {
                const std::size_t start = b * cfg.given_per_batch;
                const std::size_t count =
                    std::min(cfg.given_per_batch, items.size() - start);
                for (std::size_t t = 0; t < count; ++t) {
                    li.push_back(items[start + t].i);
                    ri.push_back(items[start + t].j);
                    batch.link.push_back(items[start + t].label);
                }
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
                for (std::size_t t = 0; t < cfg.given_per_batch; ++t) {
                    const Item& it = items[pick(rng)];
                    li.push_back(it.i);
                    ri.push_back(it.j);
                    batch.link.push_back(it.label);
                }
            }
            batch.source.assign(batch.link.size(), PairSource::Given);
            if (cfg.unlabeled_per_batch > 0) {
                const auto pairs = sample_unlabeled_pairs(given, ds.size(),
                                                          cfg.unlabeled_per_batch, rng);
                for (const auto& [i, j] : pairs) {
                    li.push_back(i);
                    ri.push_back(j);
                    batch.link.push_back(labeler(i, j));
                    batch.source.push_back(PairSource::Predicted);
                }
            }
            batch.left = gather_rows(ds.features, li);
            batch.right = gather_rows(ds.features, ri);
            CluNetLossResult res = misclassification_loss(model, batch, Mode::Train, rng);
            optimizer_step(model.opt, model.classifier, res.grads);
            epoch_loss += res.loss * static_cast<double>(batch.size());
            epoch_pairs += batch.size();
        }
        trace.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_pairs));
    }
    return trace;
}

inline CluNetTrace train_clunet(CluNetModel& model, const Dataset& ds,
                                const ConstraintSet& given, const LabNetModel& labnet,
                                const CluNetConfig& cfg, Rng& rng) {
    return train_clunet(model, ds, given, labnet_labeler(labnet, ds.features), cfg, rng);
}

inline void save_clunet(const CluNetModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "s3c2clunet 1\n";
    os << "k " << model.k << "\n";
    save_network(os, model.classifier);
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline CluNetModel load_clunet(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    detail::expect_keyword(is, "s3c2clunet");
    if (detail::read_size(is, "format version") != 1)
        fail(ErrKind::Parse, "unsupported s3c2clunet version");
    detail::expect_keyword(is, "k");
    CluNetModel model;
    model.k = detail::read_size(is, "k");
    model.classifier = load_network(is);
    if (model.classifier.out_dim() != model.k)
        fail(ErrKind::Parse, "clunet checkpoint: k ", model.k,
             " does not match network output ", model.classifier.out_dim());
    return model;
}

/// argmax_k p(k|x) per point; ties break to the lowest cluster index.
inline std::vector<int> assign(const CluNetModel& model, const Matrix& points) {
    const Matrix post = posterior(model, points);
    std::vector<int> out(post.rows());
    for (std::size_t i = 0; i < post.rows(); ++i) {
        const double* row = post.row_ptr(i);
        std::size_t best = 0;
        for (std::size_t t = 1; t < post.cols(); ++t)
            if (row[t] > row[best]) best = t;
        out[i] = static_cast<int>(best);
    }
    return out;
}

}  // namespace s3c2
