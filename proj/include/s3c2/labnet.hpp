#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "s3c2/checkpoint.hpp"
#include "s3c2/constraints.hpp"
#include "s3c2/dataset.hpp"
#include "s3c2/error.hpp"
#include "s3c2/matrix.hpp"
#include "s3c2/nn.hpp"
#include "s3c2/optimizer.hpp"

// Stage 1 of S3C2: a Siamese labeling network trained with a margin-1
// contrastive loss on the given constraints (optionally plus a reconstruction
// term on unlabeled points). Once trained it labels any pair must/cannot by
// thresholding the squared embedding distance against T.

namespace s3c2 {

struct LabNetConfig {
    std::size_t hidden = 256;     // two ReLU hidden layers of this width
    std::size_t embed_dim = 256;  // sigmoid output, h(x) in [0,1]^embed_dim
    double dropout = 0.1;
    double threshold = 0.3;       // prediction threshold T on d^2
    double lambda = 0.05;         // reconstruction trade-off
    bool semi_supervised = false;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    std::size_t batch_size = 256;
    std::size_t epochs = 50;
};

struct LabNetModel {
    Network encoder;                 // D -> hidden -> hidden -> embed_dim
    std::optional<Network> decoder;  // mirror, present iff semi-supervised
    double threshold_T = 0.3;
    double lambda = 0.05;
    OptimizerState opt_encoder;
    OptimizerState opt_decoder;
};

inline LabNetModel make_labnet(std::size_t input_dim, const LabNetConfig& cfg, Rng& rng) {
    // T = 0 is the all-cannot limiting regime and is deliberately allowed
    if (!(cfg.threshold >= 0.0 && cfg.threshold < 1.0))
        fail(ErrKind::InvalidArgument, "labnet: threshold ", cfg.threshold,
             " outside [0,1)");
    if (cfg.lambda < 0.0)
        fail(ErrKind::InvalidArgument, "labnet: lambda must be >= 0");
    LabNetModel model;
    model.encoder = make_network(
        {input_dim, cfg.hidden, cfg.hidden, cfg.embed_dim},
        {Activation::ReLU, Activation::ReLU, Activation::Sigmoid},
        {cfg.dropout, cfg.dropout, 0.0}, rng);
    if (cfg.semi_supervised)
        model.decoder = make_network(
            {cfg.embed_dim, cfg.hidden, cfg.hidden, input_dim},
            {Activation::ReLU, Activation::ReLU, Activation::Identity},
            {0.0, 0.0, 0.0}, rng);
    model.threshold_T = cfg.threshold;
    model.lambda = cfg.lambda;
    model.opt_encoder = cfg.optimizer == OptimizerKind::Adam
                            ? OptimizerState::adam(cfg.learning_rate)
                            : OptimizerState::sgd(cfg.learning_rate);
    model.opt_decoder = model.opt_encoder;
    return model;
}

inline Matrix embed(const LabNetModel& model, const Matrix& points) {
    return infer(model.encoder, points);
}

struct LabNetLossResult {
    double loss = 0.0;
    double contrastive = 0.0;
    double reconstruction = 0.0;
    NetworkGrads encoder_grads;
    std::optional<NetworkGrads> decoder_grads;
};

namespace detail {

inline void check_pair_batch(const Matrix& left, const Matrix& right,
                             const std::vector<LinkLabel>& labels) {
    if (left.rows() == 0) fail(ErrKind::EmptyInput, "pair batch is empty");
    if (!left.same_shape(right))
        fail(ErrKind::Dimension, "pair batch: left ", left.rows(), "x", left.cols(),
             " vs right ", right.rows(), "x", right.cols());
    if (labels.size() != left.rows())
        fail(ErrKind::Dimension, "pair batch: ", labels.size(), " labels for ",
             left.rows(), " pairs");
    for (LinkLabel l : labels)
        if (l == LinkLabel::Unlabeled)
            fail(ErrKind::InvalidArgument, "pair batch: unlabeled pair in batch");
}

}  // namespace detail

/// Margin-1 contrastive loss over a batch of pairs:
///   mean over pairs of [must: d^2, cannot: max{1-d, 0}^2]
/// with d the Euclidean distance between the twin embeddings. Gradients of
/// both twins accumulate into the shared encoder weights.
inline LabNetLossResult contrastive_loss(const LabNetModel& model, const Matrix& left,
                                         const Matrix& right,
                                         const std::vector<LinkLabel>& labels,
                                         Mode mode, Rng& rng) {
    detail::check_pair_batch(left, right, labels);
    const std::size_t n = left.rows();

    ForwardTape tape_l, tape_r;
    Matrix eu = forward(model.encoder, left, mode, rng, &tape_l);
    Matrix ev = forward(model.encoder, right, mode, rng, &tape_r);

    const std::vector<double> dist = euclidean_pair_distance(eu, ev);
    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    Matrix grad_u(n, eu.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double d = dist[i];
        const double* u = eu.row_ptr(i);
        const double* v = ev.row_ptr(i);
        double* g = grad_u.row_ptr(i);
        if (labels[i] == LinkLabel::Must) {
            loss += d * d;
            for (std::size_t j = 0; j < eu.cols(); ++j)
                g[j] = 2.0 * inv_n * (u[j] - v[j]);
        } else if (d < 1.0) {
            const double margin = 1.0 - d;
            loss += margin * margin;
            if (d > 1e-12) {
                const double c = -2.0 * inv_n * margin / d;
                for (std::size_t j = 0; j < eu.cols(); ++j) g[j] = c * (u[j] - v[j]);
            }
        }
    }
    loss *= inv_n;

    Matrix grad_v = grad_u;
    for (double& g : grad_v.data()) g = -g;

    LabNetLossResult res;
    res.loss = res.contrastive = loss;
    res.encoder_grads = zero_grads(model.encoder);
    backward(model.encoder, tape_l, grad_u, res.encoder_grads);
    backward(model.encoder, tape_r, grad_v, res.encoder_grads);
    if (!std::isfinite(res.loss))
        fail(ErrKind::State, "contrastive loss is not finite");
    return res;
}

/// Mean over points of ||g(h(x)) - x||^2. The paper's pair-sum over X x X
/// equals twice this per-point mean; the factor is folded into lambda.
inline LabNetLossResult reconstruction_loss(const LabNetModel& model,
                                            const Matrix& points, Mode mode,
                                            Rng& rng) {
    if (!model.decoder)
        fail(ErrKind::State, "reconstruction_loss: model has no decoder");
    if (points.rows() == 0) fail(ErrKind::EmptyInput, "reconstruction batch is empty");

    ForwardTape tape_enc, tape_dec;
    Matrix h = forward(model.encoder, points, mode, rng, &tape_enc);
    Matrix r = forward(*model.decoder, h, mode, rng, &tape_dec);

    const double inv_m = 1.0 / static_cast<double>(points.rows());
    double loss = 0.0;
    Matrix grad_r(r.rows(), r.cols());
    for (std::size_t t = 0; t < r.size(); ++t) {
        const double diff = r.data()[t] - points.data()[t];
        loss += diff * diff;
        grad_r.data()[t] = 2.0 * inv_m * diff;
    }
    loss *= inv_m;

    LabNetLossResult res;
    res.loss = res.reconstruction = loss;
    res.decoder_grads = zero_grads(*model.decoder);
    Matrix grad_h = backward(*model.decoder, tape_dec, grad_r, *res.decoder_grads);
    res.encoder_grads = zero_grads(model.encoder);
    backward(model.encoder, tape_enc, grad_h, res.encoder_grads);
    if (!std::isfinite(res.loss))
        fail(ErrKind::State, "reconstruction loss is not finite");
    return res;
}

/// contrastive + lambda * reconstruction, the reconstruction taken over
/// recon_points (the points appearing in the batch). lambda = 0 reduces to
/// the supervised variant and never touches the decoder.
inline LabNetLossResult total_loss(const LabNetModel& model, const Matrix& left,
                                   const Matrix& right,
                                   const std::vector<LinkLabel>& labels,
                                   const Matrix& recon_points, Mode mode, Rng& rng) {
    LabNetLossResult res = contrastive_loss(model, left, right, labels, mode, rng);
    if (model.lambda == 0.0) return res;

    LabNetLossResult rec = reconstruction_loss(model, recon_points, mode, rng);
    res.reconstruction = rec.reconstruction;
    res.loss = res.contrastive + model.lambda * rec.reconstruction;
    rec.encoder_grads.scale(model.lambda);
    res.encoder_grads.add(rec.encoder_grads);
    rec.decoder_grads->scale(model.lambda);
    res.decoder_grads = std::move(rec.decoder_grads);
    return res;
}

struct LabNetEpochStats {
    double loss = 0.0;
    double contrastive = 0.0;
    double reconstruction = 0.0;
};

struct LabNetTrace {
    std::vector<LabNetEpochStats> epochs;
};

/// Trains on shuffled batches of the non-reflexive given constraints. With a
/// decoder present, each batch additionally samples batch_size unlabeled
/// point indices and the reconstruction term runs over the unique points of
/// the batch. Deterministic given the rng state.
inline LabNetTrace train_labnet(LabNetModel& model, const Dataset& ds,
                                const ConstraintSet& cs, std::size_t epochs,
                                std::size_t batch_size, Rng& rng) {
    if (batch_size == 0) fail(ErrKind::InvalidArgument, "train_labnet: batch_size 0");
    if (cs.n_points() != ds.size())
        fail(ErrKind::InvalidArgument, "train_labnet: constraint set covers ",
             cs.n_points(), " points, dataset has ", ds.size());
    struct Item {
        std::size_t i, j;
        LinkLabel label;
    };
    std::vector<Item> items;
    for (const auto& [i, j] : cs.must_pairs()) items.push_back({i, j, LinkLabel::Must});
    for (const auto& [i, j] : cs.cannot_pairs())
        items.push_back({i, j, LinkLabel::Cannot});
    if (items.empty())
        fail(ErrKind::EmptyInput, "train_labnet: no non-reflexive constraints");

    const bool semi = model.decoder.has_value() && model.lambda > 0.0;
    LabNetTrace trace;
    trace.epochs.reserve(epochs);
    std::uniform_int_distribution<std::size_t> pick_point(0, ds.size() - 1);

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(items.begin(), items.end(), rng);
        LabNetEpochStats stats;
        std::size_t total_pairs = 0;
        for (std::size_t start = 0; start < items.size(); start += batch_size) {
            const std::size_t count = std::min(batch_size, items.size() - start);
            std::vector<std::size_t> li(count), ri(count);
            std::vector<LinkLabel> labels(count);
            for (std::size_t t = 0; t < count; ++t) {
                li[t] = items[start + t].i;
                ri[t] = items[start + t].j;
                labels[t] = items[start + t].label;
            }
            const Matrix left = gather_rows(ds.features, li);
            const Matrix right = gather_rows(ds.features, ri);

            LabNetLossResult res;
            if (semi) {
                std::vector<std::size_t> point_idx;
                point_idx.reserve(2 * count + batch_size);
                point_idx.insert(point_idx.end(), li.begin(), li.end());
                point_idx.insert(point_idx.end(), ri.begin(), ri.end());
                for (std::size_t t = 0; t < batch_size; ++t)
                    point_idx.push_back(pick_point(rng));
                std::sort(point_idx.begin(), point_idx.end());
                point_idx.erase(std::unique(point_idx.begin(), point_idx.end()),
                                point_idx.end());
                const Matrix recon_points = gather_rows(ds.features, point_idx);
                res = total_loss(model, left, right, labels, recon_points,
                                 Mode::Train, rng);
            } else {
                res = contrastive_loss(model, left, right, labels, Mode::Train, rng);
            }
            optimizer_step(model.opt_encoder, model.encoder, res.encoder_grads);
            if (res.decoder_grads)
                optimizer_step(model.opt_decoder, *model.decoder, *res.decoder_grads);

            const double w = static_cast<double>(count);
            stats.loss += w * res.loss;
            stats.contrastive += w * res.contrastive;
            stats.reconstruction += w * res.reconstruction;
            total_pairs += count;
        }
        stats.loss /= static_cast<double>(total_pairs);
        stats.contrastive /= static_cast<double>(total_pairs);
        stats.reconstruction /= static_cast<double>(total_pairs);
        trace.epochs.push_back(stats);
    }
    return trace;
}

inline double squared_embedding_distance(const LabNetModel& model, const Matrix& x,
                                         const Matrix& y) {
    const std::vector<double> d = euclidean_pair_distance(embed(model, x), embed(model, y));
    return d[0] * d[0];
}

/// must iff d(x,y)^2 < T.
inline LinkLabel predict_link(const LabNetModel& model, const Matrix& x,
                              const Matrix& y) {
    return squared_embedding_distance(model, x, y) < model.threshold_T
               ? LinkLabel::Must
               : LinkLabel::Cannot;
}

/// Labels every unlabeled pair by thresholding the squared embedding
/// distance; given labels are never overridden. The result partitions X^2.
inline ConstraintSet augment_constraints(const LabNetModel& model, const Dataset& ds,
                                         const ConstraintSet& cs) {
    if (cs.n_points() != ds.size())
        fail(ErrKind::InvalidArgument, "augment_constraints: set covers ",
             cs.n_points(), " points, dataset has ", ds.size());
    ConstraintSet out = cs;
    const Matrix emb = embed(model, ds.features);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* ei = emb.row_ptr(i);
        for (std::size_t j = i + 1; j < ds.size(); ++j) {
            if (out.label(i, j) != LinkLabel::Unlabeled) continue;
            const double* ej = emb.row_ptr(j);
            double d2 = 0.0;
            for (std::size_t t = 0; t < emb.cols(); ++t) {
                const double diff = ei[t] - ej[t];
                d2 += diff * diff;
            }
            if (d2 < model.threshold_T)
                out.add_must(i, j);
            else
                out.add_cannot(i, j);
        }
    }
    return out;
}

/// Checkpoint: small header (T, lambda, variant flag) plus the network(s).
/// Optimizer state is not persisted; a reloaded model starts a fresh one.
inline void save_labnet(const LabNetModel& model, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "s3c2labnet 1\n";
    os << "threshold " << detail::format_double(model.threshold_T) << "\n";
    os << "lambda " << detail::format_double(model.lambda) << "\n";
    os << "decoder " << (model.decoder ? 1 : 0) << "\n";
    save_network(os, model.encoder);
    if (model.decoder) save_network(os, *model.decoder);
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline LabNetModel load_labnet(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    detail::expect_keyword(is, "s3c2labnet");
    if (detail::read_size(is, "format version") != 1)
        fail(ErrKind::Parse, "unsupported s3c2labnet version");
    LabNetModel model;
    detail::expect_keyword(is, "threshold");
    model.threshold_T = detail::read_double(is, "threshold");
    detail::expect_keyword(is, "lambda");
    model.lambda = detail::read_double(is, "lambda");
    detail::expect_keyword(is, "decoder");
    const std::size_t has_decoder = detail::read_size(is, "decoder flag");
    model.encoder = load_network(is);
    if (has_decoder) model.decoder = load_network(is);
    return model;
}

/// Constraints text format with the extra given/predicted marker column.
inline void save_augmented_constraints(const ConstraintSet& augmented,
                                       const ConstraintSet& given,
                                       const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    for (const auto& [i, j] : augmented.must_pairs())
        os << i << " " << j << " M "
           << (given.label(i, j) != LinkLabel::Unlabeled ? "given" : "predicted")
           << "\n";
    for (const auto& [i, j] : augmented.cannot_pairs())
        os << i << " " << j << " C "
           << (given.label(i, j) != LinkLabel::Unlabeled ? "given" : "predicted")
           << "\n";
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

}  // namespace s3c2
