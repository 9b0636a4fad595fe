#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "s3c2/clunet.hpp"
#include "s3c2/error.hpp"
#include "s3c2/labnet.hpp"
#include "s3c2/matrix.hpp"

namespace s3c2 {

enum class NmiNorm { ArithmeticMean, GeometricMean };

/// Normalized mutual information between two partitions, in [0,1]. Natural
/// logs; 0*log 0 := 0. Default normalizer is the arithmetic mean of the two
/// entropies; the geometric-mean variant is kept for comparability.
inline double nmi(const std::vector<int>& pred, const std::vector<int>& truth,
                  NmiNorm norm = NmiNorm::ArithmeticMean) {
    if (pred.size() != truth.size())
        fail(ErrKind::Dimension, "nmi: ", pred.size(), " vs ", truth.size(),
             " labels");
    if (pred.empty()) fail(ErrKind::EmptyInput, "nmi: empty partitions");

    int ka = 0, kb = 0;
    for (int v : pred) {
        if (v < 0) fail(ErrKind::InvalidArgument, "nmi: negative label");
        ka = std::max(ka, v + 1);
    }
    for (int v : truth) {
        if (v < 0) fail(ErrKind::InvalidArgument, "nmi: negative label");
        kb = std::max(kb, v + 1);
    }
    const double n = static_cast<double>(pred.size());
    std::vector<double> joint(static_cast<std::size_t>(ka) * kb, 0.0);
    std::vector<double> ca(ka, 0.0), cb(kb, 0.0);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        joint[static_cast<std::size_t>(pred[t]) * kb + truth[t]] += 1.0;
        ca[pred[t]] += 1.0;
        cb[truth[t]] += 1.0;
    }

    double mi = 0.0;
    for (int a = 0; a < ka; ++a)
        for (int b = 0; b < kb; ++b) {
            const double nij = joint[static_cast<std::size_t>(a) * kb + b];
            if (nij > 0.0) mi += (nij / n) * std::log(n * nij / (ca[a] * cb[b]));
        }
    double ha = 0.0, hb = 0.0;
    for (double c : ca)
        if (c > 0.0) ha -= (c / n) * std::log(c / n);
    for (double c : cb)
        if (c > 0.0) hb -= (c / n) * std::log(c / n);

    if (ha == 0.0 && hb == 0.0) return 1.0;  // two identical one-cluster partitions
    const double denom = norm == NmiNorm::ArithmeticMean ? 0.5 * (ha + hb)
                                                         : std::sqrt(ha * hb);
    if (denom == 0.0) return 0.0;  // one side constant: MI is 0
    return std::clamp(mi / denom, 0.0, 1.0);
}

struct LabelingStats {
    double accuracy = 0.0;
    std::optional<double> ml_rate;  // absent when no true-same pair was given
    std::optional<double> cl_rate;  // absent when no true-different pair was given
    std::size_t same_pairs = 0;
    std::size_t diff_pairs = 0;
};

struct EvalPair {
    std::size_t i = 0;
    std::size_t j = 0;
    bool same = false;  // true relation
};

/// Rates from precomputed squared distances: ml_rate is the fraction of
/// true-same pairs with d^2 < T, cl_rate the fraction of true-different
/// pairs with d^2 >= T, accuracy the overall fraction correct.
inline LabelingStats labeling_stats_from_d2(const std::vector<double>& d2,
                                            const std::vector<bool>& same,
                                            double threshold) {
    if (d2.size() != same.size())
        fail(ErrKind::Dimension, "labeling_stats: ", d2.size(), " distances for ",
             same.size(), " relations");
    if (d2.empty()) fail(ErrKind::EmptyInput, "labeling_stats: no evaluation pairs");
    LabelingStats st;
    std::size_t ml_hits = 0, cl_hits = 0;
    for (std::size_t t = 0; t < d2.size(); ++t) {
        const bool predicted_must = d2[t] < threshold;
        if (same[t]) {
            ++st.same_pairs;
            if (predicted_must) ++ml_hits;
        } else {
            ++st.diff_pairs;
            if (!predicted_must) ++cl_hits;
        }
    }
    if (st.same_pairs > 0)
        st.ml_rate = static_cast<double>(ml_hits) / static_cast<double>(st.same_pairs);
    if (st.diff_pairs > 0)
        st.cl_rate = static_cast<double>(cl_hits) / static_cast<double>(st.diff_pairs);
    st.accuracy = static_cast<double>(ml_hits + cl_hits) /
                  static_cast<double>(d2.size());
    return st;
}

inline LabelingStats labeling_stats(const LabNetModel& model, const Dataset& ds,
                                    const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) fail(ErrKind::EmptyInput, "labeling_stats: no evaluation pairs");
    const Matrix emb = embed(model, ds.features);
    std::vector<double> d2(pairs.size());
    std::vector<bool> same(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        if (pairs[t].i >= ds.size() || pairs[t].j >= ds.size())
            fail(ErrKind::InvalidArgument, "labeling_stats: pair index out of range");
        const double* a = emb.row_ptr(pairs[t].i);
        const double* b = emb.row_ptr(pairs[t].j);
        double acc = 0.0;
        for (std::size_t c = 0; c < emb.cols(); ++c) {
            const double diff = a[c] - b[c];
            acc += diff * diff;
        }
        d2[t] = acc;
        same[t] = pairs[t].same;
    }
    return labeling_stats_from_d2(d2, same, model.threshold_T);
}

struct ClassMass {
    std::vector<double> p_hat;  // column means of the posterior matrix
    double sum_sq = 0.0;        // sum_k p_hat_k^2
    double tsallis_s2 = 0.0;    // 1 - sum_sq, the index-2 Tsallis entropy
};

/// Estimated class masses and their index-2 Tsallis entropy. sum_sq equals
/// the all-ordered-pairs mean of p^s, which is what ties the T = 0 regime of
/// the misclassification loss to entropy regularization.
inline ClassMass class_mass_and_tsallis(const Matrix& posteriors) {
    if (posteriors.rows() == 0)
        fail(ErrKind::EmptyInput, "class_mass_and_tsallis: no rows");
    for (std::size_t i = 0; i < posteriors.rows(); ++i)
        detail::check_simplex(posteriors.row_ptr(i), posteriors.cols(),
                              "class_mass_and_tsallis");
    ClassMass cm;
    cm.p_hat.assign(posteriors.cols(), 0.0);
    for (std::size_t i = 0; i < posteriors.rows(); ++i) {
        const double* row = posteriors.row_ptr(i);
        for (std::size_t j = 0; j < posteriors.cols(); ++j) cm.p_hat[j] += row[j];
    }
    const double inv_n = 1.0 / static_cast<double>(posteriors.rows());
    for (double& v : cm.p_hat) v *= inv_n;
    for (double v : cm.p_hat) cm.sum_sq += v * v;
    cm.tsallis_s2 = 1.0 - cm.sum_sq;
    return cm;
}

inline double pearson_correlation(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
    if (xs.size() != ys.size())
        fail(ErrKind::Dimension, "pearson: ", xs.size(), " vs ", ys.size());
    if (xs.size() < 2) fail(ErrKind::EmptyInput, "pearson: need at least 2 samples");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        mx += xs[t];
        my += ys[t];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const double dx = xs[t] - mx;
        const double dy = ys[t] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        fail(ErrKind::InvalidArgument, "pearson: constant vector");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace s3c2
