#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "s3c2/error.hpp"
#include "s3c2/matrix.hpp"
#include "s3c2/rng.hpp"

namespace s3c2 {

struct Dataset {
    Matrix features;                                // n x D
    std::optional<std::vector<int>> true_labels;    // class ids in 0..k-1
    int k = 0;                                      // cluster count (0 = unknown)

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    void validate() const {
        if (true_labels && true_labels->size() != size())
            fail(ErrKind::Dimension, "dataset: ", true_labels->size(),
                 " labels for ", size(), " rows");
        if (!features.all_finite())
            fail(ErrKind::InvalidArgument, "dataset: non-finite feature value");
    }
};

enum class NormalizationKind { MinMax, ZScore };

/// Per-column normalization fitted on one dataset and reusable on another
/// (e.g. fitted on the train split, applied to the test split).
struct NormalizationParams {
    NormalizationKind kind = NormalizationKind::MinMax;
    std::vector<double> offset;  // min (MinMax) or mean (ZScore)
    std::vector<double> scale;   // range or stddev; 0 marks a constant column

    static NormalizationParams fit(const Matrix& features,
                                   NormalizationKind kind = NormalizationKind::MinMax) {
        if (features.rows() == 0)
            fail(ErrKind::EmptyInput, "normalization: no rows");
        NormalizationParams p;
        p.kind = kind;
        const std::size_t d = features.cols();
        p.offset.assign(d, 0.0);
        p.scale.assign(d, 0.0);
        if (kind == NormalizationKind::MinMax) {
            for (std::size_t j = 0; j < d; ++j) {
                double lo = features(0, j), hi = features(0, j);
                for (std::size_t i = 1; i < features.rows(); ++i) {
                    lo = std::min(lo, features(i, j));
                    hi = std::max(hi, features(i, j));
                }
                p.offset[j] = lo;
                p.scale[j] = hi - lo;
            }
        } else {
            const double n = static_cast<double>(features.rows());
            for (std::size_t j = 0; j < d; ++j) {
                double mean = 0.0;
                for (std::size_t i = 0; i < features.rows(); ++i)
                    mean += features(i, j);
                mean /= n;
                double var = 0.0;
                for (std::size_t i = 0; i < features.rows(); ++i) {
                    const double c = features(i, j) - mean;
                    var += c * c;
                }
                p.offset[j] = mean;
                p.scale[j] = std::sqrt(var / n);
            }
        }
        return p;
    }

    // Constant columns map to 0 by convention.
    void apply(Matrix& features) const {
        if (features.cols() != offset.size())
            fail(ErrKind::Dimension, "normalization: fitted on ", offset.size(),
                 " columns, applying to ", features.cols());
        for (std::size_t i = 0; i < features.rows(); ++i) {
            double* row = features.row_ptr(i);
            for (std::size_t j = 0; j < features.cols(); ++j)
                row[j] = scale[j] == 0.0 ? 0.0 : (row[j] - offset[j]) / scale[j];
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

}  // namespace detail

/// Loads a rectangular numeric CSV (no header). label_column may be negative
/// to count from the end (-1 = last). Label cells may be categorical; they
/// are factorized to 0..K-1 in first-appearance order.
inline Dataset load_csv(const std::string& path, std::optional<int> label_column,
                        bool normalize,
                        NormalizationKind norm_kind = NormalizationKind::MinMax) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> label_keys;  // first-appearance order
    std::map<std::string, int> label_ids;
    std::size_t n_cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells = detail::split_csv_line(line);
        if (n_cols == 0) {
            n_cols = cells.size();
        } else if (cells.size() != n_cols) {
            fail(ErrKind::Parse, path, ":", line_no, ": expected ", n_cols,
                 " cells, found ", cells.size());
        }
        std::size_t label_idx = n_cols;  // out of range = no label
        if (label_column) {
            const long long raw = *label_column;
            const long long idx = raw < 0 ? static_cast<long long>(n_cols) + raw : raw;
            if (idx < 0 || idx >= static_cast<long long>(n_cols))
                fail(ErrKind::InvalidArgument, path, ": label column ", raw,
                     " out of range for ", n_cols, " columns");
            label_idx = static_cast<std::size_t>(idx);
        }
        std::vector<double> row;
        row.reserve(n_cols);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j == label_idx) {
                auto it = label_ids.find(cells[j]);
                if (it == label_ids.end()) {
                    it = label_ids.emplace(cells[j], static_cast<int>(label_keys.size())).first;
                    label_keys.push_back(cells[j]);
                }
                labels.push_back(it->second);
                continue;
            }
            char* end = nullptr;
            const std::string& cell = cells[j];
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size())
                fail(ErrKind::Parse, path, ":", line_no, ": non-numeric cell '",
                     cell, "' in feature column ", j);
            if (!std::isfinite(v))
                fail(ErrKind::Parse, path, ":", line_no, ": non-finite value");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrKind::Parse, path, ": no data rows");

    Dataset ds;
    ds.features = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), ds.features.row_ptr(i));
    if (label_column) {
        ds.true_labels = std::move(labels);
        ds.k = static_cast<int>(label_keys.size());
    }
    if (normalize) NormalizationParams::fit(ds.features, norm_kind).apply(ds.features);
    ds.validate();
    return ds;
}

inline void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* row = ds.features.row_ptr(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) os << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            os << buf;
        }
        if (ds.true_labels) os << "," << (*ds.true_labels)[i];
        os << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

struct BlobSpec {
    int k = 4;
    int points_per_cluster = 50;
    int dim = 2;
    double center_spread = 6.0;   // centers drawn uniformly in [0, spread]^dim
    double cluster_stddev = 1.0;  // isotropic per-cluster noise
    std::uint64_t seed = 1;

    double separability_ratio() const { return center_spread / cluster_stddev; }

    void validate() const {
        if (k < 1 || points_per_cluster < 1 || dim < 1)
            fail(ErrKind::InvalidArgument, "blob spec: counts must be positive");
        if (center_spread <= 0.0 || cluster_stddev < 0.0)
            fail(ErrKind::InvalidArgument, "blob spec: spread must be > 0, stddev >= 0");
    }
};

inline Dataset make_blobs(const BlobSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Matrix centers(spec.k, spec.dim);
    std::uniform_real_distribution<double> uc(0.0, spec.center_spread);
    for (double& c : centers.data()) c = uc(rng);

    const std::size_t n = static_cast<std::size_t>(spec.k) * spec.points_per_cluster;
    Dataset ds;
    ds.features = Matrix(n, spec.dim);
    ds.true_labels = std::vector<int>(n);
    ds.k = spec.k;
    std::normal_distribution<double> noise(0.0, 1.0);
    std::size_t row = 0;
    for (int c = 0; c < spec.k; ++c) {
        for (int p = 0; p < spec.points_per_cluster; ++p, ++row) {
            double* out = ds.features.row_ptr(row);
            const double* center = centers.row_ptr(c);
            for (int j = 0; j < spec.dim; ++j)
                out[j] = center[j] + spec.cluster_stddev * noise(rng);
            (*ds.true_labels)[row] = c;
        }
    }
    return ds;
}

struct SplitResult {
    Dataset train;
    Dataset test;
    bool stratified = true;  // false when a single-point class forced the fallback
};

namespace detail {

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.features = gather_rows(ds.features, idx);
    if (ds.true_labels) {
        std::vector<int> labels(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            labels[i] = (*ds.true_labels)[idx[i]];
        out.true_labels = std::move(labels);
    }
    out.k = ds.k;
    return out;
}

}  // namespace detail

/// Disjoint, exhaustive train/test split; stratified by true label when all
/// classes have at least two points. Train sizes per class follow a
/// largest-remainder allocation of round(fraction * n).
inline SplitResult split(const Dataset& ds, double train_fraction, Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        fail(ErrKind::InvalidArgument, "split: fraction ", train_fraction,
             " outside (0,1)");
    const std::size_t n = ds.size();
    if (n < 2) fail(ErrKind::EmptyInput, "split: need at least 2 points");
    std::size_t target = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    target = std::min(std::max<std::size_t>(target, 1), n - 1);

    bool stratified = ds.true_labels.has_value();
    std::vector<std::vector<std::size_t>> by_class;
    if (ds.true_labels) {
        int k = 0;
        for (int l : *ds.true_labels) k = std::max(k, l + 1);
        by_class.resize(k);
        for (std::size_t i = 0; i < n; ++i)
            by_class[(*ds.true_labels)[i]].push_back(i);
        for (const auto& members : by_class)
            if (members.size() == 1) stratified = false;
    }

    std::vector<std::size_t> train_idx;
    if (stratified) {
        // per-class quotas, floors first, remainder by largest fractional part
        std::vector<std::size_t> quota(by_class.size());
        std::vector<std::pair<double, std::size_t>> frac;
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            const double q = train_fraction * static_cast<double>(by_class[c].size());
            quota[c] = static_cast<std::size_t>(q);
            assigned += quota[c];
            frac.emplace_back(q - static_cast<double>(quota[c]), c);
        }
        std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        for (std::size_t t = 0; assigned < target && t < frac.size(); ++t) {
            const std::size_t c = frac[t].second;
            if (quota[c] < by_class[c].size()) {
                ++quota[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            std::vector<std::size_t> members = by_class[c];
            if (members.empty()) continue;
            std::shuffle(members.begin(), members.end(), rng);
            quota[c] = std::min(quota[c], members.size() - 1);  // keep a test point
            train_idx.insert(train_idx.end(), members.begin(),
                             members.begin() + quota[c]);
        }
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        train_idx.assign(order.begin(), order.begin() + target);
    }

    std::sort(train_idx.begin(), train_idx.end());
    std::vector<char> in_train(n, 0);
    for (std::size_t i : train_idx) in_train[i] = 1;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < n; ++i)
        if (!in_train[i]) test_idx.push_back(i);

    SplitResult res;
    res.train = detail::take_rows(ds, train_idx);
    res.test = detail::take_rows(ds, test_idx);
    res.stratified = stratified;
    return res;
}

}  // namespace s3c2
