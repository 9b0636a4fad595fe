#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "s3c2/dataset.hpp"
#include "s3c2/error.hpp"
#include "s3c2/rng.hpp"

namespace s3c2 {

enum class LinkLabel { Must, Cannot, Unlabeled };

/// Must-link / cannot-link pairs over point indices. Maintains the closure
/// invariants: (i,i) is always a must-link, both sets are symmetric, and the
/// sets stay disjoint. The unlabeled set U is implicit as the complement.
class ConstraintSet {
public:
    ConstraintSet() = default;

    explicit ConstraintSet(std::size_t n_points) : n_(n_points) {
        for (std::size_t i = 0; i < n_; ++i) must_.insert(key(i, i));
    }

    std::size_t n_points() const { return n_; }

    void add_must(std::size_t i, std::size_t j) {
        check_indices(i, j);
        if (cannot_.count(key(i, j)))
            fail(ErrKind::InvalidArgument, "constraint conflict: (", i, ",", j,
                 ") already a cannot-link");
        must_.insert(key(i, j));
        must_.insert(key(j, i));
    }

    void add_cannot(std::size_t i, std::size_t j) {
        check_indices(i, j);
        if (i == j)
            fail(ErrKind::InvalidArgument, "cannot-link (", i, ",", i,
                 ") contradicts reflexivity");
        if (must_.count(key(i, j)))
            fail(ErrKind::InvalidArgument, "constraint conflict: (", i, ",", j,
                 ") already a must-link");
        cannot_.insert(key(i, j));
        cannot_.insert(key(j, i));
    }

    LinkLabel label(std::size_t i, std::size_t j) const {
        check_indices(i, j);
        if (must_.count(key(i, j))) return LinkLabel::Must;
        if (cannot_.count(key(i, j))) return LinkLabel::Cannot;
        return LinkLabel::Unlabeled;
    }

    // ordered-pair set sizes (must includes the n reflexive pairs)
    std::size_t must_size() const { return must_.size(); }
    std::size_t cannot_size() const { return cannot_.size(); }

    std::size_t labeled_non_reflexive() const {
        return must_.size() - n_ + cannot_.size();
    }

    std::size_t unlabeled_count() const {
        return n_ * (n_ - 1) - labeled_non_reflexive();
    }

    /// Unordered unique non-reflexive pairs, each reported once with i < j,
    /// sorted for deterministic iteration.
    std::vector<std::pair<std::size_t, std::size_t>> must_pairs() const {
        return collect(must_);
    }
    std::vector<std::pair<std::size_t, std::size_t>> cannot_pairs() const {
        return collect(cannot_);
    }

private:
    static std::uint64_t key(std::size_t i, std::size_t j) {
        return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
    }

    void check_indices(std::size_t i, std::size_t j) const {
        if (i >= n_ || j >= n_)
            fail(ErrKind::InvalidArgument, "pair (", i, ",", j,
                 ") out of range for ", n_, " points");
    }

    std::vector<std::pair<std::size_t, std::size_t>> collect(
        const std::unordered_set<std::uint64_t>& set) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        out.reserve(set.size() / 2);
        for (std::uint64_t k : set) {
            const std::size_t i = static_cast<std::size_t>(k >> 32);
            const std::size_t j = static_cast<std::size_t>(k & 0xffffffffull);
            if (i < j) out.emplace_back(i, j);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t n_ = 0;
    std::unordered_set<std::uint64_t> must_;
    std::unordered_set<std::uint64_t> cannot_;
};

/// Samples l/2 distinct same-class and l/2 distinct cross-class unordered
/// pairs without replacement, labeled by true class equality, then applies
/// the closure. Sampled pairs are never reflexive.
inline ConstraintSet sample_constraints(const Dataset& ds, std::size_t l, Rng& rng) {
    if (!ds.true_labels)
        fail(ErrKind::InvalidArgument, "sample_constraints: dataset has no labels");
    if (l % 2 != 0)
        fail(ErrKind::InvalidArgument, "sample_constraints: l = ", l, " is odd");
    const std::size_t n = ds.size();
    const std::vector<int>& labels = *ds.true_labels;

    // eligible unordered pair counts per relation
    std::vector<std::size_t> class_sizes;
    for (int lab : labels) {
        if (lab < 0) fail(ErrKind::InvalidArgument, "sample_constraints: negative label");
        if (static_cast<std::size_t>(lab) >= class_sizes.size())
            class_sizes.resize(lab + 1, 0);
        ++class_sizes[lab];
    }
    std::size_t same_total = 0;
    for (std::size_t c : class_sizes) same_total += c * (c - 1) / 2;
    const std::size_t all_pairs = n * (n - 1) / 2;
    const std::size_t cross_total = all_pairs - same_total;
    const std::size_t want = l / 2;
    if (want > same_total)
        fail(ErrKind::Infeasible, "sample_constraints: need ", want,
             " must-link pairs, only ", same_total, " same-class pairs exist");
    if (want > cross_total)
        fail(ErrKind::Infeasible, "sample_constraints: need ", want,
             " cannot-link pairs, only ", cross_total, " cross-class pairs exist");

    ConstraintSet cs(n);
    if (l == 0) return cs;

    std::size_t got_must = 0, got_cannot = 0;
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    // rejection sampling; falls back to full enumeration when the request
    // is a large fraction of the eligible pairs
    const bool dense_request = want * 4 > same_total || want * 4 > cross_total;
    if (!dense_request) {
        while (got_must < want || got_cannot < want) {
            std::size_t i = pick(rng), j = pick(rng);
            if (i == j) continue;
            if (i > j) std::swap(i, j);
            const bool same = labels[i] == labels[j];
            if (same && got_must == want) continue;
            if (!same && got_cannot == want) continue;
            const std::uint64_t k = (static_cast<std::uint64_t>(i) << 32) | j;
            if (!seen.insert(k).second) continue;
            if (same) {
                cs.add_must(i, j);
                ++got_must;
            } else {
                cs.add_cannot(i, j);
                ++got_cannot;
            }
        }
        return cs;
    }

    std::vector<std::pair<std::size_t, std::size_t>> same_pairs, cross_pairs;
    same_pairs.reserve(same_total);
    cross_pairs.reserve(cross_total);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            (labels[i] == labels[j] ? same_pairs : cross_pairs).emplace_back(i, j);
    std::shuffle(same_pairs.begin(), same_pairs.end(), rng);
    std::shuffle(cross_pairs.begin(), cross_pairs.end(), rng);
    for (std::size_t t = 0; t < want; ++t) cs.add_must(same_pairs[t].first, same_pairs[t].second);
    for (std::size_t t = 0; t < want; ++t) cs.add_cannot(cross_pairs[t].first, cross_pairs[t].second);
    return cs;
}

/// m ordered pairs drawn uniformly (with replacement) from the unlabeled set
/// U = X^2 minus labeled pairs minus the diagonal.
inline std::vector<std::pair<std::size_t, std::size_t>> sample_unlabeled_pairs(
    const ConstraintSet& cs, std::size_t n_points, std::size_t m, Rng& rng) {
    if (n_points != cs.n_points())
        fail(ErrKind::InvalidArgument, "sample_unlabeled_pairs: set covers ",
             cs.n_points(), " points, asked about ", n_points);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (m == 0) return out;
    const std::size_t u_count = cs.unlabeled_count();
    if (u_count == 0)
        fail(ErrKind::Infeasible, "sample_unlabeled_pairs: every pair is labeled");
    out.reserve(m);

    const std::size_t total_ordered = n_points * (n_points - 1);
    if (u_count * 8 >= total_ordered) {
        // U is dense enough for rejection sampling
        std::uniform_int_distribution<std::size_t> pick(0, n_points - 1);
        while (out.size() < m) {
            const std::size_t i = pick(rng), j = pick(rng);
            if (i == j) continue;
            if (cs.label(i, j) != LinkLabel::Unlabeled) continue;
            out.emplace_back(i, j);
        }
        return out;
    }

    std::vector<std::pair<std::size_t, std::size_t>> u;
    u.reserve(u_count);
    for (std::size_t i = 0; i < n_points; ++i)
        for (std::size_t j = 0; j < n_points; ++j)
            if (i != j && cs.label(i, j) == LinkLabel::Unlabeled) u.emplace_back(i, j);
    std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
    for (std::size_t t = 0; t < m; ++t) out.push_back(u[pick(rng)]);
    return out;
}

/// Text format: one `i j {M|C}` line per unordered non-reflexive pair; an
/// optional fourth column marks predicted labels. The loader re-applies the
/// closure and validates disjointness.
inline void save_constraints(const ConstraintSet& cs, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    for (const auto& [i, j] : cs.must_pairs()) os << i << " " << j << " M\n";
    for (const auto& [i, j] : cs.cannot_pairs()) os << i << " " << j << " C\n";
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline ConstraintSet load_constraints(const std::string& path, std::size_t n_points) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    ConstraintSet cs(n_points);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::istringstream ls(line);
        long long i, j;
        std::string tag;
        if (!(ls >> i >> j >> tag) || i < 0 || j < 0)
            fail(ErrKind::Parse, path, ":", line_no, ": expected 'i j {M|C}'");
        std::string marker;
        ls >> marker;  // optional given/predicted column, ignored on load
        if (tag == "M")
            cs.add_must(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        else if (tag == "C")
            cs.add_cannot(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        else
            fail(ErrKind::Parse, path, ":", line_no, ": unknown tag '", tag, "'");
    }
    return cs;
}

}  // namespace s3c2
