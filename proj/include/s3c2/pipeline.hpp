#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "s3c2/config.hpp"
#include "s3c2/metrics.hpp"

// Experiment orchestration: seeded end-to-end runs over constraint levels x
// replicates, threshold sweeps with shared constraint samples, and the
// NMI-vs-indicator correlation table. Everything is a pure function of the
// config; wall-clock times are carried separately so CSV outputs stay
// byte-identical across executions.

namespace s3c2 {

struct ReplicateOutcome {
    std::size_t constraint_count = 0;
    std::size_t replicate = 0;
    std::string arm = "labnet";  // "labnet" or "oracle"
    double threshold = 0.3;
    bool ok = false;
    std::string error;
    double nmi_train = 0.0;
    double nmi_test = 0.0;
    double labnet_accuracy = 0.0;
    std::optional<double> ml_rate;
    std::optional<double> cl_rate;
    double labnet_final_loss = 0.0;
    double clunet_final_loss = 0.0;
    double sum_sq = 0.0;
    double tsallis_s2 = 0.0;
    std::size_t m_tilde = 0;  // ordered |M-tilde| over train pairs at this T
    double wall_ms = 0.0;     // reported in the JSONL log only
};

struct RunReport {
    std::string hash;
    Json config_echo;
    std::vector<ReplicateOutcome> rows;
};

struct AggregateRow {
    std::size_t constraint_count = 0;
    std::string arm;
    std::size_t replicates_ok = 0;
    double mean_nmi_train = 0.0;
    double mean_nmi_test = 0.0;
};

inline Dataset build_dataset(const ExperimentConfig& cfg) {
    Dataset ds;
    if (cfg.dataset_type == "blobs") {
        BlobSpec spec = cfg.blobs;
        spec.seed = derive_seed(cfg.seed, {seed_stage::kBlobs});
        ds = make_blobs(spec);
        if (cfg.normalize)
            NormalizationParams::fit(ds.features, cfg.normalization).apply(ds.features);
    } else {
        ds = load_csv(cfg.csv_path, cfg.csv_label_column, cfg.normalize,
                      cfg.normalization);
    }
    if (!ds.true_labels)
        fail(ErrKind::InvalidArgument,
             "pipeline: dataset has no labels; constraints cannot be sampled");
    if (cfg.k > 0) ds.k = cfg.k;
    if (ds.k < 2) fail(ErrKind::InvalidArgument, "pipeline: need k >= 2");
    ds.validate();
    return ds;
}

/// m ordered pairs (i != j) drawn uniformly over the points, carrying the
/// true same/different relation; used for LabelingStats evaluation.
inline std::vector<EvalPair> sample_eval_pairs(const Dataset& ds, std::size_t m,
                                               Rng& rng) {
    if (!ds.true_labels)
        fail(ErrKind::InvalidArgument, "sample_eval_pairs: dataset has no labels");
    if (ds.size() < 2)
        fail(ErrKind::EmptyInput, "sample_eval_pairs: need at least 2 points");
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    std::vector<EvalPair> out;
    out.reserve(m);
    while (out.size() < m) {
        const std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        out.push_back({i, j, (*ds.true_labels)[i] == (*ds.true_labels)[j]});
    }
    return out;
}

/// Ordered |M-tilde| over the given points at threshold T: reflexive pairs,
/// the given must-links, and every unlabeled pair with d^2 < T.
inline std::size_t m_tilde_size(const Matrix& embeddings, const ConstraintSet& cs,
                                double threshold) {
    std::size_t predicted = 0;
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        const double* a = embeddings.row_ptr(i);
        for (std::size_t j = i + 1; j < embeddings.rows(); ++j) {
            if (cs.label(i, j) != LinkLabel::Unlabeled) continue;
            const double* b = embeddings.row_ptr(j);
            double d2 = 0.0;
            for (std::size_t t = 0; t < embeddings.cols(); ++t) {
                const double diff = a[t] - b[t];
                d2 += diff * diff;
            }
            if (d2 < threshold) ++predicted;
        }
    }
    return cs.must_size() + 2 * predicted;
}

namespace detail {

struct StageSetup {
    Dataset train;
    Dataset test;
    std::vector<EvalPair> eval_pairs;
};

inline StageSetup prepare_stage(const ExperimentConfig& cfg, const Dataset& ds) {
    StageSetup s;
    Rng split_rng(derive_seed(cfg.seed, {seed_stage::kSplit}));
    SplitResult sp = split(ds, cfg.train_fraction, split_rng);
    s.train = std::move(sp.train);
    s.test = std::move(sp.test);
    Rng eval_rng(derive_seed(cfg.seed, {seed_stage::kEvalPairs}));
    s.eval_pairs = sample_eval_pairs(s.test, cfg.eval_pairs, eval_rng);
    return s;
}

inline LabNetConfig labnet_config(const ExperimentConfig& cfg) {
    LabNetConfig lc = cfg.labnet;
    lc.threshold = cfg.threshold;
    lc.lambda = cfg.lambda;
    return lc;
}

inline std::string cell_name(std::size_t l, std::size_t rep) {
    return concat("l", l, "_rep", rep);
}

}  // namespace detail

/// Runs every constraint level x replicate cell: sample constraints, train
/// LabNet, train CluNet (plus an oracle-labeled arm when configured), and
/// evaluate. A failing cell is recorded and the remaining cells proceed.
/// When artifacts_dir is non-empty, constraint files and model checkpoints
/// are persisted there so every reported number can be recomputed.
inline RunReport run_pipeline(const ExperimentConfig& cfg,
                              const std::string& artifacts_dir = "") {
    cfg.validate();
    RunReport report;
    report.hash = config_hash(cfg);
    report.config_echo = to_json(cfg);

    const Dataset ds = build_dataset(cfg);
    const detail::StageSetup stage = detail::prepare_stage(cfg, ds);
    if (!artifacts_dir.empty())
        std::filesystem::create_directories(artifacts_dir);

    for (const std::size_t l : cfg.constraint_counts) {
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            const auto cell_start = std::chrono::steady_clock::now();
            try {
                Rng cs_rng(derive_seed(cfg.seed, {seed_stage::kConstraints, l, rep}));
                const ConstraintSet cs = sample_constraints(stage.train, l, cs_rng);

                Rng lab_init(derive_seed(cfg.seed, {seed_stage::kLabNetInit, l, rep}));
                LabNetModel labnet =
                    make_labnet(stage.train.dim(), detail::labnet_config(cfg), lab_init);
                Rng lab_train(derive_seed(cfg.seed, {seed_stage::kLabNetTrain, l, rep}));
                const LabNetTrace lab_trace = train_labnet(
                    labnet, stage.train, cs, cfg.labnet.epochs, cfg.labnet.batch_size,
                    lab_train);

                const LabelingStats stats = labeling_stats(labnet, stage.test, stage.eval_pairs);
                const Matrix train_emb = embed(labnet, stage.train.features);
                const std::size_t m_tilde = m_tilde_size(train_emb, cs, labnet.threshold_T);

                if (!artifacts_dir.empty()) {
                    const std::string base = artifacts_dir + "/" + detail::cell_name(l, rep);
                    save_constraints(cs, base + "_constraints.txt");
                    save_labnet(labnet, base + "_labnet.ckpt");
                }

                std::vector<std::string> arms{"labnet"};
                if (cfg.compare_oracle) arms.push_back("oracle");
                for (std::size_t arm_id = 0; arm_id < arms.size(); ++arm_id) {
                    ReplicateOutcome row;
                    row.constraint_count = l;
                    row.replicate = rep;
                    row.arm = arms[arm_id];
                    row.threshold = labnet.threshold_T;
                    row.labnet_final_loss =
                        lab_trace.epochs.empty() ? 0.0 : lab_trace.epochs.back().loss;
                    row.labnet_accuracy = stats.accuracy;
                    row.ml_rate = stats.ml_rate;
                    row.cl_rate = stats.cl_rate;
                    row.m_tilde = m_tilde;

                    Rng clu_init(derive_seed(cfg.seed,
                                             {seed_stage::kCluNetInit, l, rep, arm_id}));
                    CluNetModel clunet = make_clunet(
                        stage.train.dim(), static_cast<std::size_t>(ds.k), cfg.clunet,
                        clu_init);
                    const PairLabeler labeler =
                        arms[arm_id] == "oracle"
                            ? oracle_labeler(stage.train)
                            : labnet_labeler(labnet, stage.train.features);
                    Rng clu_train(derive_seed(cfg.seed,
                                              {seed_stage::kCluNetTrain, l, rep, arm_id}));
                    const CluNetTrace clu_trace = train_clunet(
                        clunet, stage.train, cs, labeler, cfg.clunet, clu_train);
                    row.clunet_final_loss =
                        clu_trace.epoch_loss.empty() ? 0.0 : clu_trace.epoch_loss.back();

                    row.nmi_train =
                        nmi(assign(clunet, stage.train.features), *stage.train.true_labels);
                    row.nmi_test =
                        nmi(assign(clunet, stage.test.features), *stage.test.true_labels);
                    const ClassMass cm =
                        class_mass_and_tsallis(posterior(clunet, stage.train.features));
                    row.sum_sq = cm.sum_sq;
                    row.tsallis_s2 = cm.tsallis_s2;

                    if (!artifacts_dir.empty()) {
                        const std::string base =
                            artifacts_dir + "/" + detail::cell_name(l, rep);
                        save_clunet(clunet, base +
                                                (arms[arm_id] == "oracle" ? "_clunet_oracle.ckpt"
                                                                          : "_clunet.ckpt"));
                    }
                    row.ok = true;
                    row.wall_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - cell_start)
                                      .count();
                    report.rows.push_back(std::move(row));
                }
            } catch (const Error& e) {
                ReplicateOutcome row;
                row.constraint_count = l;
                row.replicate = rep;
                row.ok = false;
                row.error = e.what();
                row.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - cell_start)
                                  .count();
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

inline std::vector<AggregateRow> aggregate_rows(const RunReport& report) {
    std::vector<AggregateRow> out;
    for (const ReplicateOutcome& row : report.rows) {
        if (!row.ok) continue;
        auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
            return a.constraint_count == row.constraint_count && a.arm == row.arm;
        });
        if (it == out.end()) {
            out.push_back({row.constraint_count, row.arm, 0, 0.0, 0.0});
            it = out.end() - 1;
        }
        it->replicates_ok += 1;
        it->mean_nmi_train += row.nmi_train;
        it->mean_nmi_test += row.nmi_test;
    }
    for (AggregateRow& a : out) {
        a.mean_nmi_train /= static_cast<double>(a.replicates_ok);
        a.mean_nmi_test /= static_cast<double>(a.replicates_ok);
    }
    std::sort(out.begin(), out.end(), [](const AggregateRow& a, const AggregateRow& b) {
        return a.constraint_count != b.constraint_count
                   ? a.constraint_count < b.constraint_count
                   : a.arm < b.arm;
    });
    return out;
}

struct SweepOutcome {
    std::size_t constraint_count = 0;
    double threshold = 0.0;
    std::size_t replicate = 0;
    bool ok = false;
    std::string error;
    double nmi_train = 0.0;
    double nmi_test = 0.0;
    double labnet_accuracy = 0.0;
    std::optional<double> ml_rate;
    std::optional<double> cl_rate;
    std::size_t m_tilde = 0;
    double wall_ms = 0.0;
};

struct SweepReport {
    std::string hash;
    Json config_echo;
    std::vector<SweepOutcome> rows;
};

/// Full factorial sweep over cfg.thresholds. Constraint samples and the
/// trained LabNet are shared across thresholds within a cell, so threshold
/// columns are paired; only labeling and CluNet training differ.
inline SweepReport threshold_sweep(const ExperimentConfig& cfg,
                                   const std::string& artifacts_dir = "") {
    cfg.validate();
    if (cfg.thresholds.size() < 2)
        fail(ErrKind::InvalidArgument, "threshold_sweep: need at least 2 thresholds");
    SweepReport report;
    report.hash = config_hash(cfg);
    report.config_echo = to_json(cfg);

    const Dataset ds = build_dataset(cfg);
    const detail::StageSetup stage = detail::prepare_stage(cfg, ds);
    if (!artifacts_dir.empty())
        std::filesystem::create_directories(artifacts_dir);

    // distances for labeling stats are threshold-independent; cache them
    const auto eval_d2 = [&](const LabNetModel& labnet) {
        const Matrix emb = embed(labnet, stage.test.features);
        std::vector<double> d2(stage.eval_pairs.size());
        for (std::size_t t = 0; t < stage.eval_pairs.size(); ++t) {
            const double* a = emb.row_ptr(stage.eval_pairs[t].i);
            const double* b = emb.row_ptr(stage.eval_pairs[t].j);
            double acc = 0.0;
            for (std::size_t c = 0; c < emb.cols(); ++c) {
                const double diff = a[c] - b[c];
                acc += diff * diff;
            }
            d2[t] = acc;
        }
        return d2;
    };
    std::vector<bool> eval_same(stage.eval_pairs.size());
    for (std::size_t t = 0; t < stage.eval_pairs.size(); ++t)
        eval_same[t] = stage.eval_pairs[t].same;

    for (const std::size_t l : cfg.constraint_counts) {
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            try {
                Rng cs_rng(derive_seed(cfg.seed, {seed_stage::kConstraints, l, rep}));
                const ConstraintSet cs = sample_constraints(stage.train, l, cs_rng);

                Rng lab_init(derive_seed(cfg.seed, {seed_stage::kLabNetInit, l, rep}));
                LabNetModel labnet =
                    make_labnet(stage.train.dim(), detail::labnet_config(cfg), lab_init);
                Rng lab_train(derive_seed(cfg.seed, {seed_stage::kLabNetTrain, l, rep}));
                train_labnet(labnet, stage.train, cs, cfg.labnet.epochs,
                             cfg.labnet.batch_size, lab_train);

                const std::vector<double> d2 = eval_d2(labnet);
                const Matrix train_emb = embed(labnet, stage.train.features);
                auto emb_ptr = std::make_shared<Matrix>(train_emb);

                for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti) {
                    const double threshold = cfg.thresholds[ti];
                    const auto t_start = std::chrono::steady_clock::now();
                    SweepOutcome row;
                    row.constraint_count = l;
                    row.threshold = threshold;
                    row.replicate = rep;
                    try {
                        const LabelingStats stats =
                            labeling_stats_from_d2(d2, eval_same, threshold);
                        row.labnet_accuracy = stats.accuracy;
                        row.ml_rate = stats.ml_rate;
                        row.cl_rate = stats.cl_rate;
                        row.m_tilde = m_tilde_size(train_emb, cs, threshold);

                        const PairLabeler labeler = [emb_ptr, threshold](std::size_t i,
                                                                         std::size_t j) {
                            const double* a = emb_ptr->row_ptr(i);
                            const double* b = emb_ptr->row_ptr(j);
                            double acc = 0.0;
                            for (std::size_t c = 0; c < emb_ptr->cols(); ++c) {
                                const double diff = a[c] - b[c];
                                acc += diff * diff;
                            }
                            return acc < threshold ? LinkLabel::Must : LinkLabel::Cannot;
                        };
                        Rng clu_init(derive_seed(cfg.seed,
                                                 {seed_stage::kCluNetInit, l, rep, ti}));
                        CluNetModel clunet = make_clunet(
                            stage.train.dim(), static_cast<std::size_t>(ds.k),
                            cfg.clunet, clu_init);
                        Rng clu_train(derive_seed(cfg.seed,
                                                  {seed_stage::kCluNetTrain, l, rep, ti}));
                        train_clunet(clunet, stage.train, cs, labeler, cfg.clunet,
                                     clu_train);
                        row.nmi_train = nmi(assign(clunet, stage.train.features),
                                            *stage.train.true_labels);
                        row.nmi_test = nmi(assign(clunet, stage.test.features),
                                           *stage.test.true_labels);
                        row.ok = true;
                    } catch (const Error& e) {
                        row.ok = false;
                        row.error = e.what();
                    }
                    row.wall_ms = std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - t_start)
                                      .count();
                    report.rows.push_back(std::move(row));
                }
            } catch (const Error& e) {
                for (const double threshold : cfg.thresholds) {
                    SweepOutcome row;
                    row.constraint_count = l;
                    row.threshold = threshold;
                    row.replicate = rep;
                    row.ok = false;
                    row.error = e.what();
                    report.rows.push_back(std::move(row));
                }
            }
        }
    }
    return report;
}

struct CorrelationCell {
    std::size_t constraint_count = 0;
    std::string indicator;  // accuracy | ml_rate | cl_rate
    std::size_t n = 0;
    std::optional<double> r;  // absent when constant or too few runs
};

/// Pearson r between test NMI and each LabNet indicator, computed across
/// replicate runs per constraint level (labnet arm only).
inline std::vector<CorrelationCell> correlation_report(
    const std::vector<ReplicateOutcome>& rows) {
    std::vector<std::size_t> levels;
    for (const ReplicateOutcome& row : rows)
        if (row.ok && row.arm == "labnet") levels.push_back(row.constraint_count);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    std::vector<CorrelationCell> out;
    const char* indicators[] = {"accuracy", "ml_rate", "cl_rate"};
    for (const std::size_t l : levels) {
        for (const char* ind : indicators) {
            CorrelationCell cell;
            cell.constraint_count = l;
            cell.indicator = ind;
            std::vector<double> xs, ys;
            for (const ReplicateOutcome& row : rows) {
                if (!row.ok || row.arm != "labnet" || row.constraint_count != l)
                    continue;
                std::optional<double> v;
                if (cell.indicator == "accuracy")
                    v = row.labnet_accuracy;
                else if (cell.indicator == "ml_rate")
                    v = row.ml_rate;
                else
                    v = row.cl_rate;
                if (!v) continue;
                xs.push_back(*v);
                ys.push_back(row.nmi_test);
            }
            cell.n = xs.size();
            if (xs.size() >= 3) {
                try {
                    cell.r = pearson_correlation(xs, ys);
                } catch (const Error&) {
                    cell.r.reset();  // constant indicator: undefined cell
                }
            }
            out.push_back(std::move(cell));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization. CSV columns are fixed; doubles use %.12g; undefined
// values are empty cells. Wall-clock appears only in the JSONL log.

namespace detail {

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt_num(*v) : std::string();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline void write_report_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "constraint_count,replicate,arm,threshold,status,nmi_train,nmi_test,"
          "labnet_accuracy,ml_rate,cl_rate,labnet_final_loss,clunet_final_loss,"
          "sum_sq,tsallis_s2,m_tilde,error\n";
    for (const ReplicateOutcome& r : report.rows) {
        os << r.constraint_count << "," << r.replicate << "," << r.arm << ","
           << detail::fmt_num(r.threshold) << "," << (r.ok ? "ok" : "failed") << ",";
        if (r.ok) {
            os << detail::fmt_num(r.nmi_train) << "," << detail::fmt_num(r.nmi_test)
               << "," << detail::fmt_num(r.labnet_accuracy) << ","
               << detail::fmt_opt(r.ml_rate) << "," << detail::fmt_opt(r.cl_rate)
               << "," << detail::fmt_num(r.labnet_final_loss) << ","
               << detail::fmt_num(r.clunet_final_loss) << ","
               << detail::fmt_num(r.sum_sq) << "," << detail::fmt_num(r.tsallis_s2)
               << "," << r.m_tilde << ",";
        } else {
            os << ",,,,,,,,,";
        }
        os << detail::csv_escape(r.error) << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline void write_aggregate_csv(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "constraint_count,arm,replicates_ok,mean_nmi_train,mean_nmi_test\n";
    for (const AggregateRow& a : aggregate_rows(report))
        os << a.constraint_count << "," << a.arm << "," << a.replicates_ok << ","
           << detail::fmt_num(a.mean_nmi_train) << ","
           << detail::fmt_num(a.mean_nmi_test) << "\n";
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline Json outcome_to_json(const ReplicateOutcome& r) {
    Json j;
    j["constraint_count"] = r.constraint_count;
    j["replicate"] = r.replicate;
    j["arm"] = r.arm;
    j["threshold"] = r.threshold;
    j["status"] = r.ok ? "ok" : "failed";
    if (r.ok) {
        j["nmi_train"] = r.nmi_train;
        j["nmi_test"] = r.nmi_test;
        j["labnet_accuracy"] = r.labnet_accuracy;
        if (r.ml_rate) j["ml_rate"] = *r.ml_rate;
        if (r.cl_rate) j["cl_rate"] = *r.cl_rate;
        j["labnet_final_loss"] = r.labnet_final_loss;
        j["clunet_final_loss"] = r.clunet_final_loss;
        j["sum_sq"] = r.sum_sq;
        j["tsallis_s2"] = r.tsallis_s2;
        j["m_tilde"] = r.m_tilde;
    } else {
        j["error"] = r.error;
    }
    j["wall_ms"] = r.wall_ms;
    return j;
}

inline void write_run_jsonl(const RunReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    Json head;
    head["type"] = "run";
    head["config_hash"] = report.hash;
    head["config"] = report.config_echo;
    os << head.dump() << "\n";
    for (const ReplicateOutcome& r : report.rows) {
        Json j = outcome_to_json(r);
        j["type"] = "replicate";
        os << j.dump() << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline void write_sweep_csv(const SweepReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "constraint_count,threshold,replicate,status,nmi_train,nmi_test,"
          "labnet_accuracy,ml_rate,cl_rate,m_tilde,error\n";
    for (const SweepOutcome& r : report.rows) {
        os << r.constraint_count << "," << detail::fmt_num(r.threshold) << ","
           << r.replicate << "," << (r.ok ? "ok" : "failed") << ",";
        if (r.ok) {
            os << detail::fmt_num(r.nmi_train) << "," << detail::fmt_num(r.nmi_test)
               << "," << detail::fmt_num(r.labnet_accuracy) << ","
               << detail::fmt_opt(r.ml_rate) << "," << detail::fmt_opt(r.cl_rate)
               << "," << r.m_tilde << ",";
        } else {
            os << ",,,,,,";
        }
        os << detail::csv_escape(r.error) << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

/// Wide pivot: one row per constraint count, one mean-test-NMI column per
/// threshold. Cells with no successful replicate stay empty.
inline void write_sweep_table_csv(const SweepReport& report, const std::string& path) {
    std::vector<std::size_t> levels;
    std::vector<double> thresholds;
    for (const SweepOutcome& r : report.rows) {
        if (std::find(levels.begin(), levels.end(), r.constraint_count) == levels.end())
            levels.push_back(r.constraint_count);
        if (std::find(thresholds.begin(), thresholds.end(), r.threshold) ==
            thresholds.end())
            thresholds.push_back(r.threshold);
    }
    std::sort(levels.begin(), levels.end());
    std::sort(thresholds.begin(), thresholds.end());

    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "constraint_count";
    for (double t : thresholds) os << ",T=" << detail::fmt_num(t);
    os << "\n";
    for (const std::size_t l : levels) {
        os << l;
        for (const double t : thresholds) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const SweepOutcome& r : report.rows)
                if (r.ok && r.constraint_count == l && r.threshold == t) {
                    sum += r.nmi_test;
                    ++n;
                }
            os << ",";
            if (n > 0) os << detail::fmt_num(sum / static_cast<double>(n));
        }
        os << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline void write_sweep_jsonl(const SweepReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    Json head;
    head["type"] = "sweep";
    head["config_hash"] = report.hash;
    head["config"] = report.config_echo;
    os << head.dump() << "\n";
    for (const SweepOutcome& r : report.rows) {
        Json j;
        j["type"] = "cell";
        j["constraint_count"] = r.constraint_count;
        j["threshold"] = r.threshold;
        j["replicate"] = r.replicate;
        j["status"] = r.ok ? "ok" : "failed";
        if (r.ok) {
            j["nmi_train"] = r.nmi_train;
            j["nmi_test"] = r.nmi_test;
            j["labnet_accuracy"] = r.labnet_accuracy;
            if (r.ml_rate) j["ml_rate"] = *r.ml_rate;
            if (r.cl_rate) j["cl_rate"] = *r.cl_rate;
            j["m_tilde"] = r.m_tilde;
        } else {
            j["error"] = r.error;
        }
        j["wall_ms"] = r.wall_ms;
        os << j.dump() << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

inline void write_correlation_csv(const std::vector<CorrelationCell>& cells,
                                  const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << "constraint_count,indicator,n,pearson_r,status\n";
    for (const CorrelationCell& c : cells) {
        os << c.constraint_count << "," << c.indicator << "," << c.n << ","
           << detail::fmt_opt(c.r) << "," << (c.r ? "ok" : "undefined") << "\n";
    }
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

/// Rebuilds outcome rows from a report.csv written by write_report_csv, for
/// the standalone correlation subcommand.
inline std::vector<ReplicateOutcome> load_report_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    std::string line;
    if (!std::getline(is, line))
        fail(ErrKind::Parse, path, ": empty report");
    std::vector<ReplicateOutcome> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() < 15)
            fail(ErrKind::Parse, path, ":", line_no, ": expected 16 columns");
        ReplicateOutcome r;
        r.constraint_count = std::stoull(cells[0]);
        r.replicate = std::stoull(cells[1]);
        r.arm = cells[2];
        r.threshold = std::stod(cells[3]);
        r.ok = cells[4] == "ok";
        if (r.ok) {
            r.nmi_train = std::stod(cells[5]);
            r.nmi_test = std::stod(cells[6]);
            r.labnet_accuracy = std::stod(cells[7]);
            if (!cells[8].empty()) r.ml_rate = std::stod(cells[8]);
            if (!cells[9].empty()) r.cl_rate = std::stod(cells[9]);
            r.labnet_final_loss = std::stod(cells[10]);
            r.clunet_final_loss = std::stod(cells[11]);
            r.sum_sq = std::stod(cells[12]);
            r.tsallis_s2 = std::stod(cells[13]);
            r.m_tilde = std::stoull(cells[14]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace s3c2
