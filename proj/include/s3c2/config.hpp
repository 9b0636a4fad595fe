#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "s3c2/clunet.hpp"
#include "s3c2/dataset.hpp"
#include "s3c2/error.hpp"
#include "s3c2/labnet.hpp"

namespace s3c2 {

using Json = nlohmann::ordered_json;

/// Full experiment description. Defaults follow the paper's protocol:
/// constraint levels {100..5000} with 5 replicate constraint sets, batches of
/// 100 given + 1000 predicted pairs, T = 0.3, lambda = 0.05, lr = 1e-3.
struct ExperimentConfig {
    // dataset source: synthetic blobs or a CSV file
    std::string dataset_type = "blobs";  // "blobs" | "csv"
    BlobSpec blobs;                      // seed is derived from the master seed at run time
    std::string csv_path;
    std::optional<int> csv_label_column;

    bool normalize = true;
    NormalizationKind normalization = NormalizationKind::MinMax;
    int k = 0;  // 0 = take from the dataset
    double train_fraction = 0.75;

    std::vector<std::size_t> constraint_counts{100, 200, 500, 1000, 2000, 5000};
    std::size_t replicates = 5;
    double threshold = 0.3;
    std::vector<double> thresholds;  // sweep list; empty outside sweeps
    double lambda = 0.05;

    LabNetConfig labnet;
    CluNetConfig clunet;

    std::size_t eval_pairs = 2000;  // labeling-stat sample size (test points)
    bool compare_oracle = false;    // add a true-label-oracle arm per replicate
    std::uint64_t seed = 1;

    void validate() const {
        if (dataset_type != "blobs" && dataset_type != "csv")
            fail(ErrKind::InvalidArgument, "config: dataset type '", dataset_type, "'");
        if (dataset_type == "csv" && csv_path.empty())
            fail(ErrKind::InvalidArgument, "config: csv dataset needs a path");
        if (dataset_type == "blobs") blobs.validate();
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            fail(ErrKind::InvalidArgument, "config: train_fraction outside (0,1)");
        if (replicates == 0) fail(ErrKind::InvalidArgument, "config: replicates 0");
        if (constraint_counts.empty())
            fail(ErrKind::InvalidArgument, "config: no constraint counts");
        if (lambda < 0.0) fail(ErrKind::InvalidArgument, "config: lambda < 0");
        for (double t : thresholds)
            if (!(t >= 0.0 && t < 1.0))
                fail(ErrKind::InvalidArgument, "config: sweep threshold ", t,
                     " outside [0,1)");
        if (!(threshold >= 0.0 && threshold < 1.0))
            fail(ErrKind::InvalidArgument, "config: threshold ", threshold,
                 " outside [0,1)");
    }
};

namespace detail {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline void reject_unknown_keys(const Json& j, const std::vector<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool found = false;
        for (const std::string& k : known)
            if (k == key) {
                found = true;
                break;
            }
        if (!found)
            fail(ErrKind::InvalidArgument, "config: unknown key '", key, "' in ",
                 where);
    }
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
    Json dataset;
    dataset["type"] = c.dataset_type;
    if (c.dataset_type == "blobs") {
        dataset["k"] = c.blobs.k;
        dataset["points_per_cluster"] = c.blobs.points_per_cluster;
        dataset["dim"] = c.blobs.dim;
        dataset["center_spread"] = c.blobs.center_spread;
        dataset["cluster_stddev"] = c.blobs.cluster_stddev;
    } else {
        dataset["path"] = c.csv_path;
        if (c.csv_label_column) dataset["label_column"] = *c.csv_label_column;
    }
    Json j;
    j["dataset"] = dataset;
    j["k"] = c.k;
    j["normalize"] = c.normalize;
    j["normalization"] =
        c.normalization == NormalizationKind::MinMax ? "minmax" : "zscore";
    j["train_fraction"] = c.train_fraction;
    j["constraint_counts"] = c.constraint_counts;
    j["replicates"] = c.replicates;
    j["threshold"] = c.threshold;
    if (!c.thresholds.empty()) j["thresholds"] = c.thresholds;
    j["lambda"] = c.lambda;
    j["labnet"] = Json{{"epochs", c.labnet.epochs},
                       {"batch_size", c.labnet.batch_size},
                       {"learning_rate", c.labnet.learning_rate},
                       {"hidden", c.labnet.hidden},
                       {"embed_dim", c.labnet.embed_dim},
                       {"dropout", c.labnet.dropout},
                       {"semi_supervised", c.labnet.semi_supervised},
                       {"optimizer", to_string(c.labnet.optimizer)}};
    j["clunet"] = Json{{"epochs", c.clunet.epochs},
                       {"given_per_batch", c.clunet.given_per_batch},
                       {"unlabeled_per_batch", c.clunet.unlabeled_per_batch},
                       {"learning_rate", c.clunet.learning_rate},
                       {"hidden", c.clunet.hidden},
                       {"dropout", c.clunet.dropout},
                       {"optimizer", to_string(c.clunet.optimizer)}};
    j["eval_pairs"] = c.eval_pairs;
    j["compare_oracle"] = c.compare_oracle;
    j["seed"] = c.seed;
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig c;
    detail::reject_unknown_keys(
        j,
        {"dataset", "k", "normalize", "normalization", "train_fraction",
         "constraint_counts", "replicates", "threshold", "thresholds", "lambda",
         "labnet", "clunet", "eval_pairs", "compare_oracle", "seed"},
        "top level");
    if (!j.contains("dataset"))
        fail(ErrKind::InvalidArgument, "config: missing 'dataset'");
    const Json& d = j.at("dataset");
    detail::reject_unknown_keys(d,
                                {"type", "k", "points_per_cluster", "dim",
                                 "center_spread", "cluster_stddev", "path",
                                 "label_column"},
                                "dataset");
    c.dataset_type = d.value("type", std::string("blobs"));
    if (c.dataset_type == "blobs") {
        detail::read_field(d, "k", c.blobs.k);
        detail::read_field(d, "points_per_cluster", c.blobs.points_per_cluster);
        detail::read_field(d, "dim", c.blobs.dim);
        detail::read_field(d, "center_spread", c.blobs.center_spread);
        detail::read_field(d, "cluster_stddev", c.blobs.cluster_stddev);
    } else {
        detail::read_field(d, "path", c.csv_path);
        if (d.contains("label_column")) c.csv_label_column = d.at("label_column").get<int>();
    }
    detail::read_field(j, "k", c.k);
    detail::read_field(j, "normalize", c.normalize);
    if (j.contains("normalization")) {
        const std::string norm = j.at("normalization").get<std::string>();
        if (norm == "minmax")
            c.normalization = NormalizationKind::MinMax;
        else if (norm == "zscore")
            c.normalization = NormalizationKind::ZScore;
        else
            fail(ErrKind::InvalidArgument, "config: normalization '", norm, "'");
    }
    detail::read_field(j, "train_fraction", c.train_fraction);
    detail::read_field(j, "constraint_counts", c.constraint_counts);
    detail::read_field(j, "replicates", c.replicates);
    detail::read_field(j, "threshold", c.threshold);
    detail::read_field(j, "thresholds", c.thresholds);
    detail::read_field(j, "lambda", c.lambda);
    if (j.contains("labnet")) {
        const Json& l = j.at("labnet");
        detail::reject_unknown_keys(l,
                                    {"epochs", "batch_size", "learning_rate",
                                     "hidden", "embed_dim", "dropout",
                                     "semi_supervised", "optimizer"},
                                    "labnet");
        detail::read_field(l, "epochs", c.labnet.epochs);
        detail::read_field(l, "batch_size", c.labnet.batch_size);
        detail::read_field(l, "learning_rate", c.labnet.learning_rate);
        detail::read_field(l, "hidden", c.labnet.hidden);
        detail::read_field(l, "embed_dim", c.labnet.embed_dim);
        detail::read_field(l, "dropout", c.labnet.dropout);
        detail::read_field(l, "semi_supervised", c.labnet.semi_supervised);
        if (l.contains("optimizer"))
            c.labnet.optimizer = optimizer_from_string(l.at("optimizer").get<std::string>());
    }
    if (j.contains("clunet")) {
        const Json& cl = j.at("clunet");
        detail::reject_unknown_keys(cl,
                                    {"epochs", "given_per_batch",
                                     "unlabeled_per_batch", "learning_rate",
                                     "hidden", "dropout", "optimizer"},
                                    "clunet");
        detail::read_field(cl, "epochs", c.clunet.epochs);
        detail::read_field(cl, "given_per_batch", c.clunet.given_per_batch);
        detail::read_field(cl, "unlabeled_per_batch", c.clunet.unlabeled_per_batch);
        detail::read_field(cl, "learning_rate", c.clunet.learning_rate);
        detail::read_field(cl, "hidden", c.clunet.hidden);
        detail::read_field(cl, "dropout", c.clunet.dropout);
        if (cl.contains("optimizer"))
            c.clunet.optimizer = optimizer_from_string(cl.at("optimizer").get<std::string>());
    }
    detail::read_field(j, "eval_pairs", c.eval_pairs);
    detail::read_field(j, "compare_oracle", c.compare_oracle);
    detail::read_field(j, "seed", c.seed);

    // keep the stage configs in sync with the top-level knobs
    c.labnet.threshold = c.threshold;
    c.labnet.lambda = c.lambda;
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrKind::Io, "cannot open '", path, "'");
    Json j;
    try {
        j = Json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::Parse, path, ": ", e.what());
    }
    try {
        return config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::InvalidArgument, path, ": ", e.what());
    }
}

inline void save_config(const ExperimentConfig& c, const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(ErrKind::Io, "cannot open '", path, "' for writing");
    os << to_json(c).dump(2) << "\n";
    if (!os) fail(ErrKind::Io, "write failed for '", path, "'");
}

/// FNV-1a over the canonical JSON dump; names the run directory.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string dump = to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace s3c2
