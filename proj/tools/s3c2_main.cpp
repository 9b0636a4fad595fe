// s3c2 command-line driver: data generation, constraint sampling, the two
// training stages, seeded end-to-end runs, threshold sweeps, and reports.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 training or
// runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "s3c2/checkpoint.hpp"
#include "s3c2/clunet.hpp"
#include "s3c2/config.hpp"
#include "s3c2/constraints.hpp"
#include "s3c2/dataset.hpp"
#include "s3c2/labnet.hpp"
#include "s3c2/metrics.hpp"
#include "s3c2/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

int exit_code_for(const s3c2::Error& e) {
    switch (e.kind()) {
        case s3c2::ErrKind::InvalidArgument:
            return kExitConfig;
        case s3c2::ErrKind::Parse:
        case s3c2::ErrKind::Io:
            return kExitData;
        default:
            return kExitTraining;
    }
}

struct DataArgs {
    std::string path;
    int label_col = -1;
    bool has_label = true;
    bool normalize = true;
    std::string normalization = "minmax";
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--data", args.path, "input CSV file")->required();
    cmd->add_option("--label-col", args.label_col,
                    "label column index (negative counts from the end)");
    cmd->add_flag("!--no-label", args.has_label, "treat every column as a feature");
    cmd->add_option("--normalize", args.normalize,
                    "normalize features on load (default true)");
    cmd->add_option("--normalization", args.normalization, "minmax or zscore")
        ->check(CLI::IsMember({"minmax", "zscore"}));
}

s3c2::Dataset load_data(const DataArgs& args) {
    std::optional<int> label;
    if (args.has_label) label = args.label_col;
    return s3c2::load_csv(args.path, label, args.normalize,
                          args.normalization == "zscore"
                              ? s3c2::NormalizationKind::ZScore
                              : s3c2::NormalizationKind::MinMax);
}

void write_assignments_csv(const std::vector<int>& labels, const std::string& path) {
    std::ofstream os(path);
    if (!os) s3c2::fail(s3c2::ErrKind::Io, "cannot open '", path, "' for writing");
    os << "index,cluster\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        os << i << "," << labels[i] << "\n";
    if (!os) s3c2::fail(s3c2::ErrKind::Io, "write failed for '", path, "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"S3C2: two-stage semi-supervised clustering with pairwise constraints"};
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "generate a Gaussian-blob CSV dataset");
    s3c2::BlobSpec blob;
    std::string gen_out;
    gen->add_option("--k", blob.k, "number of clusters");
    gen->add_option("--per-cluster", blob.points_per_cluster, "points per cluster");
    gen->add_option("--dim", blob.dim, "feature dimension");
    gen->add_option("--spread", blob.center_spread, "centers uniform in [0, spread]^dim");
    gen->add_option("--stddev", blob.cluster_stddev, "isotropic cluster stddev");
    gen->add_option("--seed", blob.seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV (label in last column)")->required();

    // ---- sample-constraints ----
    auto* sample = app.add_subcommand("sample-constraints",
                                      "sample must/cannot-link pairs from true labels");
    DataArgs sample_data;
    add_data_options(sample, sample_data);
    std::size_t sample_count = 100;
    std::uint64_t sample_seed = 1;
    std::string sample_out;
    sample->add_option("--count", sample_count, "total pairs (half must, half cannot)");
    sample->add_option("--seed", sample_seed, "sampler seed");
    sample->add_option("--out", sample_out, "output constraints file")->required();

    // ---- train-labnet ----
    auto* tlab = app.add_subcommand("train-labnet", "train the stage-1 labeling network");
    DataArgs tlab_data;
    add_data_options(tlab, tlab_data);
    s3c2::LabNetConfig lab_cfg;
    std::string tlab_constraints, tlab_out, tlab_aug_out, tlab_optimizer = "adam";
    std::uint64_t tlab_seed = 1;
    tlab->add_option("--constraints", tlab_constraints, "constraints file")->required();
    tlab->add_option("--out", tlab_out, "output checkpoint")->required();
    tlab->add_option("--epochs", lab_cfg.epochs, "training epochs");
    tlab->add_option("--batch-size", lab_cfg.batch_size, "pairs per batch");
    tlab->add_option("--lr", lab_cfg.learning_rate, "learning rate");
    tlab->add_option("--hidden", lab_cfg.hidden, "hidden layer width");
    tlab->add_option("--embed-dim", lab_cfg.embed_dim, "embedding dimension");
    tlab->add_option("--dropout", lab_cfg.dropout, "hidden dropout rate");
    tlab->add_option("--threshold", lab_cfg.threshold, "link prediction threshold T");
    tlab->add_option("--lambda", lab_cfg.lambda, "reconstruction trade-off");
    tlab->add_flag("--semi", lab_cfg.semi_supervised,
                   "semi-supervised variant (adds a decoder)");
    tlab->add_option("--optimizer", tlab_optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    tlab->add_option("--seed", tlab_seed, "init + shuffle seed");
    tlab->add_option("--export-augmented", tlab_aug_out,
                     "also write the fully labeled pair set (given/predicted markers)");

    // ---- train-clunet ----
    auto* tclu = app.add_subcommand("train-clunet", "train the stage-2 clustering network");
    DataArgs tclu_data;
    add_data_options(tclu, tclu_data);
    s3c2::CluNetConfig clu_cfg;
    std::string tclu_constraints, tclu_labnet, tclu_out, tclu_optimizer = "adam";
    std::size_t tclu_k = 0;
    std::uint64_t tclu_seed = 1;
    tclu->add_option("--constraints", tclu_constraints, "constraints file")->required();
    tclu->add_option("--labnet", tclu_labnet, "stage-1 checkpoint")->required();
    tclu->add_option("--out", tclu_out, "output checkpoint")->required();
    tclu->add_option("--k", tclu_k, "number of clusters (default: from labels)");
    tclu->add_option("--epochs", clu_cfg.epochs, "training epochs");
    tclu->add_option("--given-per-batch", clu_cfg.given_per_batch,
                     "given constraints per batch");
    tclu->add_option("--unlabeled-per-batch", clu_cfg.unlabeled_per_batch,
                     "labnet-labeled pairs per batch");
    tclu->add_option("--lr", clu_cfg.learning_rate, "learning rate");
    tclu->add_option("--hidden", clu_cfg.hidden, "hidden layer width");
    tclu->add_option("--dropout", clu_cfg.dropout, "hidden dropout rate");
    tclu->add_option("--optimizer", tclu_optimizer, "adam or sgd")
        ->check(CLI::IsMember({"adam", "sgd"}));
    tclu->add_option("--seed", tclu_seed, "init + sampling seed");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate checkpoints against true labels");
    DataArgs ev_data;
    add_data_options(ev, ev_data);
    std::string ev_clunet, ev_labnet, ev_assignments, ev_nmi_norm = "arithmetic";
    std::size_t ev_pairs = 2000;
    std::uint64_t ev_seed = 1;
    ev->add_option("--clunet", ev_clunet, "stage-2 checkpoint")->required();
    ev->add_option("--labnet", ev_labnet, "stage-1 checkpoint (adds labeling stats)");
    ev->add_option("--eval-pairs", ev_pairs, "pairs sampled for labeling stats");
    ev->add_option("--seed", ev_seed, "pair sampling seed");
    ev->add_option("--assignments", ev_assignments, "write index,cluster CSV here");
    ev->add_option("--nmi-norm", ev_nmi_norm, "arithmetic or geometric")
        ->check(CLI::IsMember({"arithmetic", "geometric"}));

    // ---- run ----
    auto* run = app.add_subcommand("run", "full pipeline over constraint levels x replicates");
    std::string run_config, run_out_root = "runs";
    std::optional<std::uint64_t> run_seed;
    std::optional<std::size_t> run_replicates;
    bool run_compare_oracle = false, run_no_artifacts = false;
    run->add_option("--config", run_config, "experiment config JSON")->required();
    run->add_option("--out-root", run_out_root, "directory for run outputs");
    run->add_option("--seed", run_seed, "override config seed");
    run->add_option("--replicates", run_replicates, "override replicate count");
    run->add_flag("--compare-oracle", run_compare_oracle,
                  "add a true-label-oracle arm to every cell");
    run->add_flag("--no-artifacts", run_no_artifacts,
                  "skip constraint/checkpoint persistence");

    // ---- sweep-threshold ----
    auto* sweep = app.add_subcommand("sweep-threshold",
                                     "factorial threshold sweep with paired samples");
    std::string sweep_config, sweep_out_root = "runs";
    std::optional<std::uint64_t> sweep_seed;
    sweep->add_option("--config", sweep_config,
                      "experiment config JSON with a 'thresholds' list")->required();
    sweep->add_option("--out-root", sweep_out_root, "directory for sweep outputs");
    sweep->add_option("--seed", sweep_seed, "override config seed");

    // ---- report-correlation ----
    auto* corr = app.add_subcommand("report-correlation",
                                    "Pearson r between NMI and LabNet indicators");
    std::string corr_report, corr_out;
    corr->add_option("--report", corr_report, "report.csv from a run")->required();
    corr->add_option("--out", corr_out, "output correlation CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) {
            s3c2::Dataset ds = s3c2::make_blobs(blob);
            s3c2::save_csv(ds, gen_out);
            s3c2::Json meta;
            meta["k"] = blob.k;
            meta["points_per_cluster"] = blob.points_per_cluster;
            meta["dim"] = blob.dim;
            meta["center_spread"] = blob.center_spread;
            meta["cluster_stddev"] = blob.cluster_stddev;
            meta["separability_ratio"] = blob.separability_ratio();
            meta["seed"] = blob.seed;
            std::ofstream ms(gen_out + ".meta.json");
            if (!ms) s3c2::fail(s3c2::ErrKind::Io, "cannot write blob metadata");
            ms << meta.dump(2) << "\n";
            std::cout << "wrote " << ds.size() << " points to " << gen_out << "\n";
        } else if (*sample) {
            s3c2::Dataset ds = load_data(sample_data);
            s3c2::Rng rng(sample_seed);
            s3c2::ConstraintSet cs = s3c2::sample_constraints(ds, sample_count, rng);
            s3c2::save_constraints(cs, sample_out);
            std::cout << "wrote " << cs.must_pairs().size() << " must + "
                      << cs.cannot_pairs().size() << " cannot pairs to " << sample_out
                      << "\n";
        } else if (*tlab) {
            s3c2::Dataset ds = load_data(tlab_data);
            s3c2::ConstraintSet cs = s3c2::load_constraints(tlab_constraints, ds.size());
            lab_cfg.optimizer = s3c2::optimizer_from_string(tlab_optimizer);
            s3c2::Rng rng(s3c2::derive_seed(tlab_seed, {s3c2::seed_stage::kLabNetInit}));
            s3c2::LabNetModel model = s3c2::make_labnet(ds.dim(), lab_cfg, rng);
            s3c2::Rng train_rng(
                s3c2::derive_seed(tlab_seed, {s3c2::seed_stage::kLabNetTrain}));
            const s3c2::LabNetTrace trace = s3c2::train_labnet(
                model, ds, cs, lab_cfg.epochs, lab_cfg.batch_size, train_rng);
            s3c2::save_labnet(model, tlab_out);
            if (!tlab_aug_out.empty()) {
                const s3c2::ConstraintSet aug = s3c2::augment_constraints(model, ds, cs);
                s3c2::save_augmented_constraints(aug, cs, tlab_aug_out);
            }
            if (!trace.epochs.empty())
                std::printf("labnet loss %.6g -> %.6g over %zu epochs\n",
                            trace.epochs.front().loss, trace.epochs.back().loss,
                            trace.epochs.size());
            std::cout << "wrote " << tlab_out << "\n";
        } else if (*tclu) {
            s3c2::Dataset ds = load_data(tclu_data);
            s3c2::ConstraintSet cs = s3c2::load_constraints(tclu_constraints, ds.size());
            s3c2::LabNetModel labnet = s3c2::load_labnet(tclu_labnet);
            clu_cfg.optimizer = s3c2::optimizer_from_string(tclu_optimizer);
            const std::size_t k = tclu_k > 0 ? tclu_k : static_cast<std::size_t>(ds.k);
            s3c2::Rng rng(s3c2::derive_seed(tclu_seed, {s3c2::seed_stage::kCluNetInit}));
            s3c2::CluNetModel model = s3c2::make_clunet(ds.dim(), k, clu_cfg, rng);
            s3c2::Rng train_rng(
                s3c2::derive_seed(tclu_seed, {s3c2::seed_stage::kCluNetTrain}));
            const s3c2::CluNetTrace trace =
                s3c2::train_clunet(model, ds, cs, labnet, clu_cfg, train_rng);
            s3c2::save_clunet(model, tclu_out);
            if (!trace.epoch_loss.empty())
                std::printf("clunet loss %.6g -> %.6g over %zu epochs\n",
                            trace.epoch_loss.front(), trace.epoch_loss.back(),
                            trace.epoch_loss.size());
            std::cout << "wrote " << tclu_out << "\n";
        } else if (*ev) {
            s3c2::Dataset ds = load_data(ev_data);
            s3c2::CluNetModel clunet = s3c2::load_clunet(ev_clunet);
            const std::vector<int> labels = s3c2::assign(clunet, ds.features);
            s3c2::Json out;
            out["n"] = ds.size();
            out["k"] = clunet.k;
            if (ds.true_labels) {
                const s3c2::NmiNorm norm = ev_nmi_norm == "geometric"
                                               ? s3c2::NmiNorm::GeometricMean
                                               : s3c2::NmiNorm::ArithmeticMean;
                out["nmi"] = s3c2::nmi(labels, *ds.true_labels, norm);
            }
            const s3c2::ClassMass cm =
                s3c2::class_mass_and_tsallis(s3c2::posterior(clunet, ds.features));
            out["sum_sq"] = cm.sum_sq;
            out["tsallis_s2"] = cm.tsallis_s2;
            if (!ev_labnet.empty()) {
                if (!ds.true_labels)
                    s3c2::fail(s3c2::ErrKind::InvalidArgument,
                               "eval: labeling stats need true labels");
                s3c2::LabNetModel labnet = s3c2::load_labnet(ev_labnet);
                s3c2::Rng rng(s3c2::derive_seed(ev_seed, {s3c2::seed_stage::kEvalPairs}));
                const auto pairs = s3c2::sample_eval_pairs(ds, ev_pairs, rng);
                const s3c2::LabelingStats st = s3c2::labeling_stats(labnet, ds, pairs);
                out["labnet_accuracy"] = st.accuracy;
                if (st.ml_rate) out["ml_rate"] = *st.ml_rate;
                if (st.cl_rate) out["cl_rate"] = *st.cl_rate;
                out["threshold"] = labnet.threshold_T;
            }
            if (!ev_assignments.empty()) write_assignments_csv(labels, ev_assignments);
            std::cout << out.dump(2) << "\n";
        } else if (*run) {
            s3c2::ExperimentConfig cfg = s3c2::load_config(run_config);
            if (run_seed) cfg.seed = *run_seed;
            if (run_replicates) cfg.replicates = *run_replicates;
            if (run_compare_oracle) cfg.compare_oracle = true;
            cfg.validate();

            const std::string dir = run_out_root + "/run-" + s3c2::config_hash(cfg);
            std::filesystem::create_directories(dir);
            const std::string artifacts = run_no_artifacts ? "" : dir + "/artifacts";
            const s3c2::RunReport report = s3c2::run_pipeline(cfg, artifacts);
            s3c2::save_config(cfg, dir + "/config.json");
            s3c2::write_report_csv(report, dir + "/report.csv");
            s3c2::write_aggregate_csv(report, dir + "/aggregate.csv");
            s3c2::write_run_jsonl(report, dir + "/log.jsonl");
            s3c2::write_correlation_csv(s3c2::correlation_report(report.rows),
                                        dir + "/correlation.csv");
            std::size_t failures = 0;
            for (const auto& row : report.rows)
                if (!row.ok) ++failures;
            std::cout << "run " << report.hash << ": " << report.rows.size()
                      << " rows (" << failures << " failed) -> " << dir << "\n";
            if (failures == report.rows.size() && !report.rows.empty())
                return kExitTraining;
        } else if (*sweep) {
            s3c2::ExperimentConfig cfg = s3c2::load_config(sweep_config);
            if (sweep_seed) cfg.seed = *sweep_seed;
            cfg.validate();
            const std::string dir = sweep_out_root + "/sweep-" + s3c2::config_hash(cfg);
            std::filesystem::create_directories(dir);
            const s3c2::SweepReport report = s3c2::threshold_sweep(cfg);
            s3c2::save_config(cfg, dir + "/config.json");
            s3c2::write_sweep_csv(report, dir + "/sweep.csv");
            s3c2::write_sweep_table_csv(report, dir + "/sweep_table.csv");
            s3c2::write_sweep_jsonl(report, dir + "/log.jsonl");
            std::cout << "sweep " << report.hash << ": " << report.rows.size()
                      << " cells -> " << dir << "\n";
        } else if (*corr) {
            const auto rows = s3c2::load_report_csv(corr_report);
            s3c2::write_correlation_csv(s3c2::correlation_report(rows), corr_out);
            std::cout << "wrote " << corr_out << "\n";
        }
    } catch (const s3c2::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitTraining;
    }
    return 0;
}
