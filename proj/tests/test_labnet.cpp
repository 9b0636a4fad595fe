#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "s3c2/labnet.hpp"
#include "s3c2/metrics.hpp"
#include "support/oracles.hpp"

using namespace s3c2;

namespace {

// Encoder that passes features through unchanged: one identity layer, W = I.
LabNetModel identity_labnet(std::size_t dim, double threshold = 0.3) {
    LabNetModel model;
    Network enc;
    DenseLayer l;
    l.weights = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) l.weights(i, i) = 1.0;
    l.biases.assign(dim, 0.0);
    l.activation = Activation::Identity;
    enc.layers.push_back(std::move(l));
    model.encoder = std::move(enc);
    model.threshold_T = threshold;
    model.lambda = 0.0;
    return model;
}

LabNetModel random_labnet(std::size_t dim, std::uint64_t seed, bool semi = false,
                          double lambda = 0.0) {
    LabNetConfig cfg;
    cfg.hidden = 8;
    cfg.embed_dim = 6;
    cfg.dropout = 0.0;
    cfg.lambda = lambda;
    cfg.semi_supervised = semi;
    Rng rng(seed);
    return make_labnet(dim, cfg, rng);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = u(gen);
    return m;
}

std::string params_fingerprint(const LabNetModel& model) {
    std::ostringstream os;
    save_network(os, model.encoder);
    if (model.decoder) save_network(os, *model.decoder);
    return os.str();
}

}  // namespace

TEST(ContrastiveLoss, SpecExamples) {
    LabNetModel model = identity_labnet(2);
    Rng rng(1);

    // must pair with identical inputs contributes 0
    Matrix a = oracle::mat(1, 2, {0.3, 0.7});
    auto res = contrastive_loss(model, a, a, {LinkLabel::Must}, Mode::Infer, rng);
    EXPECT_DOUBLE_EQ(res.loss, 0.0);

    // cannot pair at exactly the margin contributes 0
    Matrix x = oracle::mat(1, 2, {0.0, 0.0});
    Matrix y = oracle::mat(1, 2, {1.0, 0.0});
    res = contrastive_loss(model, x, y, {LinkLabel::Cannot}, Mode::Infer, rng);
    EXPECT_DOUBLE_EQ(res.loss, 0.0);

    // one must pair at d = 0.5 and one cannot pair at d = 0.5
    Matrix left = oracle::mat(2, 2, {0, 0, 0, 0});
    Matrix right = oracle::mat(2, 2, {0.5, 0, 0.5, 0});
    res = contrastive_loss(model, left, right, {LinkLabel::Must, LinkLabel::Cannot},
                           Mode::Infer, rng);
    EXPECT_DOUBLE_EQ(res.loss, 0.25);
}

TEST(ContrastiveLoss, RejectsEmptyAndUnlabeledBatches) {
    LabNetModel model = identity_labnet(2);
    Rng rng(1);
    EXPECT_THROW(contrastive_loss(model, Matrix(0, 2), Matrix(0, 2), {},
                                  Mode::Infer, rng),
                 Error);
    Matrix a = oracle::mat(1, 2, {0, 0});
    EXPECT_THROW(
        contrastive_loss(model, a, a, {LinkLabel::Unlabeled}, Mode::Infer, rng),
        Error);
    EXPECT_THROW(
        contrastive_loss(model, a, Matrix(2, 2), {LinkLabel::Must}, Mode::Infer, rng),
        Error);
}

TEST(ContrastiveLoss, NonNegativeAndMatchesScalarOracle) {
    const LabNetModel model = random_labnet(3, 17);
    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 1 + gen() % 12;
        const Matrix left = random_matrix(n, 3, gen());
        const Matrix right = random_matrix(n, 3, gen());
        std::vector<LinkLabel> labels(n);
        for (auto& l : labels)
            l = gen() % 2 ? LinkLabel::Must : LinkLabel::Cannot;
        Rng rng(1);
        const auto res = contrastive_loss(model, left, right, labels, Mode::Infer, rng);
        EXPECT_GE(res.loss, 0.0);
        const double ref =
            oracle::naive_contrastive_loss(model.encoder, left, right, labels);
        EXPECT_NEAR(res.loss, ref, 1e-12);
    }
}

TEST(ContrastiveLoss, GradientsMatchFiniteDifferences) {
    Matrix left, right;
    std::vector<LinkLabel> labels{LinkLabel::Must, LinkLabel::Cannot, LinkLabel::Must,
                                  LinkLabel::Cannot, LinkLabel::Cannot};
    LabNetModel model = random_labnet(4, 1);
    for (std::uint64_t seed = 50;; ++seed) {
        model = random_labnet(4, seed);
        left = random_matrix(5, 4, seed * 3 + 1);
        right = random_matrix(5, 4, seed * 3 + 2);
        if (oracle::relu_preacts_are_safe(model.encoder, left) &&
            oracle::relu_preacts_are_safe(model.encoder, right) &&
            oracle::contrastive_config_is_safe(model, left, right))
            break;
    }
    Rng rng(1);
    const auto res = contrastive_loss(model, left, right, labels, Mode::Infer, rng);
    const auto loss = [&]() {
        Rng r(1);
        return contrastive_loss(model, left, right, labels, Mode::Infer, r).loss;
    };
    const auto check = oracle::finite_diff_check(model.encoder, res.encoder_grads, loss);
    EXPECT_TRUE(check.ok()) << "max rel err " << check.max_rel_err;
}

TEST(ReconstructionLoss, PerfectAndDegenerateReconstructions) {
    // identity encoder + identity decoder reconstructs exactly
    LabNetModel model = identity_labnet(3);
    Network dec;
    DenseLayer l;
    l.weights = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i) l.weights(i, i) = 1.0;
    l.biases.assign(3, 0.0);
    l.activation = Activation::Identity;
    dec.layers.push_back(l);
    model.decoder = dec;
    Rng rng(1);
    const Matrix pts = random_matrix(6, 3, 5);
    auto res = reconstruction_loss(model, pts, Mode::Infer, rng);
    EXPECT_DOUBLE_EQ(res.loss, 0.0);

    // zero decoder output on unit-norm inputs gives loss 1
    for (auto& v : model.decoder->layers[0].weights.data()) v = 0.0;
    Matrix unit = oracle::mat(2, 3, {1, 0, 0, 0, 0, 1});
    res = reconstruction_loss(model, unit, Mode::Infer, rng);
    EXPECT_DOUBLE_EQ(res.loss, 1.0);
}

TEST(ReconstructionLoss, MatchesScalarOracleAndNeedsDecoder) {
    LabNetModel model = random_labnet(3, 23, /*semi=*/true, /*lambda=*/0.05);
    Rng rng(1);
    const Matrix pts = random_matrix(9, 3, 31);
    const auto res = reconstruction_loss(model, pts, Mode::Infer, rng);
    const double ref =
        oracle::naive_reconstruction_loss(model.encoder, *model.decoder, pts);
    EXPECT_NEAR(res.loss, ref, 1e-12);

    LabNetModel no_decoder = random_labnet(3, 23);
    EXPECT_THROW(reconstruction_loss(no_decoder, pts, Mode::Infer, rng), Error);
}

TEST(TotalLoss, LambdaZeroEqualsContrastive) {
    LabNetModel model = random_labnet(3, 29);
    model.lambda = 0.0;
    const Matrix left = random_matrix(4, 3, 1);
    const Matrix right = random_matrix(4, 3, 2);
    const std::vector<LinkLabel> labels(4, LinkLabel::Must);
    Rng r1(1), r2(1);
    const auto total = total_loss(model, left, right, labels, left, Mode::Infer, r1);
    const auto contr = contrastive_loss(model, left, right, labels, Mode::Infer, r2);
    EXPECT_DOUBLE_EQ(total.loss, contr.loss);
    EXPECT_FALSE(total.decoder_grads.has_value());
}

TEST(TotalLoss, WeightedSumOfKnownComponents) {
    LabNetModel model = random_labnet(3, 41, /*semi=*/true, /*lambda=*/0.05);
    model.lambda = 0.05;
    const Matrix left = random_matrix(5, 3, 7);
    const Matrix right = random_matrix(5, 3, 8);
    const Matrix pts = random_matrix(6, 3, 9);
    std::vector<LinkLabel> labels(5, LinkLabel::Cannot);
    Rng r1(1), r2(1), r3(1);
    const auto total = total_loss(model, left, right, labels, pts, Mode::Infer, r1);
    const auto contr = contrastive_loss(model, left, right, labels, Mode::Infer, r2);
    const auto rec = reconstruction_loss(model, pts, Mode::Infer, r3);
    EXPECT_NEAR(total.loss, contr.loss + 0.05 * rec.loss, 1e-14);
    EXPECT_DOUBLE_EQ(total.contrastive, contr.loss);
    EXPECT_DOUBLE_EQ(total.reconstruction, rec.loss);
}

TEST(TotalLoss, GradientsMatchFiniteDifferences) {
    LabNetModel model = random_labnet(3, 1, true, 0.05);
    Matrix left, right, pts;
    std::vector<LinkLabel> labels{LinkLabel::Must, LinkLabel::Cannot, LinkLabel::Must};
    for (std::uint64_t seed = 90;; ++seed) {
        model = random_labnet(3, seed, true, 0.05);
        left = random_matrix(3, 3, seed * 5 + 1);
        right = random_matrix(3, 3, seed * 5 + 2);
        pts = random_matrix(4, 3, seed * 5 + 3);
        const Matrix emb = embed(model, pts);
        if (oracle::relu_preacts_are_safe(model.encoder, left) &&
            oracle::relu_preacts_are_safe(model.encoder, right) &&
            oracle::relu_preacts_are_safe(model.encoder, pts) &&
            oracle::relu_preacts_are_safe(*model.decoder, emb) &&
            oracle::contrastive_config_is_safe(model, left, right))
            break;
    }
    Rng rng(1);
    const auto res = total_loss(model, left, right, labels, pts, Mode::Infer, rng);
    const auto loss = [&]() {
        Rng r(1);
        return total_loss(model, left, right, labels, pts, Mode::Infer, r).loss;
    };
    const auto check = oracle::finite_diff_check2(model.encoder, res.encoder_grads,
                                                  *model.decoder, *res.decoder_grads,
                                                  loss);
    EXPECT_TRUE(check.ok()) << "max rel err " << check.max_rel_err;
}

TEST(TrainLabnet, ZeroEpochsLeaveParametersUnchanged) {
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 10;
    spec.seed = 3;
    const Dataset ds = make_blobs(spec);
    Rng cs_rng(1);
    const ConstraintSet cs = sample_constraints(ds, 10, cs_rng);
    LabNetModel model = random_labnet(ds.dim(), 5);
    const std::string before = params_fingerprint(model);
    Rng rng(2);
    const auto trace = train_labnet(model, ds, cs, 0, 32, rng);
    EXPECT_TRUE(trace.epochs.empty());
    EXPECT_EQ(params_fingerprint(model), before);
}

TEST(TrainLabnet, ImprovesContrastiveLossOnSeparatedBlobs) {
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 30;
    spec.dim = 2;
    spec.center_spread = 10.0;
    spec.cluster_stddev = 0.5;
    spec.seed = 11;
    Dataset ds = make_blobs(spec);
    NormalizationParams::fit(ds.features).apply(ds.features);
    Rng cs_rng(7);
    const ConstraintSet cs = sample_constraints(ds, 100, cs_rng);
    LabNetConfig cfg;
    cfg.hidden = 16;
    cfg.embed_dim = 8;
    cfg.dropout = 0.0;
    Rng init(9);
    LabNetModel model = make_labnet(ds.dim(), cfg, init);
    Rng rng(13);
    const auto trace = train_labnet(model, ds, cs, 15, 64, rng);
    ASSERT_EQ(trace.epochs.size(), 15u);
    EXPECT_LT(trace.epochs.back().contrastive, trace.epochs.front().contrastive);
}

TEST(TrainLabnet, DeterministicGivenSeeds) {
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 12;
    spec.seed = 21;
    const Dataset ds = make_blobs(spec);
    Rng cs_rng(3);
    const ConstraintSet cs = sample_constraints(ds, 20, cs_rng);
    LabNetModel m1 = random_labnet(ds.dim(), 77);
    LabNetModel m2 = random_labnet(ds.dim(), 77);
    Rng r1(5), r2(5);
    train_labnet(m1, ds, cs, 4, 16, r1);
    train_labnet(m2, ds, cs, 4, 16, r2);
    EXPECT_EQ(params_fingerprint(m1), params_fingerprint(m2));
}

TEST(TrainLabnet, RequiresNonReflexiveConstraints) {
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 5;
    spec.seed = 2;
    const Dataset ds = make_blobs(spec);
    ConstraintSet cs(ds.size());  // reflexive only
    LabNetModel model = random_labnet(ds.dim(), 1);
    Rng rng(1);
    EXPECT_THROW(train_labnet(model, ds, cs, 1, 16, rng), Error);
}

TEST(PredictLink, ThresholdSemantics) {
    LabNetModel model = identity_labnet(2, 0.3);
    const Matrix origin = oracle::mat(1, 2, {0, 0});
    const Matrix same = oracle::mat(1, 2, {0, 0});
    const Matrix far = oracle::mat(1, 2, {1, 0});
    EXPECT_EQ(predict_link(model, origin, same), LinkLabel::Must);
    EXPECT_EQ(predict_link(model, origin, far), LinkLabel::Cannot);  // 1 >= 0.3

    model.threshold_T = 0.0;  // every pair with d > 0 becomes a cannot-link
    const Matrix eps = oracle::mat(1, 2, {1e-8, 0});
    EXPECT_EQ(predict_link(model, origin, eps), LinkLabel::Cannot);
    EXPECT_EQ(predict_link(model, origin, same), LinkLabel::Cannot);  // d = 0, T = 0
}

TEST(PredictLink, SymmetricViaSharedWeights) {
    const LabNetModel model = random_labnet(3, 55);
    const Matrix x = random_matrix(1, 3, 6);
    const Matrix y = random_matrix(1, 3, 7);
    EXPECT_DOUBLE_EQ(squared_embedding_distance(model, x, y),
                     squared_embedding_distance(model, y, x));
    EXPECT_EQ(predict_link(model, x, y), predict_link(model, y, x));
}

TEST(Augment, FullyLabeledInputIsReturnedUnchanged) {
    const LabNetModel model = identity_labnet(1);
    Dataset ds;
    ds.features = oracle::mat(3, 1, {0, 1, 2});
    ConstraintSet cs(3);
    cs.add_must(0, 1);
    cs.add_cannot(0, 2);
    cs.add_cannot(1, 2);
    const ConstraintSet out = augment_constraints(model, ds, cs);
    EXPECT_EQ(out.must_pairs(), cs.must_pairs());
    EXPECT_EQ(out.cannot_pairs(), cs.cannot_pairs());
}

TEST(Augment, ThresholdZeroSendsAllUnlabeledToCannot) {
    LabNetModel model = identity_labnet(1, 0.3);
    model.threshold_T = 0.0;
    Dataset ds;
    ds.features = oracle::mat(4, 1, {0, 0.1, 0.2, 0.9});
    ConstraintSet cs(4);
    cs.add_must(0, 1);
    const ConstraintSet out = augment_constraints(model, ds, cs);
    EXPECT_EQ(out.must_pairs().size(), 1u);  // M-tilde = M
    EXPECT_EQ(out.cannot_pairs().size(), 5u);
}

TEST(Augment, CoversAllPairsAndNeverOverridesGivenLabels) {
    const LabNetModel model = random_labnet(2, 91);
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 8;
    spec.seed = 6;
    const Dataset ds = make_blobs(spec);
    Rng cs_rng(8);
    const ConstraintSet cs = sample_constraints(ds, 8, cs_rng);
    const ConstraintSet out = augment_constraints(model, ds, cs);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.size(); ++j) {
            EXPECT_NE(out.label(i, j), LinkLabel::Unlabeled);  // covers X^2
            if (cs.label(i, j) != LinkLabel::Unlabeled)
                EXPECT_EQ(out.label(i, j), cs.label(i, j));
        }
    EXPECT_EQ(out.must_size() - out.n_points() + out.cannot_size(),
              ds.size() * (ds.size() - 1));
}

TEST(Augment, RaisingThresholdNeverShrinksMTilde) {
    const LabNetModel base = random_labnet(2, 101);
    BlobSpec spec;
    spec.k = 2;
    spec.points_per_cluster = 10;
    spec.seed = 10;
    const Dataset ds = make_blobs(spec);
    ConstraintSet cs(ds.size());
    LabNetModel low = base, high = base;
    low.threshold_T = 0.1;
    high.threshold_T = 0.5;
    const ConstraintSet a = augment_constraints(low, ds, cs);
    const ConstraintSet b = augment_constraints(high, ds, cs);
    EXPECT_LE(a.must_pairs().size(), b.must_pairs().size());
    // set inclusion, not just counts
    for (const auto& [i, j] : a.must_pairs())
        EXPECT_EQ(b.label(i, j), LinkLabel::Must);
}

TEST(Augment, ExportCarriesGivenPredictedMarkers) {
    const LabNetModel model = identity_labnet(1, 0.3);
    Dataset ds;
    ds.features = oracle::mat(3, 1, {0, 0.05, 5});
    ConstraintSet cs(3);
    cs.add_must(0, 1);
    const ConstraintSet out = augment_constraints(model, ds, cs);
    const std::string path =
        (std::filesystem::temp_directory_path() / "s3c2_aug.txt").string();
    save_augmented_constraints(out, cs, path);
    std::ifstream is(path);
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    EXPECT_NE(text.find("0 1 M given"), std::string::npos);
    EXPECT_NE(text.find("0 2 C predicted"), std::string::npos);
    std::filesystem::remove(path);
}
