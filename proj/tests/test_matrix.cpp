#include <gtest/gtest.h>

#include <random>

#include "s3c2/matrix.hpp"
#include "support/oracles.hpp"

using namespace s3c2;

TEST(Matrix, ShapeAndAccess) {
    Matrix m(2, 3, 1.5);
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m.size(), 6u);
    EXPECT_DOUBLE_EQ(m(1, 2), 1.5);
    m(0, 1) = 4.25;
    EXPECT_DOUBLE_EQ(m(0, 1), 4.25);
    EXPECT_TRUE(m.all_finite());
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(m.all_finite());
}

TEST(Matrix, MatmulMatchesNaiveTripleLoop) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t m = 1 + rng() % 7, k = 1 + rng() % 7, n = 1 + rng() % 7;
        Matrix a(m, k), b(k, n);
        for (auto& v : a.data()) v = u(rng);
        for (auto& v : b.data()) v = u(rng);
        const Matrix c = matmul(a, b);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < k; ++t) acc += a(i, t) * b(t, j);
                EXPECT_NEAR(c(i, j), acc, 1e-12);
            }
    }
}

TEST(Matrix, TransposedProductsAgreeWithExplicitTranspose) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(6, 4), b(6, 3);
    for (auto& v : a.data()) v = u(rng);
    for (auto& v : b.data()) v = u(rng);
    const Matrix atb = matmul_at_b(a, b);
    const Matrix ref = matmul(transpose(a), b);
    ASSERT_TRUE(atb.same_shape(ref));
    for (std::size_t t = 0; t < ref.size(); ++t)
        EXPECT_NEAR(atb.data()[t], ref.data()[t], 1e-12);

    Matrix c(5, 4);
    for (auto& v : c.data()) v = u(rng);
    const Matrix abt = matmul_a_bt(a, c);
    const Matrix ref2 = matmul(a, transpose(c));
    for (std::size_t t = 0; t < ref2.size(); ++t)
        EXPECT_NEAR(abt.data()[t], ref2.data()[t], 1e-12);
}

TEST(Matrix, MatmulRejectsMismatchedShapes) {
    Matrix a(2, 3), b(4, 2);
    EXPECT_THROW(matmul(a, b), Error);
    EXPECT_THROW(matmul_at_b(a, b), Error);
    EXPECT_THROW(matmul_a_bt(a, b), Error);
}

TEST(Distance, IdenticalRowsAreZero) {
    Matrix a = oracle::mat(2, 3, {1, 2, 3, -1, 0, 4});
    const auto d = euclidean_pair_distance(a, a);
    EXPECT_DOUBLE_EQ(d[0], 0.0);
    EXPECT_DOUBLE_EQ(d[1], 0.0);
}

TEST(Distance, ThreeFourFiveTriangle) {
    Matrix a = oracle::mat(1, 2, {0, 0});
    Matrix b = oracle::mat(1, 2, {3, 4});
    EXPECT_DOUBLE_EQ(euclidean_pair_distance(a, b)[0], 5.0);
}

TEST(Distance, MatchesScalarLoopOnRandomRows) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Matrix a(20, 9), b(20, 9);
    for (auto& v : a.data()) v = u(rng);
    for (auto& v : b.data()) v = u(rng);
    const auto d = euclidean_pair_distance(a, b);
    for (std::size_t i = 0; i < 20; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 9; ++j) {
            const double diff = a(i, j) - b(i, j);
            acc += diff * diff;
        }
        EXPECT_NEAR(d[i], std::sqrt(acc), 1e-12);
    }
}

TEST(Distance, RejectsShapeMismatch) {
    Matrix a(2, 3), b(2, 4);
    EXPECT_THROW(euclidean_pair_distance(a, b), Error);
}

TEST(Matrix, GatherRows) {
    Matrix m = oracle::mat(3, 2, {1, 2, 3, 4, 5, 6});
    const Matrix g = gather_rows(m, {2, 0, 2});
    EXPECT_EQ(g.rows(), 3u);
    EXPECT_DOUBLE_EQ(g(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(g(1, 1), 2.0);
    EXPECT_DOUBLE_EQ(g(2, 0), 5.0);
    EXPECT_THROW(gather_rows(m, {3}), Error);
}
