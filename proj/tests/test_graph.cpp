#include "lpllp/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lpllp;

TEST(ComputeSimilarity, IdenticalPointsGiveUnitWeight) {
    Matrix x(2, 3);
    x << 1, 2, 3, 1, 2, 3;
    for (double gamma : {1e-3, 1.0, 50.0}) {
        const Matrix w = compute_similarity(x, gamma);
        EXPECT_EQ(w(0, 0), 0.0);
        EXPECT_EQ(w(1, 1), 0.0);
        EXPECT_EQ(w(0, 1), 1.0);
        EXPECT_EQ(w(1, 0), 1.0);
    }
}

TEST(ComputeSimilarity, UnitDistance) {
    Matrix x(2, 1);
    x << 0, 1;
    EXPECT_NEAR(compute_similarity(x, 1.0)(0, 1), 0.367879441171442, 1e-12);
}

TEST(ComputeSimilarity, CollinearTriple) {
    Matrix x(3, 1);
    x << 0, 1, 2;
    const Matrix w = compute_similarity(x, 1.0);
    // exp(-1 * 2^2) and exp(-1 * 1^2), evaluated by hand
    EXPECT_NEAR(w(0, 2), 0.0183156388887342, 1e-14);
    EXPECT_NEAR(w(0, 1), 0.367879441171442, 1e-14);
    EXPECT_NEAR(w(1, 2), 0.367879441171442, 1e-14);
}

TEST(ComputeSimilarity, RejectsBadBandwidthAndFeatures) {
    Matrix x(2, 1);
    x << 0, 1;
    EXPECT_THROW(compute_similarity(x, 0.0), InvalidInput);
    EXPECT_THROW(compute_similarity(x, -1.0), InvalidInput);
    x(1, 0) = std::nan("");
    EXPECT_THROW(compute_similarity(x, 1.0), InvalidInput);
}

TEST(RowNormalize, SingleNeighbour) {
    Matrix w(2, 2);
    w << 0, 2, 2, 0;
    const auto g = row_normalize(w);
    Matrix expected(2, 2);
    expected << 0, 1, 1, 0;
    EXPECT_EQ(g.transition, expected);
    EXPECT_EQ(g.degree, Vector::Constant(2, 2.0));
}

TEST(RowNormalize, Arithmetic) {
    Matrix w(3, 3);
    w << 0, 1, 3, 1, 0, 0, 3, 0, 0;
    const auto g = row_normalize(w);
    EXPECT_DOUBLE_EQ(g.transition(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(g.transition(0, 1), 0.25);
    EXPECT_DOUBLE_EQ(g.transition(0, 2), 0.75);
}

TEST(RowNormalize, ZeroDegreeRow) {
    Matrix w(3, 3);
    w << 0, 1, 0, 1, 0, 0, 0, 0, 0;
    EXPECT_THROW(row_normalize(w), InvalidInput);
}

TEST(GraphProperty, StochasticMonotoneAndScaleFree) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + trial % 20;
        Matrix x(n, 2);
        for (int i = 0; i < n; ++i) x.row(i) << z(rng), z(rng);
        const double gamma = std::exp(z(rng));

        const auto g = build_graph(x, gamma);
        for (int i = 0; i < n; ++i) {
            EXPECT_LE(std::abs(g.transition.row(i).sum() - 1.0), 1e-9);
            EXPECT_EQ(g.weights(i, i), 0.0);
            for (int j = 0; j < n; ++j) {
                EXPECT_GE(g.transition(i, j), 0.0);
                EXPECT_EQ(g.weights(i, j), g.weights(j, i));
            }
        }

        const Matrix sharper = compute_similarity(x, gamma * 1.7);
        EXPECT_TRUE((sharper.array() <= g.weights.array()).all());

        const auto scaled = row_normalize(3.5 * g.weights);
        EXPECT_LE((scaled.transition - g.transition).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Standardize, ZeroMeanUnitVariance) {
    Matrix x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    const Matrix z = standardize(x);
    EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-15);
    EXPECT_NEAR(z.col(0).squaredNorm() / 3.0, 1.0, 1e-12);
    EXPECT_EQ(z.col(1), Vector::Zero(4));
}
