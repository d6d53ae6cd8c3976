#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tacegcn/pca.hpp"
#include "tacegcn/rng.hpp"

using namespace tacegcn;

TEST_CASE("collinear 2D points load entirely on the first component") {
    Matrix x(6, 2);
    for (int i = 0; i < 6; ++i) {
        double t = static_cast<double>(i) - 2.5;
        x(i, 0) = t;
        x(i, 1) = 2.0 * t;
    }
    PcaResult r = pca_reduce(x, 2);
    CHECK(r.eigenvalues[0] > 0.0);
    CHECK(std::fabs(r.eigenvalues[1]) <= 1e-8);
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(r.scores(i, 1)) < 1e-8);
    // component direction is (1,2)/sqrt(5) up to the sign convention
    CHECK(std::fabs(r.components(0, 1) / r.components(0, 0)) == doctest::Approx(2.0));
}

TEST_CASE("complete basis reconstructs the data") {
    std::mt19937_64 gen(51);
    Matrix x = oracles::random_matrix(15, 5, gen, 3.0);
    PcaResult r = pca_reduce(x, 5);
    // X_hat = scores * components + mean
    Matrix recon = matmul(r.scores, r.components);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j)
            CHECK(std::fabs(recon(i, j) + r.mean[static_cast<std::size_t>(j)] - x(i, j)) <= 1e-8);
}

TEST_CASE("projected variances match a Jacobi eigen oracle") {
    std::mt19937_64 gen(52);
    Matrix x = oracles::random_matrix(20, 6, gen, 2.0);
    PcaResult r = pca_reduce(x, 6);

    // oracle: eigenvalues of the sample covariance
    std::vector<double> mean(6, 0.0);
    for (int j = 0; j < 6; ++j) {
        for (int i = 0; i < 20; ++i) mean[static_cast<std::size_t>(j)] += x(i, j);
        mean[static_cast<std::size_t>(j)] /= 20.0;
    }
    oracles::grid cov(6, std::vector<double>(6, 0.0));
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
            double acc = 0.0;
            for (int i = 0; i < 20; ++i)
                acc += (x(i, a) - mean[static_cast<std::size_t>(a)]) *
                       (x(i, b) - mean[static_cast<std::size_t>(b)]);
            cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = acc / 19.0;
        }
    std::vector<double> eig = oracles::jacobi_eigenvalues(cov);

    for (int c = 0; c < 6; ++c) {
        CHECK(std::fabs(r.eigenvalues[static_cast<std::size_t>(c)] -
                        eig[static_cast<std::size_t>(c)]) <= 1e-8);
        // variance of the c-th score column equals its eigenvalue
        double m = 0.0, v = 0.0;
        for (int i = 0; i < 20; ++i) m += r.scores(i, c);
        m /= 20.0;
        for (int i = 0; i < 20; ++i) v += (r.scores(i, c) - m) * (r.scores(i, c) - m);
        v /= 19.0;
        CHECK(std::fabs(v - eig[static_cast<std::size_t>(c)]) <= 1e-8);
    }
}

TEST_CASE("component rows are orthonormal") {
    std::mt19937_64 gen(53);
    Matrix x = oracles::random_matrix(25, 8, gen);
    PcaResult r = pca_reduce(x, 5);
    Matrix gram = matmul_transpose_b(r.components, r.components);
    for (int i = 0; i < gram.rows; ++i)
        for (int j = 0; j < gram.cols; ++j)
            CHECK(std::fabs(gram(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-8);
}

TEST_CASE("sign convention puts the largest component entry positive") {
    std::mt19937_64 gen(54);
    Matrix x = oracles::random_matrix(30, 4, gen);
    PcaResult r = pca_reduce(x, 4);
    for (int c = 0; c < r.components.rows; ++c) {
        double best = 0.0;
        for (int j = 0; j < r.components.cols; ++j)
            if (std::fabs(r.components(c, j)) > std::fabs(best)) best = r.components(c, j);
        CHECK(best > 0.0);
    }
}

TEST_CASE("zero-variance data yields zero scores") {
    Matrix x(5, 3, 2.5);
    PcaResult r = pca_reduce(x, 2);
    for (double v : r.scores.data) CHECK(v == 0.0);
    for (double e : r.eigenvalues) CHECK(e == 0.0);
}

TEST_CASE("pca_transform reproduces the training scores") {
    std::mt19937_64 gen(55);
    Matrix x = oracles::random_matrix(12, 6, gen);
    PcaResult r = pca_reduce(x, 3);
    Matrix again = pca_transform(r, x);
    REQUIRE(again.rows == r.scores.rows);
    REQUIRE(again.cols == r.scores.cols);
    for (std::size_t i = 0; i < again.data.size(); ++i)
        CHECK(std::fabs(again.data[i] - r.scores.data[i]) <= 1e-12);
}

TEST_CASE("pca preconditions") {
    Matrix one(1, 3, 0.0);
    CHECK(oracles::error_code_of([&] { pca_reduce(one, 1); }) == ErrorCode::TooFewSamples);
    Matrix ok(3, 3, 0.0);
    CHECK(oracles::error_code_of([&] { pca_reduce(ok, 0); }) == ErrorCode::InvalidConfig);
}
