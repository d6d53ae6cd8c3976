#include "tacegcn/pca.hpp"

#include <cmath>

#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void orthogonalize(std::vector<double>& v, const Matrix& components, int found) {
    for (int c = 0; c < found; ++c) {
        double proj = 0.0;
        for (int j = 0; j < components.cols; ++j) proj += components(c, j) * v[static_cast<std::size_t>(j)];
        for (int j = 0; j < components.cols; ++j) v[static_cast<std::size_t>(j)] -= proj * components(c, j);
    }
}

}  // namespace

PcaResult pca_reduce(const Matrix& X, int n_components) {
    require(X.rows >= 2, ErrorCode::TooFewSamples, "PCA needs at least 2 rows");
    require(n_components >= 1, ErrorCode::InvalidConfig, "n_components must be >= 1");
    require(all_finite(X), ErrorCode::NonFiniteInput, "PCA input holds non-finite values");
    const int n = X.rows, d = X.cols;
    const int k = std::min(n_components, d);

    PcaResult result;
    result.mean.assign(static_cast<std::size_t>(d), 0.0);
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) result.mean[static_cast<std::size_t>(j)] += X(i, j);
        result.mean[static_cast<std::size_t>(j)] /= static_cast<double>(n);
    }
    Matrix centered(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) centered(i, j) = X(i, j) - result.mean[static_cast<std::size_t>(j)];

    Matrix cov(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += centered(i, a) * centered(i, b);
            acc /= static_cast<double>(n - 1);
            cov(a, b) = acc;
            cov(b, a) = acc;
        }

    result.components = Matrix(k, d);
    result.eigenvalues.assign(static_cast<std::size_t>(k), 0.0);
    std::vector<double> v(static_cast<std::size_t>(d)), w(static_cast<std::size_t>(d));
    for (int comp = 0; comp < k; ++comp) {
        std::mt19937_64 gen(derive_seed(0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(comp)));
        for (double& x : v) x = normal01(gen);
        orthogonalize(v, result.components, comp);
        double norm = std::sqrt(dot(v, v));
        if (norm < 1e-300) {
            // degenerate: fall back to a unit basis vector orthogonal to found ones
            std::fill(v.begin(), v.end(), 0.0);
            v[static_cast<std::size_t>(comp % d)] = 1.0;
            orthogonalize(v, result.components, comp);
            norm = std::sqrt(dot(v, v));
        }
        for (double& x : v) x /= norm;

        double eigen = 0.0;
        for (int iter = 0; iter < 10000; ++iter) {
            for (int a = 0; a < d; ++a) {
                double acc = 0.0;
                for (int b = 0; b < d; ++b) acc += cov(a, b) * v[static_cast<std::size_t>(b)];
                w[static_cast<std::size_t>(a)] = acc;
            }
            orthogonalize(w, result.components, comp);
            double wnorm = std::sqrt(dot(w, w));
            if (wnorm < 1e-300) {
                eigen = 0.0;  // no variance left in this subspace
                break;
            }
            double diff = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                double delta = w[i] / wnorm - v[i];
                diff += delta * delta;
                v[i] = w[i] / wnorm;
            }
            eigen = wnorm;  // ||C v|| with unit input approximates the eigenvalue
            if (std::sqrt(diff) < 1e-10) break;
        }
        // Rayleigh quotient gives a cleaner eigenvalue than the iteration norm.
        for (int a = 0; a < d; ++a) {
            double acc = 0.0;
            for (int b = 0; b < d; ++b) acc += cov(a, b) * v[static_cast<std::size_t>(b)];
            w[static_cast<std::size_t>(a)] = acc;
        }
        eigen = dot(v, w);
        if (eigen < 0.0) eigen = 0.0;

        int big = 0;
        for (int j = 1; j < d; ++j)
            if (std::abs(v[static_cast<std::size_t>(j)]) > std::abs(v[static_cast<std::size_t>(big)]))
                big = j;
        if (v[static_cast<std::size_t>(big)] < 0.0)
            for (double& x : v) x = -x;

        for (int j = 0; j < d; ++j) result.components(comp, j) = v[static_cast<std::size_t>(j)];
        result.eigenvalues[static_cast<std::size_t>(comp)] = eigen;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                cov(a, b) -= eigen * v[static_cast<std::size_t>(a)] * v[static_cast<std::size_t>(b)];
    }

    result.scores = matmul_transpose_b(centered, result.components);
    // kill numerical dust on exactly-degenerate directions
    for (int c = 0; c < k; ++c)
        if (result.eigenvalues[static_cast<std::size_t>(c)] == 0.0)
            for (int i = 0; i < n; ++i) result.scores(i, c) = 0.0;
    return result;
}

Matrix pca_transform(const PcaResult& basis, const Matrix& X) {
    require(X.cols == basis.components.cols, ErrorCode::DimMismatch,
            "input width " + std::to_string(X.cols) + " does not match basis width " +
                std::to_string(basis.components.cols));
    Matrix centered(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i)
        for (int j = 0; j < X.cols; ++j)
            centered(i, j) = X(i, j) - basis.mean[static_cast<std::size_t>(j)];
    return matmul_transpose_b(centered, basis.components);
}

}  // namespace tacegcn
