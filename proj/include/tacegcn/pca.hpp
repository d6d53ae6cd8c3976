#pragma once

#include <vector>

#include "tacegcn/linalg.hpp"

namespace tacegcn {

struct PcaResult {
    Matrix scores;      // n x k projections
    Matrix components;  // k x d, orthonormal rows, descending eigenvalue
    std::vector<double> eigenvalues;
    std::vector<double> mean;  // column means used for centering
};

// Power iteration with deflation on the sample covariance (tolerance 1e-10).
// Component signs are fixed so the largest-magnitude entry is positive.
// Zero-variance directions yield zero eigenvalues and zero scores.
PcaResult pca_reduce(const Matrix& X, int n_components);

Matrix pca_transform(const PcaResult& basis, const Matrix& X);

}  // namespace tacegcn
