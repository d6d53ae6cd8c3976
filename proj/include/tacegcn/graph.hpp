#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tacegcn/dataset.hpp"
#include "tacegcn/linalg.hpp"

namespace tacegcn {

enum class NegativeCorrelationPolicy { ClampToZero };

struct GraphConfig {
    std::vector<std::string> edge_attrs{"Cirrhosis", "Sorafenib"};  // may be empty
    bool correlation_weighting = true;
    NegativeCorrelationPolicy negative_policy = NegativeCorrelationPolicy::ClampToZero;
};

struct PatientGraph {
    Matrix features;    // n x d, row per patient in cohort order
    Matrix adjacency;   // W: symmetric, nonnegative, zero diagonal
    Matrix normalized;  // A_hat = D^{-1/2} (W+I) D^{-1/2}, D_ii = 1 + sum_j W_ij
};

// Pearson correlation clamped into [0,1]; 0 when either vector is constant.
double pearson_similarity(const std::vector<double>& x, const std::vector<double>& y);

Matrix build_adjacency(const Cohort& cohort, const GraphConfig& cfg);
Matrix normalize_adjacency(const Matrix& W);
PatientGraph build_graph(const Cohort& cohort, const GraphConfig& cfg);

void save_graph_dump(const PatientGraph& graph, const std::vector<std::string>& attr_names,
                     const std::filesystem::path& path);

}  // namespace tacegcn
