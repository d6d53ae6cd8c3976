#include "tacegcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace tacegcn {

double pearson_similarity(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), ErrorCode::LengthMismatch,
            "vectors of length " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
    require(x.size() >= 2, ErrorCode::LengthMismatch, "need at least 2 entries");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;  // correlation undefined for constant vectors
    double rho = sxy / std::sqrt(sxx * syy);
    return std::clamp(rho, 0.0, 1.0);
}

Matrix build_adjacency(const Cohort& cohort, const GraphConfig& cfg) {
    const int n = static_cast<int>(cohort.patients.size());
    for (const std::string& attr : cfg.edge_attrs)
        require(std::find(cohort.attr_names.begin(), cohort.attr_names.end(), attr) !=
                    cohort.attr_names.end(),
                ErrorCode::UnknownAttribute, "edge attribute '" + attr + "' not in cohort");
    for (const PatientRecord& p : cohort.patients)
        require(p.feature_vector.has_value(), ErrorCode::MissingFeatureVector,
                "patient '" + p.id + "' has no feature vector");
    for (const PatientRecord& p : cohort.patients)
        require(p.feature_vector->size() == cohort.patients.front().feature_vector->size(),
                ErrorCode::DimMismatch, "patient '" + p.id + "' feature length differs");

    Matrix W(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            int agreement = 0;
            for (const std::string& attr : cfg.edge_attrs)
                if (cohort.patients[static_cast<std::size_t>(i)].binary_attrs.at(attr) ==
                    cohort.patients[static_cast<std::size_t>(j)].binary_attrs.at(attr))
                    ++agreement;
            double w = static_cast<double>(agreement);
            if (cfg.correlation_weighting && agreement > 0)
                w *= pearson_similarity(*cohort.patients[static_cast<std::size_t>(i)].feature_vector,
                                        *cohort.patients[static_cast<std::size_t>(j)].feature_vector);
            W(i, j) = w;
            W(j, i) = w;
        }
    }
    return W;
}

Matrix normalize_adjacency(const Matrix& W) {
    require(W.rows == W.cols, ErrorCode::ShapeMismatch, "adjacency must be square");
    require(all_finite(W), ErrorCode::NonFiniteInput, "adjacency holds non-finite entries");
    const int n = W.rows;
    for (int i = 0; i < n; ++i) {
        require(W(i, i) == 0.0, ErrorCode::InvalidConfig,
                "adjacency diagonal must be zero (self-loops are added here)");
        for (int j = 0; j < n; ++j) {
            require(W(i, j) >= 0.0, ErrorCode::NegativeWeight,
                    "negative weight at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            require(W(i, j) == W(j, i), ErrorCode::AsymmetricInput,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) + ") breaks symmetry");
        }
    }
    std::vector<double> degree(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double d = 1.0;  // self-loop
        for (int j = 0; j < n; ++j) d += W(i, j);
        degree[static_cast<std::size_t>(i)] = d;
    }
    Matrix A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double w = W(i, j) + (i == j ? 1.0 : 0.0);
            double v = w / std::sqrt(degree[static_cast<std::size_t>(i)] *
                                     degree[static_cast<std::size_t>(j)]);
            A(i, j) = v;
            A(j, i) = v;
        }
    }
    return A;
}

PatientGraph build_graph(const Cohort& cohort, const GraphConfig& cfg) {
    require(!cohort.patients.empty(), ErrorCode::TooFewSamples, "empty cohort");
    PatientGraph g;
    g.adjacency = build_adjacency(cohort, cfg);
    g.normalized = normalize_adjacency(g.adjacency);
    const int n = static_cast<int>(cohort.patients.size());
    const int d = static_cast<int>(cohort.patients.front().feature_vector->size());
    g.features = Matrix(n, d);
    for (int i = 0; i < n; ++i)
        std::copy(cohort.patients[static_cast<std::size_t>(i)].feature_vector->begin(),
                  cohort.patients[static_cast<std::size_t>(i)].feature_vector->end(),
                  g.features.row(i).begin());
    return g;
}

void save_graph_dump(const PatientGraph& graph, const std::vector<std::string>& attr_names,
                     const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["n"] = graph.adjacency.rows;
    j["attr_names"] = attr_names;
    j["W"] = graph.adjacency.data;
    j["A_hat"] = graph.normalized.data;
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace tacegcn
