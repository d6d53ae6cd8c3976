#include "tacegcn/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

double gini(const std::array<int, 2>& counts) {
    int total = counts[0] + counts[1];
    if (total == 0) return 0.0;
    double p0 = static_cast<double>(counts[0]) / total;
    double p1 = static_cast<double>(counts[1]) / total;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
    const Matrix& X;
    const std::vector<int>& labels;
    int features_per_split;
    int max_depth;
    std::mt19937_64& gen;
    DecisionTree tree;

    int build(std::vector<int>& rows, int depth) {
        TreeNode node;
        for (int r : rows) ++node.counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
        int index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        double parent_gini = gini(node.counts);
        if (depth >= max_depth || rows.size() < 2 || parent_gini == 0.0) return index;

        // random feature subset, then the best Gini split across it
        std::vector<int> feats(static_cast<std::size_t>(X.cols));
        std::iota(feats.begin(), feats.end(), 0);
        for (int i = 0; i < features_per_split; ++i) {
            std::size_t j = static_cast<std::size_t>(i) +
                            uniform_int(gen, static_cast<std::uint64_t>(feats.size() - static_cast<std::size_t>(i)));
            std::swap(feats[static_cast<std::size_t>(i)], feats[j]);
        }
        feats.resize(static_cast<std::size_t>(features_per_split));

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = parent_gini - 1e-12;  // require a real improvement
        std::vector<double> values;
        for (int f : feats) {
            values.clear();
            for (int r : rows) values.push_back(X(r, f));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t t = 0; t + 1 < values.size(); ++t) {
                double threshold = 0.5 * (values[t] + values[t + 1]);
                std::array<int, 2> left{0, 0}, right{0, 0};
                for (int r : rows) {
                    auto& side = X(r, f) <= threshold ? left : right;
                    ++side[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
                }
                int nl = left[0] + left[1], nr = right[0] + right[1];
                double score = (nl * gini(left) + nr * gini(right)) / static_cast<double>(nl + nr);
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }
        if (best_feature < 0) return index;

        std::vector<int> left_rows, right_rows;
        for (int r : rows) {
            if (X(r, best_feature) <= best_threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        tree.nodes[static_cast<std::size_t>(index)].feature = best_feature;
        tree.nodes[static_cast<std::size_t>(index)].threshold = best_threshold;
        int left = build(left_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(index)].left = left;
        int right = build(right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(index)].right = right;
        return index;
    }
};

}  // namespace

RandomForest train_random_forest(const Matrix& X, const std::vector<int>& labels,
                                 const RfConfig& cfg) {
    require(labels.size() == static_cast<std::size_t>(X.rows), ErrorCode::LengthMismatch,
            "one label per row required");
    require(cfg.n_trees >= 1 && cfg.max_depth >= 1, ErrorCode::InvalidConfig,
            "n_trees and max_depth must be >= 1");
    std::array<int, 2> totals{0, 0};
    for (int y : labels) {
        require(y == 0 || y == 1, ErrorCode::MalformedRecord, "labels must be 0/1");
        ++totals[static_cast<std::size_t>(y)];
    }
    require(totals[0] >= 2 && totals[1] >= 2, ErrorCode::TooFewSamples,
            "need at least 2 samples per class");

    int fps = cfg.features_per_split;
    if (fps <= 0) fps = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(X.cols))));
    fps = std::min(fps, X.cols);

    RandomForest forest;
    forest.n_features = X.cols;
    forest.n_trees = cfg.n_trees;
    const std::uint64_t tree_base = derive_seed(cfg.seed, "rf-tree");
    for (int t = 0; t < cfg.n_trees; ++t) {
        std::mt19937_64 gen(derive_seed(tree_base, static_cast<std::uint64_t>(t)));
        std::vector<int> rows(static_cast<std::size_t>(X.rows));
        for (int& r : rows)
            r = static_cast<int>(uniform_int(gen, static_cast<std::uint64_t>(X.rows)));
        TreeBuilder builder{X, labels, fps, cfg.max_depth, gen, {}};
        builder.build(rows, 0);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

int tree_predict(const DecisionTree& tree, const double* row) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
        node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    const auto& counts = tree.nodes[static_cast<std::size_t>(node)].counts;
    return counts[1] > counts[0] ? 1 : 0;
}

RfPrediction rf_predict(const RandomForest& forest, const Matrix& rows) {
    require(rows.cols == forest.n_features, ErrorCode::DimMismatch,
            "row width " + std::to_string(rows.cols) + " does not match forest features " +
                std::to_string(forest.n_features));
    RfPrediction out;
    out.labels.resize(static_cast<std::size_t>(rows.rows));
    out.vote_fraction.resize(static_cast<std::size_t>(rows.rows));
    for (int i = 0; i < rows.rows; ++i) {
        int positive = 0;
        for (const DecisionTree& tree : forest.trees)
            positive += tree_predict(tree, &rows.data[static_cast<std::size_t>(i) *
                                                      static_cast<std::size_t>(rows.cols)]);
        double fraction = static_cast<double>(positive) / static_cast<double>(forest.trees.size());
        out.vote_fraction[static_cast<std::size_t>(i)] = fraction;
        out.labels[static_cast<std::size_t>(i)] = fraction > 0.5 ? 1 : 0;
    }
    return out;
}

}  // namespace tacegcn
