#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tacegcn/linalg.hpp"

namespace tacegcn {

struct RfConfig {
    int n_trees = 100;
    int max_depth = 8;
    int features_per_split = 0;  // 0 means ceil(sqrt(d))
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<int, 2> counts{0, 0};  // class tallies of the training rows here
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    int n_features = 0;
    int n_trees = 0;
};

struct RfPrediction {
    std::vector<int> labels;
    std::vector<double> vote_fraction;  // fraction of trees voting responder
};

// Bootstrap-sampled CART trees, Gini-impurity splits over a random feature
// subset per node; deterministic given cfg.seed.
RandomForest train_random_forest(const Matrix& X, const std::vector<int>& labels,
                                 const RfConfig& cfg);

RfPrediction rf_predict(const RandomForest& forest, const Matrix& rows);

int tree_predict(const DecisionTree& tree, const double* row);

}  // namespace tacegcn
