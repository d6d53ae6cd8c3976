#include <doctest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tacegcn/random_forest.hpp"
#include "tacegcn/rng.hpp"

using namespace tacegcn;

TEST_CASE("one threshold separates a single informative feature") {
    Matrix x(20, 1);
    std::vector<int> y(20);
    for (int i = 0; i < 20; ++i) {
        x(i, 0) = i < 10 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
        y[static_cast<std::size_t>(i)] = i < 10 ? 0 : 1;
    }
    RfConfig cfg;
    cfg.n_trees = 20;
    cfg.max_depth = 1;
    cfg.seed = 2;
    RandomForest forest = train_random_forest(x, y, cfg);
    RfPrediction pred = rf_predict(forest, x);
    CHECK(pred.labels == y);
}

TEST_CASE("pure-leaf duplicates predict the leaf class") {
    Matrix x(8, 2);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = i < 4 ? -2.0 : 2.0;
        x(i, 1) = 0.5 * i;
        y[static_cast<std::size_t>(i)] = i < 4 ? 0 : 1;
    }
    RfConfig cfg;
    cfg.n_trees = 15;
    cfg.max_depth = 3;
    cfg.seed = 8;
    RandomForest forest = train_random_forest(x, y, cfg);

    Matrix probe(2, 2);
    probe(0, 0) = -2.0;  // clone of a class-0 training point
    probe(0, 1) = 1.0;
    probe(1, 0) = 2.0;  // clone of a class-1 training point
    probe(1, 1) = 2.5;
    RfPrediction pred = rf_predict(forest, probe);
    CHECK(pred.labels == std::vector<int>{0, 1});
    CHECK(pred.vote_fraction[0] < 0.5);
    CHECK(pred.vote_fraction[1] > 0.5);
}

TEST_CASE("shallow forests solve XOR") {
    // XOR defeats depth-1 trees outright, and at depth 2 an unlucky root split
    // (the marginals carry no signal) still costs a few points; depth 3 leaves
    // room to recover
    std::mt19937_64 gen(101);
    Matrix x(100, 2);
    std::vector<int> y(100);
    for (int i = 0; i < 100; ++i) {
        int a = static_cast<int>(uniform_int(gen, 2));
        int b = static_cast<int>(uniform_int(gen, 2));
        x(i, 0) = a + 0.05 * normal01(gen);
        x(i, 1) = b + 0.05 * normal01(gen);
        y[static_cast<std::size_t>(i)] = a ^ b;
    }
    RfConfig cfg;
    cfg.n_trees = 100;
    cfg.max_depth = 3;
    cfg.features_per_split = 2;
    cfg.seed = 3;
    RandomForest forest = train_random_forest(x, y, cfg);
    RfPrediction pred = rf_predict(forest, x);
    int correct = 0;
    for (int i = 0; i < 100; ++i)
        if (pred.labels[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(i)]) ++correct;
    CHECK(correct >= 95);
}

TEST_CASE("a one-tree forest is exactly its tree") {
    std::mt19937_64 gen(102);
    Matrix x = oracles::random_matrix(30, 4, gen);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i)
        y[static_cast<std::size_t>(i)] = x(i, 1) + 0.3 * x(i, 2) > 0.0 ? 1 : 0;
    if (std::count(y.begin(), y.end(), 1) < 2) y[0] = y[1] = 1;
    if (std::count(y.begin(), y.end(), 0) < 2) y[2] = y[3] = 0;
    RfConfig cfg;
    cfg.n_trees = 1;
    cfg.features_per_split = 4;  // no subsampling
    cfg.seed = 5;
    RandomForest forest = train_random_forest(x, y, cfg);
    REQUIRE(forest.trees.size() == 1);
    RfPrediction pred = rf_predict(forest, x);
    for (int i = 0; i < 30; ++i) {
        int direct = tree_predict(forest.trees[0], &x.data[static_cast<std::size_t>(i) * 4]);
        CHECK(pred.labels[static_cast<std::size_t>(i)] == direct);
        CHECK(pred.vote_fraction[static_cast<std::size_t>(i)] == (direct == 1 ? 1.0 : 0.0));
    }
}

TEST_CASE("training is deterministic given the seed") {
    std::mt19937_64 gen(103);
    Matrix x = oracles::random_matrix(40, 5, gen);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) y[static_cast<std::size_t>(i)] = x(i, 0) > 0.0 ? 1 : 0;
    if (std::count(y.begin(), y.end(), 1) < 2) y[0] = y[1] = 1;
    if (std::count(y.begin(), y.end(), 0) < 2) y[2] = y[3] = 0;
    RfConfig cfg;
    cfg.n_trees = 25;
    cfg.seed = 13;
    RandomForest a = train_random_forest(x, y, cfg);
    RandomForest b = train_random_forest(x, y, cfg);
    REQUIRE(a.trees.size() == b.trees.size());
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
        for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
            CHECK(a.trees[t].nodes[n].feature == b.trees[t].nodes[n].feature);
            CHECK(a.trees[t].nodes[n].threshold == b.trees[t].nodes[n].threshold);
            CHECK(a.trees[t].nodes[n].left == b.trees[t].nodes[n].left);
            CHECK(a.trees[t].nodes[n].right == b.trees[t].nodes[n].right);
            CHECK(a.trees[t].nodes[n].counts == b.trees[t].nodes[n].counts);
        }
    }
}

TEST_CASE("tree structure invariants hold") {
    std::mt19937_64 gen(104);
    Matrix x = oracles::random_matrix(50, 6, gen);
    std::vector<int> y(50);
    for (int i = 0; i < 50; ++i)
        y[static_cast<std::size_t>(i)] = static_cast<int>(uniform_int(gen, 2));
    y[0] = y[1] = 0;
    y[2] = y[3] = 1;
    RfConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 4;
    cfg.seed = 9;
    RandomForest forest = train_random_forest(x, y, cfg);
    CHECK(forest.n_features == 6);
    for (const DecisionTree& tree : forest.trees) {
        REQUIRE(!tree.nodes.empty());
        for (const TreeNode& node : tree.nodes) {
            if (node.feature < 0) {
                // leaves always carry a class distribution
                CHECK(node.counts[0] + node.counts[1] > 0);
                CHECK(node.left == -1);
                CHECK(node.right == -1);
            } else {
                CHECK(node.feature < 6);
                CHECK(node.left >= 0);
                CHECK(node.right >= 0);
                CHECK(node.left < static_cast<int>(tree.nodes.size()));
                CHECK(node.right < static_cast<int>(tree.nodes.size()));
            }
        }
    }
}

TEST_CASE("vote fractions stay in range and drive the labels") {
    std::mt19937_64 gen(105);
    Matrix x = oracles::random_matrix(30, 3, gen);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = x(i, 2) > 0.0 ? 1 : 0;
    if (std::count(y.begin(), y.end(), 1) < 2) y[0] = y[1] = 1;
    if (std::count(y.begin(), y.end(), 0) < 2) y[2] = y[3] = 0;
    RfConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 1;
    RandomForest forest = train_random_forest(x, y, cfg);
    Matrix probe = oracles::random_matrix(20, 3, gen);
    RfPrediction pred = rf_predict(forest, probe);
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        CHECK(pred.vote_fraction[i] >= 0.0);
        CHECK(pred.vote_fraction[i] <= 1.0);
        CHECK(pred.labels[i] == (pred.vote_fraction[i] > 0.5 ? 1 : 0));
    }
}

TEST_CASE("degenerate training sets are rejected") {
    Matrix x(4, 2, 1.0);
    CHECK(oracles::error_code_of([&] { train_random_forest(x, {1, 1, 1, 1}, RfConfig{}); }) ==
          ErrorCode::TooFewSamples);
    CHECK(oracles::error_code_of([&] { train_random_forest(x, {1, 1, 1, 0}, RfConfig{}); }) ==
          ErrorCode::TooFewSamples);
    Matrix tiny(2, 2, 0.0);
    CHECK(oracles::error_code_of([&] { train_random_forest(tiny, {0, 1}, RfConfig{}); }) ==
          ErrorCode::TooFewSamples);
    // prediction width must match training width
    Matrix ok(6, 2);
    for (int i = 0; i < 6; ++i) ok(i, 0) = i < 3 ? -1.0 : 1.0;
    RandomForest forest = train_random_forest(ok, {0, 0, 0, 1, 1, 1}, RfConfig{});
    Matrix wrong(1, 3, 0.0);
    CHECK(oracles::error_code_of([&] { rf_predict(forest, wrong); }) == ErrorCode::DimMismatch);
}
