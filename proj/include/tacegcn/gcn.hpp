#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tacegcn/graph.hpp"
#include "tacegcn/linalg.hpp"

namespace tacegcn {

struct GcnModel {
    Matrix W0;  // d x h
    Matrix W1;  // h x c
    double dropout_rate = 0.15;
    int hidden_dim = 16;
    int n_classes = 2;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;  // first layer only
    int epochs = 200;
    double dropout_rate = 0.15;
    int hidden_dim = 16;
    std::uint64_t seed = 0;
};

struct ForwardMode {
    bool stochastic = false;
    std::uint64_t seed = 0;
};
inline ForwardMode deterministic_mode() { return {}; }
inline ForwardMode stochastic_mode(std::uint64_t seed) { return {true, seed}; }

// Everything the backward pass needs. Keep matrices hold the inverted-dropout
// scale per entry (0 for dropped, 1/(1-p) for kept; all ones deterministically).
// a_hat is the propagation operator the pass actually used; it stays empty on
// the per-node MLP path.
struct ForwardTrace {
    Matrix dropped_input;
    Matrix agg_input;    // S0 = A_hat * drop(X)
    Matrix pre_hidden;   // Z0 = S0 * W0
    Matrix hidden;       // ReLU(Z0)
    Matrix dropped_hidden;
    Matrix agg_hidden;   // S1 = A_hat * drop(H)
    Matrix probs;        // row-softmax(S1 * W1)
    Matrix input_keep;
    Matrix hidden_keep;
    Matrix a_hat;
};

struct GcnGrads {
    Matrix w0;
    Matrix w1;
};

struct GcnTrainResult {
    GcnModel model;
    std::vector<double> loss_history;  // one entry per epoch
};

GcnModel init_model(int d, const TrainConfig& cfg);

ForwardTrace forward(const GcnModel& model, const Matrix& a_hat, const Matrix& X, ForwardMode mode);

double masked_loss(const Matrix& probs, const std::vector<int>& labels,
                   const std::vector<bool>& mask, const GcnModel& model, double weight_decay);

GcnGrads backward(const ForwardTrace& trace, const std::vector<int>& labels,
                  const std::vector<bool>& mask, const GcnModel& model, double weight_decay);

GcnTrainResult train(const PatientGraph& graph, const std::vector<int>& labels,
                     const std::vector<bool>& train_mask, const TrainConfig& cfg);

Matrix predict(const GcnModel& model, const PatientGraph& graph, ForwardMode mode);
std::vector<int> hard_labels(const Matrix& probs);  // argmax, ties toward class 0

// Graph-free twin: identical computation with the aggregation step skipped.
// With A_hat = I and shared seeds the GCN path must match this bit for bit.
ForwardTrace mlp_forward(const GcnModel& model, const Matrix& X, ForwardMode mode);
GcnTrainResult train_mlp(const Matrix& X, const std::vector<int>& labels,
                         const std::vector<bool>& train_mask, const TrainConfig& cfg);
Matrix mlp_predict(const GcnModel& model, const Matrix& X, ForwardMode mode);

void save_gcn(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_gcn(const std::filesystem::path& path);
void save_loss_history(const std::vector<double>& history, const std::filesystem::path& path);

}  // namespace tacegcn
