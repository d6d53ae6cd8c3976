#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tacegcn/dataset.hpp"
#include "tacegcn/linalg.hpp"

namespace tacegcn {

// One fully connected layer; `relu` selects the activation (linear otherwise).
struct DenseLayer {
    Matrix weight;  // in_dim x out_dim
    std::vector<double> bias;
    bool relu = false;
};

// Dense autoencoder over flattened liver+tumor grids. Inputs are standardized
// per dimension with the stored mean/scale before entering the encoder, and
// the reconstruction target is the standardized vector as well.
struct Autoencoder {
    std::vector<DenseLayer> encoder;
    std::vector<DenseLayer> decoder;
    int input_dim = 0;
    int latent_dim = 0;
    std::vector<double> feat_mean;
    std::vector<double> feat_scale;  // floored stddev, never below 1e-4
};

struct EncoderConfig {
    int latent_dim = 128;  // clamped to the input width when larger
    std::vector<int> hidden_widths;
    double learning_rate = 0.01;
    int epochs = 150;
    int batch_size = 16;
    std::uint64_t seed = 0;
};

struct AeTrainResult {
    Autoencoder model;
    std::vector<double> loss_history;  // epochs+1 entries, [0] = pre-training
};

std::vector<double> flatten_input(const Volume& v);

// Rows of X are training vectors (already flattened, not yet standardized).
AeTrainResult train_autoencoder(const Matrix& X, const EncoderConfig& cfg);
AeTrainResult train_autoencoder(const Cohort& cohort, const EncoderConfig& cfg);

std::vector<double> encode(const Autoencoder& model, const Volume& v);
Cohort attach_features(const Cohort& cohort, const Autoencoder& model);

// Mean squared reconstruction error of standardized rows, and its gradients
// (same layer order as encoder followed by decoder). Exposed so the analytic
// backward pass can be checked against finite differences.
double reconstruction_loss(const Autoencoder& model, const Matrix& X);
struct LayerGrad {
    Matrix weight;
    std::vector<double> bias;
};
std::vector<LayerGrad> reconstruction_gradients(const Autoencoder& model, const Matrix& X);

void save_autoencoder(const Autoencoder& model, const std::filesystem::path& path);
Autoencoder load_autoencoder(const std::filesystem::path& path);

}  // namespace tacegcn
