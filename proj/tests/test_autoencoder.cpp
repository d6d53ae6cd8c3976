#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tacegcn/autoencoder.hpp"
#include "tacegcn/dataset.hpp"
#include "tacegcn/rng.hpp"

using namespace tacegcn;

namespace {

Volume make_volume(const std::vector<double>& liver, const std::vector<double>& tumor,
                   std::array<int, 3> shape) {
    Volume v;
    v.shape = shape;
    v.liver = liver;
    v.tumor = tumor;
    v.voxel_volume = 1.0;
    return v;
}

DenseLayer layer(int in, int out, double scale, bool relu, std::mt19937_64& gen) {
    DenseLayer l;
    l.weight = Matrix(in, out);
    for (double& w : l.weight.data) w = scale * normal01(gen);
    l.bias.assign(static_cast<std::size_t>(out), 0.0);
    for (double& b : l.bias) b = 0.1 * normal01(gen);
    l.relu = relu;
    return l;
}

}  // namespace

TEST_CASE("flatten_input concatenates liver then tumor") {
    Volume v = make_volume({1.5, -2.0}, {3.25, 4.0}, {2, 1, 1});
    CHECK(flatten_input(v) == std::vector<double>{1.5, -2.0, 3.25, 4.0});

    Volume cube;
    cube.shape = {4, 4, 4};
    cube.liver.assign(64, 0.0);
    cube.tumor.assign(64, 0.0);
    cube.voxel_volume = 1.0;
    std::vector<double> flat = flatten_input(cube);
    CHECK(flat.size() == 128);
    for (double x : flat) CHECK(x == 0.0);
}

TEST_CASE("identity-capable autoencoder drives the loss to near zero") {
    std::mt19937_64 gen(91);
    Matrix x = oracles::random_matrix(20, 6, gen, 2.0);
    EncoderConfig cfg;
    cfg.latent_dim = 6;  // latent as wide as the input, single linear map
    cfg.epochs = 500;
    cfg.learning_rate = 0.05;
    cfg.seed = 1;
    AeTrainResult r = train_autoencoder(x, cfg);
    REQUIRE(r.loss_history.size() == 501);
    CHECK(r.loss_history.back() < 1e-3);
    CHECK(r.loss_history.back() <= r.loss_history.front());
    for (double l : r.loss_history) CHECK(std::isfinite(l));
}

TEST_CASE("epochs must be positive") {
    Matrix x(4, 3, 1.0);
    EncoderConfig cfg;
    cfg.epochs = 0;
    CHECK(oracles::error_code_of([&] { train_autoencoder(x, cfg); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("training is bit-reproducible") {
    std::mt19937_64 gen(92);
    Matrix x = oracles::random_matrix(10, 8, gen);
    EncoderConfig cfg;
    cfg.latent_dim = 4;
    cfg.hidden_widths = {6};
    cfg.epochs = 40;
    cfg.seed = 77;
    AeTrainResult a = train_autoencoder(x, cfg);
    AeTrainResult b = train_autoencoder(x, cfg);
    CHECK(a.loss_history == b.loss_history);
    REQUIRE(a.model.encoder.size() == b.model.encoder.size());
    for (std::size_t l = 0; l < a.model.encoder.size(); ++l) {
        CHECK(a.model.encoder[l].weight.data == b.model.encoder[l].weight.data);
        CHECK(a.model.encoder[l].bias == b.model.encoder[l].bias);
    }
    for (std::size_t l = 0; l < a.model.decoder.size(); ++l)
        CHECK(a.model.decoder[l].weight.data == b.model.decoder[l].weight.data);
}

TEST_CASE("zero encoder maps everything to the origin") {
    Autoencoder m;
    m.input_dim = 4;
    m.latent_dim = 2;
    DenseLayer l;
    l.weight = Matrix(4, 2);
    l.bias.assign(2, 0.0);
    m.encoder.push_back(l);
    m.feat_mean.assign(4, 0.0);
    m.feat_scale.assign(4, 1.0);
    Volume v = make_volume({1, 2}, {3, 4}, {2, 1, 1});
    CHECK(encode(m, v) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("default config keeps the paper's 128-wide latent") {
    SynthConfig scfg;
    scfg.n_patients = 6;
    scfg.volume_shape = {4, 4, 4};  // flattened width 128
    scfg.seed = 3;
    Cohort cohort = generate_synthetic(scfg);
    EncoderConfig cfg;  // latent_dim defaults to 128
    cfg.epochs = 5;
    AeTrainResult r = train_autoencoder(cohort, cfg);
    CHECK(r.model.latent_dim == 128);
    CHECK(encode(r.model, *cohort.patients[0].volume).size() == 128);
}

TEST_CASE("latent width clamps to the input width") {
    Matrix x(6, 3, 0.5);
    x(0, 0) = 1.0;
    x(1, 1) = -1.0;
    EncoderConfig cfg;  // latent_dim 128 >> input 3
    cfg.epochs = 3;
    AeTrainResult r = train_autoencoder(x, cfg);
    CHECK(r.model.latent_dim == 3);
}

TEST_CASE("encode equals a manual matrix chain on a toy model") {
    std::mt19937_64 gen(93);
    Autoencoder m;
    m.input_dim = 4;
    m.latent_dim = 2;
    m.encoder.push_back(layer(4, 3, 0.7, true, gen));
    m.encoder.push_back(layer(3, 2, 0.7, false, gen));
    m.feat_mean = {0.5, -0.25, 1.0, 0.0};
    m.feat_scale = {1.5, 2.0, 0.5, 1.0};

    Volume v = make_volume({0.9, -1.1}, {2.0, 0.3}, {2, 1, 1});
    std::vector<double> got = encode(m, v);

    std::vector<double> h = flatten_input(v);
    for (int j = 0; j < 4; ++j)
        h[static_cast<std::size_t>(j)] =
            (h[static_cast<std::size_t>(j)] - m.feat_mean[static_cast<std::size_t>(j)]) /
            m.feat_scale[static_cast<std::size_t>(j)];
    for (const DenseLayer& l : m.encoder) {
        std::vector<double> next(l.bias);
        for (int i = 0; i < l.weight.rows; ++i)
            for (int j = 0; j < l.weight.cols; ++j)
                next[static_cast<std::size_t>(j)] += h[static_cast<std::size_t>(i)] * l.weight(i, j);
        if (l.relu)
            for (double& x : next) x = x > 0.0 ? x : 0.0;
        h = std::move(next);
    }
    REQUIRE(got.size() == h.size());
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(std::fabs(got[i] - h[i]) <= 1e-12);
}

TEST_CASE("attach_features encodes every patient and is idempotent") {
    SynthConfig scfg;
    scfg.n_patients = 8;
    scfg.volume_shape = {2, 2, 2};
    scfg.seed = 5;
    Cohort cohort = generate_synthetic(scfg);
    EncoderConfig cfg;
    cfg.latent_dim = 4;
    cfg.epochs = 10;
    AeTrainResult r = train_autoencoder(cohort, cfg);

    Cohort with = attach_features(cohort, r.model);
    REQUIRE(with.size() == cohort.size());
    for (int i = 0; i < with.size(); ++i) {
        REQUIRE(with.patients[static_cast<std::size_t>(i)].feature_vector.has_value());
        CHECK(*with.patients[static_cast<std::size_t>(i)].feature_vector ==
              encode(r.model, *cohort.patients[static_cast<std::size_t>(i)].volume));
    }
    Cohort again = attach_features(with, r.model);
    for (int i = 0; i < with.size(); ++i)
        CHECK(*again.patients[static_cast<std::size_t>(i)].feature_vector ==
              *with.patients[static_cast<std::size_t>(i)].feature_vector);
}

TEST_CASE("attach_features requires volumes") {
    Cohort c;
    PatientRecord p;
    p.id = "flat";
    p.feature_vector = std::vector<double>{1.0};
    c.patients.push_back(std::move(p));
    Autoencoder m;
    m.input_dim = 2;
    m.latent_dim = 1;
    DenseLayer l;
    l.weight = Matrix(2, 1);
    l.bias = {0.0};
    m.encoder.push_back(l);
    m.feat_mean.assign(2, 0.0);
    m.feat_scale.assign(2, 1.0);
    CHECK(oracles::error_code_of([&] { attach_features(c, m); }) == ErrorCode::MissingVolume);
}

TEST_CASE("encode rejects mismatched volume sizes") {
    Autoencoder m;
    m.input_dim = 4;
    m.latent_dim = 1;
    DenseLayer l;
    l.weight = Matrix(4, 1);
    l.bias = {0.0};
    m.encoder.push_back(l);
    m.feat_mean.assign(4, 0.0);
    m.feat_scale.assign(4, 1.0);
    Volume v = make_volume({1, 2, 3}, {4, 5, 6}, {3, 1, 1});  // width 6, model wants 4
    CHECK(oracles::error_code_of([&] { encode(m, v); }) == ErrorCode::DimMismatch);
}

TEST_CASE("reconstruction gradients match central finite differences") {
    std::mt19937_64 gen(94);
    Matrix x = oracles::random_matrix(5, 6, gen);
    EncoderConfig cfg;
    cfg.latent_dim = 3;
    cfg.hidden_widths = {4};
    cfg.epochs = 2;
    cfg.seed = 9;
    Autoencoder model = train_autoencoder(x, cfg).model;

    std::vector<LayerGrad> grads = reconstruction_gradients(model, x);
    std::vector<DenseLayer*> layers;
    for (DenseLayer& l : model.encoder) layers.push_back(&l);
    for (DenseLayer& l : model.decoder) layers.push_back(&l);
    REQUIRE(grads.size() == layers.size());

    const double step = 1e-4;
    double worst = 0.0;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        Matrix fd(layers[li]->weight.rows, layers[li]->weight.cols);
        for (std::size_t e = 0; e < layers[li]->weight.data.size(); ++e) {
            double keep = layers[li]->weight.data[e];
            layers[li]->weight.data[e] = keep + step;
            double up = reconstruction_loss(model, x);
            layers[li]->weight.data[e] = keep - step;
            double down = reconstruction_loss(model, x);
            layers[li]->weight.data[e] = keep;
            fd.data[e] = (up - down) / (2.0 * step);
        }
        worst = std::max(worst, oracles::max_rel_err(grads[li].weight, fd));

        std::vector<double> fd_bias(layers[li]->bias.size());
        for (std::size_t e = 0; e < layers[li]->bias.size(); ++e) {
            double keep = layers[li]->bias[e];
            layers[li]->bias[e] = keep + step;
            double up = reconstruction_loss(model, x);
            layers[li]->bias[e] = keep - step;
            double down = reconstruction_loss(model, x);
            layers[li]->bias[e] = keep;
            fd_bias[e] = (up - down) / (2.0 * step);
        }
        double scale = 1e-12;
        for (std::size_t e = 0; e < fd_bias.size(); ++e)
            scale = std::max({scale, std::fabs(fd_bias[e]), std::fabs(grads[li].bias[e])});
        for (std::size_t e = 0; e < fd_bias.size(); ++e)
            worst = std::max(worst, std::fabs(grads[li].bias[e] - fd_bias[e]) / scale);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("checkpoints restore the encoder") {
    std::mt19937_64 gen(95);
    Matrix x = oracles::random_matrix(8, 6, gen);
    EncoderConfig cfg;
    cfg.latent_dim = 3;
    cfg.hidden_widths = {5};
    cfg.epochs = 20;
    cfg.seed = 4;
    Autoencoder model = train_autoencoder(x, cfg).model;

    std::filesystem::path path = std::filesystem::temp_directory_path() / "ae_roundtrip.json";
    save_autoencoder(model, path);
    Autoencoder loaded = load_autoencoder(path);
    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.latent_dim == model.latent_dim);
    REQUIRE(loaded.encoder.size() == model.encoder.size());

    Volume v = make_volume({0.4, -0.9, 1.2}, {0.0, 2.2, -1.7}, {3, 1, 1});
    std::vector<double> a = encode(model, v);
    std::vector<double> b = encode(loaded, v);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));
    std::filesystem::remove(path);
}

TEST_CASE("training a cohort with a missing volume fails") {
    SynthConfig scfg;
    scfg.n_patients = 5;
    scfg.volume_shape = {2, 2, 1};
    scfg.seed = 6;
    Cohort cohort = generate_synthetic(scfg);
    cohort.patients[2].volume.reset();
    cohort.patients[2].feature_vector = std::vector<double>{1.0, 2.0};
    EncoderConfig cfg;
    cfg.epochs = 2;
    CHECK(oracles::error_code_of([&] { train_autoencoder(cohort, cfg); }) ==
          ErrorCode::MissingVolume);
}
