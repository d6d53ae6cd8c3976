#include "tacegcn/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "tacegcn/payload.hpp"
#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

using json = nlohmann::ordered_json;

DenseLayer make_layer(int in, int out, bool relu, std::mt19937_64& gen) {
    DenseLayer layer;
    layer.weight = Matrix(in, out);
    layer.bias.assign(static_cast<std::size_t>(out), 0.0);
    layer.relu = relu;
    double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weight.data) w = uniform_range(gen, -limit, limit);
    return layer;
}

std::vector<const DenseLayer*> layer_chain(const Autoencoder& m) {
    std::vector<const DenseLayer*> chain;
    for (const DenseLayer& l : m.encoder) chain.push_back(&l);
    for (const DenseLayer& l : m.decoder) chain.push_back(&l);
    return chain;
}

Matrix forward_layer(const DenseLayer& layer, const Matrix& in, Matrix* pre = nullptr) {
    Matrix z = matmul(in, layer.weight);
    for (int i = 0; i < z.rows; ++i)
        for (int j = 0; j < z.cols; ++j) z(i, j) += layer.bias[static_cast<std::size_t>(j)];
    if (pre) *pre = z;
    if (layer.relu)
        for (double& v : z.data) v = v > 0.0 ? v : 0.0;
    return z;
}

Matrix standardize_rows(const Autoencoder& m, const Matrix& X) {
    require(X.cols == m.input_dim, ErrorCode::DimMismatch,
            "input width " + std::to_string(X.cols) + " != model input_dim " +
                std::to_string(m.input_dim));
    Matrix S = X;
    for (int i = 0; i < S.rows; ++i)
        for (int j = 0; j < S.cols; ++j) {
            std::size_t jj = static_cast<std::size_t>(j);
            S(i, j) = (S(i, j) - m.feat_mean[jj]) / m.feat_scale[jj];
        }
    return S;
}

// Loss over standardized rows plus everything backprop needs.
struct BatchTrace {
    std::vector<Matrix> pre;   // per layer, pre-activation
    std::vector<Matrix> post;  // per layer, post-activation
    double loss = 0.0;
};

BatchTrace run_batch(const Autoencoder& m, const Matrix& S) {
    BatchTrace t;
    Matrix cur = S;
    for (const DenseLayer* layer : layer_chain(m)) {
        Matrix pre;
        cur = forward_layer(*layer, cur, &pre);
        t.pre.push_back(std::move(pre));
        t.post.push_back(cur);
    }
    const Matrix& out = t.post.back();
    double acc = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double d = out.data[i] - S.data[i];
        acc += d * d;
    }
    t.loss = acc / static_cast<double>(out.data.size());
    return t;
}

std::vector<LayerGrad> backprop(const Autoencoder& m, const Matrix& S, const BatchTrace& t) {
    auto chain = layer_chain(m);
    std::vector<LayerGrad> grads(chain.size());
    const Matrix& out = t.post.back();
    Matrix delta(out.rows, out.cols);
    double scale = 2.0 / static_cast<double>(out.data.size());
    for (std::size_t i = 0; i < out.data.size(); ++i)
        delta.data[i] = scale * (out.data[i] - S.data[i]);
    for (int l = static_cast<int>(chain.size()) - 1; l >= 0; --l) {
        std::size_t lu = static_cast<std::size_t>(l);
        if (chain[lu]->relu)
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (!(t.pre[lu].data[i] > 0.0)) delta.data[i] = 0.0;
        const Matrix& input = l == 0 ? S : t.post[lu - 1];
        grads[lu].weight = matmul_transpose_a(input, delta);
        grads[lu].bias.assign(static_cast<std::size_t>(delta.cols), 0.0);
        for (int i = 0; i < delta.rows; ++i)
            for (int j = 0; j < delta.cols; ++j)
                grads[lu].bias[static_cast<std::size_t>(j)] += delta(i, j);
        if (l > 0) delta = matmul_transpose_b(delta, chain[lu]->weight);
    }
    return grads;
}

json layer_to_json(const DenseLayer& l) {
    json j;
    j["in"] = l.weight.rows;
    j["out"] = l.weight.cols;
    j["relu"] = l.relu;
    j["weight"] = pack_f32(l.weight.data);
    j["bias"] = pack_f32(l.bias);
    return j;
}

DenseLayer layer_from_json(const json& j) {
    DenseLayer l;
    int in = j.at("in").get<int>();
    int out = j.at("out").get<int>();
    l.relu = j.at("relu").get<bool>();
    l.weight = Matrix(in, out);
    l.weight.data = unpack_f32(j.at("weight").get<std::string>());
    l.bias = unpack_f32(j.at("bias").get<std::string>());
    require(l.weight.data.size() == static_cast<std::size_t>(in) * static_cast<std::size_t>(out) &&
                l.bias.size() == static_cast<std::size_t>(out),
            ErrorCode::MalformedRecord, "layer payload does not match declared shape");
    return l;
}

}  // namespace

std::vector<double> flatten_input(const Volume& v) {
    std::vector<double> flat;
    flat.reserve(v.liver.size() + v.tumor.size());
    flat.insert(flat.end(), v.liver.begin(), v.liver.end());
    flat.insert(flat.end(), v.tumor.begin(), v.tumor.end());
    return flat;
}

AeTrainResult train_autoencoder(const Matrix& X, const EncoderConfig& cfg) {
    require(X.rows >= 1, ErrorCode::TooFewSamples, "no training rows");
    require(cfg.epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
    require(cfg.latent_dim >= 1, ErrorCode::InvalidConfig, "latent_dim must be >= 1");
    require(cfg.batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
    require(cfg.learning_rate > 0.0, ErrorCode::InvalidConfig, "learning_rate must be positive");
    for (int w : cfg.hidden_widths)
        require(w >= 1, ErrorCode::InvalidConfig, "hidden widths must be >= 1");
    require(all_finite(X), ErrorCode::NonFiniteInput, "training rows contain non-finite values");

    Autoencoder model;
    model.input_dim = X.cols;
    model.latent_dim = std::min(cfg.latent_dim, X.cols);
    model.feat_mean.assign(static_cast<std::size_t>(X.cols), 0.0);
    model.feat_scale.assign(static_cast<std::size_t>(X.cols), 1.0);
    for (int j = 0; j < X.cols; ++j) {
        double mean = 0.0;
        for (int i = 0; i < X.rows; ++i) mean += X(i, j);
        mean /= static_cast<double>(X.rows);
        double var = 0.0;
        for (int i = 0; i < X.rows; ++i) {
            double d = X(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(X.rows);
        std::size_t jj = static_cast<std::size_t>(j);
        model.feat_mean[jj] = mean;
        model.feat_scale[jj] = std::sqrt(std::max(var, 1e-8));
    }

    std::mt19937_64 gen_init(derive_seed(cfg.seed, "ae-init"));
    std::vector<int> widths;
    widths.push_back(X.cols);
    for (int w : cfg.hidden_widths) widths.push_back(w);
    widths.push_back(model.latent_dim);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        model.encoder.push_back(
            make_layer(widths[l], widths[l + 1], l + 2 < widths.size(), gen_init));
    std::reverse(widths.begin(), widths.end());
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        model.decoder.push_back(
            make_layer(widths[l], widths[l + 1], l + 2 < widths.size(), gen_init));

    Matrix S = X;
    for (int i = 0; i < S.rows; ++i)
        for (int j = 0; j < S.cols; ++j) {
            std::size_t jj = static_cast<std::size_t>(j);
            S(i, j) = (S(i, j) - model.feat_mean[jj]) / model.feat_scale[jj];
        }

    AeTrainResult result;
    auto full_loss = [&]() {
        Autoencoder& m = model;
        BatchTrace t = run_batch(m, S);
        require(std::isfinite(t.loss), ErrorCode::DivergedLoss, "reconstruction loss diverged");
        return t.loss;
    };
    result.loss_history.push_back(full_loss());

    std::mt19937_64 gen_order(derive_seed(cfg.seed, "ae-order"));
    std::vector<int> order(static_cast<std::size_t>(S.rows));
    std::iota(order.begin(), order.end(), 0);
    std::vector<DenseLayer*> chain;
    for (DenseLayer& l : model.encoder) chain.push_back(&l);
    for (DenseLayer& l : model.decoder) chain.push_back(&l);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_in_place(order, gen_order);
        for (int start = 0; start < S.rows; start += cfg.batch_size) {
            int stop = std::min(start + cfg.batch_size, S.rows);
            Matrix batch(stop - start, S.cols);
            for (int r = start; r < stop; ++r)
                std::copy(S.row(order[static_cast<std::size_t>(r)]).begin(),
                          S.row(order[static_cast<std::size_t>(r)]).end(),
                          batch.row(r - start).begin());
            BatchTrace t = run_batch(model, batch);
            require(std::isfinite(t.loss), ErrorCode::DivergedLoss, "reconstruction loss diverged");
            auto grads = backprop(model, batch, t);
            for (std::size_t l = 0; l < chain.size(); ++l) {
                for (std::size_t i = 0; i < chain[l]->weight.data.size(); ++i)
                    chain[l]->weight.data[i] -= cfg.learning_rate * grads[l].weight.data[i];
                for (std::size_t i = 0; i < chain[l]->bias.size(); ++i)
                    chain[l]->bias[i] -= cfg.learning_rate * grads[l].bias[i];
            }
        }
        result.loss_history.push_back(full_loss());
    }
    result.model = std::move(model);
    return result;
}

AeTrainResult train_autoencoder(const Cohort& cohort, const EncoderConfig& cfg) {
    require(!cohort.patients.empty(), ErrorCode::TooFewSamples, "empty cohort");
    std::vector<std::vector<double>> rows;
    for (const PatientRecord& p : cohort.patients) {
        require(p.volume.has_value(), ErrorCode::MissingVolume,
                "patient '" + p.id + "' has no volume");
        rows.push_back(flatten_input(*p.volume));
        require(rows.back().size() == rows.front().size(), ErrorCode::DimMismatch,
                "patient '" + p.id + "' volume size differs from cohort");
    }
    Matrix X(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), X.row(static_cast<int>(i)).begin());
    return train_autoencoder(X, cfg);
}

std::vector<double> encode(const Autoencoder& model, const Volume& v) {
    std::vector<double> flat = flatten_input(v);
    require(static_cast<int>(flat.size()) == model.input_dim, ErrorCode::DimMismatch,
            "volume flattens to " + std::to_string(flat.size()) + ", model expects " +
                std::to_string(model.input_dim));
    Matrix row(1, model.input_dim);
    row.data = std::move(flat);
    Matrix cur = standardize_rows(model, row);
    for (const DenseLayer& layer : model.encoder) cur = forward_layer(layer, cur);
    return cur.data;
}

Cohort attach_features(const Cohort& cohort, const Autoencoder& model) {
    Cohort out = cohort;
    for (PatientRecord& p : out.patients) {
        require(p.volume.has_value(), ErrorCode::MissingVolume,
                "patient '" + p.id + "' has no volume");
        p.feature_vector = encode(model, *p.volume);
    }
    return out;
}

double reconstruction_loss(const Autoencoder& model, const Matrix& X) {
    return run_batch(model, standardize_rows(model, X)).loss;
}

std::vector<LayerGrad> reconstruction_gradients(const Autoencoder& model, const Matrix& X) {
    Matrix S = standardize_rows(model, X);
    return backprop(model, S, run_batch(model, S));
}

void save_autoencoder(const Autoencoder& model, const std::filesystem::path& path) {
    json j;
    j["input_dim"] = model.input_dim;
    j["latent_dim"] = model.latent_dim;
    j["feat_mean"] = pack_f32(model.feat_mean);
    j["feat_scale"] = pack_f32(model.feat_scale);
    json enc = json::array(), dec = json::array();
    for (const DenseLayer& l : model.encoder) enc.push_back(layer_to_json(l));
    for (const DenseLayer& l : model.decoder) dec.push_back(layer_to_json(l));
    j["encoder"] = std::move(enc);
    j["decoder"] = std::move(dec);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

Autoencoder load_autoencoder(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
        Autoencoder model;
        model.input_dim = j.at("input_dim").get<int>();
        model.latent_dim = j.at("latent_dim").get<int>();
        model.feat_mean = unpack_f32(j.at("feat_mean").get<std::string>());
        model.feat_scale = unpack_f32(j.at("feat_scale").get<std::string>());
        for (const json& jl : j.at("encoder")) model.encoder.push_back(layer_from_json(jl));
        for (const json& jl : j.at("decoder")) model.decoder.push_back(layer_from_json(jl));
        require(!model.encoder.empty() && !model.decoder.empty(), ErrorCode::MalformedRecord,
                "checkpoint lacks encoder/decoder layers");
        return model;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, "bad autoencoder checkpoint: " + std::string(e.what()));
    }
}

}  // namespace tacegcn
