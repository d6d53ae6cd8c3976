#include "tacegcn/gcn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tacegcn/payload.hpp"
#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

using json = nlohmann::ordered_json;

Matrix keep_matrix(int rows, int cols, double p, bool stochastic, std::uint64_t seed) {
    Matrix keep(rows, cols);
    if (!stochastic || p == 0.0) {
        std::fill(keep.data.begin(), keep.data.end(), 1.0);
        if (!stochastic) return keep;
    }
    std::mt19937_64 gen(seed);
    const double scale = 1.0 / (1.0 - p);
    for (double& k : keep.data) k = uniform01(gen) < p ? 0.0 : scale;
    return keep;
}

Matrix apply_keep(const Matrix& X, const Matrix& keep) {
    Matrix out = X;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = keep.data[i] == 0.0 ? 0.0 : out.data[i] * keep.data[i];
    }
    return out;
}

Matrix row_softmax(const Matrix& Z) {
    Matrix P(Z.rows, Z.cols);
    for (int i = 0; i < Z.rows; ++i) {
        double mx = Z(i, 0);
        for (int j = 1; j < Z.cols; ++j) mx = std::max(mx, Z(i, j));
        double sum = 0.0;
        for (int j = 0; j < Z.cols; ++j) {
            double e = std::exp(Z(i, j) - mx);
            P(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < Z.cols; ++j) P(i, j) /= sum;
    }
    return P;
}

// Shared two-layer pass; a_hat == nullptr skips neighborhood aggregation and
// turns the network into a row-wise MLP with the same weights and dropout.
ForwardTrace forward_impl(const GcnModel& model, const Matrix* a_hat, const Matrix& X,
                          ForwardMode mode) {
    require(model.W0.rows == X.cols, ErrorCode::ShapeMismatch,
            "features have width " + std::to_string(X.cols) + ", W0 expects " +
                std::to_string(model.W0.rows));
    require(model.W0.cols == model.W1.rows, ErrorCode::ShapeMismatch, "W0/W1 widths disagree");
    if (a_hat) {
        require(a_hat->rows == a_hat->cols && a_hat->rows == X.rows, ErrorCode::ShapeMismatch,
                "propagation operator must be n x n");
        require(all_finite(*a_hat), ErrorCode::NonFiniteInput, "non-finite adjacency");
    }
    require(all_finite(X), ErrorCode::NonFiniteInput, "non-finite features");
    require(all_finite(model.W0) && all_finite(model.W1), ErrorCode::NonFiniteInput,
            "non-finite weights");

    ForwardTrace t;
    if (a_hat) t.a_hat = *a_hat;
    t.input_keep = keep_matrix(X.rows, X.cols, model.dropout_rate, mode.stochastic,
                               derive_seed(mode.seed, std::uint64_t{0}));
    t.dropped_input = apply_keep(X, t.input_keep);
    t.agg_input = a_hat ? matmul(*a_hat, t.dropped_input) : t.dropped_input;
    t.pre_hidden = matmul(t.agg_input, model.W0);
    t.hidden = t.pre_hidden;
    for (double& z : t.hidden.data) z = z > 0.0 ? z : 0.0;
    t.hidden_keep = keep_matrix(t.hidden.rows, t.hidden.cols, model.dropout_rate, mode.stochastic,
                                derive_seed(mode.seed, std::uint64_t{1}));
    t.dropped_hidden = apply_keep(t.hidden, t.hidden_keep);
    t.agg_hidden = a_hat ? matmul(*a_hat, t.dropped_hidden) : t.dropped_hidden;
    t.probs = row_softmax(matmul(t.agg_hidden, model.W1));
    return t;
}

GcnGrads backward_impl(const ForwardTrace& t, const std::vector<int>& labels,
                       const std::vector<bool>& mask, const GcnModel& model, double weight_decay) {
    require(t.probs.rows > 0 && t.agg_input.cols == model.W0.rows &&
                t.pre_hidden.cols == model.W0.cols && t.agg_hidden.cols == model.W1.rows &&
                t.probs.cols == model.W1.cols &&
                t.hidden_keep.rows == t.pre_hidden.rows &&
                (t.a_hat.rows == 0 || t.a_hat.rows == t.probs.rows),
            ErrorCode::StaleTrace, "trace does not match this model");
    const int n = t.probs.rows;
    const int c = t.probs.cols;
    require(labels.size() == static_cast<std::size_t>(n) && mask.size() == labels.size(),
            ErrorCode::LengthMismatch, "labels/mask must cover every node");
    int m = 0;
    for (bool b : mask)
        if (b) ++m;
    require(m > 0, ErrorCode::EmptyMask, "no masked nodes");

    Matrix dZ1(n, c);
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        int y = labels[static_cast<std::size_t>(i)];
        require(y >= 0 && y < c, ErrorCode::MalformedRecord,
                "masked node " + std::to_string(i) + " has label " + std::to_string(y));
        for (int j = 0; j < c; ++j)
            dZ1(i, j) = (t.probs(i, j) - (j == y ? 1.0 : 0.0)) / static_cast<double>(m);
    }

    GcnGrads g;
    g.w1 = matmul_transpose_a(t.agg_hidden, dZ1);
    Matrix dS1 = matmul_transpose_b(dZ1, model.W1);
    Matrix dDropH = t.a_hat.rows > 0 ? matmul(t.a_hat, dS1) : dS1;  // A_hat symmetric
    Matrix dZ0(n, model.W0.cols);
    for (std::size_t i = 0; i < dZ0.data.size(); ++i) {
        double dh = t.hidden_keep.data[i] == 0.0 ? 0.0 : dDropH.data[i] * t.hidden_keep.data[i];
        dZ0.data[i] = t.pre_hidden.data[i] > 0.0 ? dh : 0.0;
    }
    g.w0 = matmul_transpose_a(t.agg_input, dZ0);
    for (std::size_t i = 0; i < g.w0.data.size(); ++i) g.w0.data[i] += weight_decay * model.W0.data[i];
    return g;
}

struct AdamState {
    Matrix m0, v0, m1, v1;
    int t = 0;
};

void adam_step(Matrix& w, Matrix& m, Matrix& v, const Matrix& g, double lr, int t) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
        v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
        double mhat = m.data[i] / c1;
        double vhat = v.data[i] / c2;
        w.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

GcnTrainResult train_impl(const Matrix* a_hat, const Matrix& X, const std::vector<int>& labels,
                          const std::vector<bool>& train_mask, const TrainConfig& cfg) {
    require(cfg.epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
    require(cfg.hidden_dim >= 1, ErrorCode::InvalidConfig, "hidden_dim must be >= 1");
    require(cfg.learning_rate > 0.0, ErrorCode::InvalidConfig, "learning_rate must be positive");
    require(cfg.weight_decay >= 0.0, ErrorCode::InvalidConfig, "weight_decay must be >= 0");
    require(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0, ErrorCode::InvalidConfig,
            "dropout_rate must lie in [0,1)");
    require(std::any_of(train_mask.begin(), train_mask.end(), [](bool b) { return b; }),
            ErrorCode::EmptyMask, "training mask is empty");

    GcnTrainResult result;
    result.model = init_model(X.cols, cfg);
    AdamState adam;
    adam.m0 = Matrix(result.model.W0.rows, result.model.W0.cols);
    adam.v0 = adam.m0;
    adam.m1 = Matrix(result.model.W1.rows, result.model.W1.cols);
    adam.v1 = adam.m1;
    const std::uint64_t drop_base = derive_seed(cfg.seed, "train-dropout");
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ForwardMode mode = stochastic_mode(derive_seed(drop_base, static_cast<std::uint64_t>(epoch)));
        ForwardTrace trace = forward_impl(result.model, a_hat, X, mode);
        double loss = masked_loss(trace.probs, labels, train_mask, result.model, cfg.weight_decay);
        require(std::isfinite(loss), ErrorCode::DivergedLoss,
                "loss diverged at epoch " + std::to_string(epoch));
        result.loss_history.push_back(loss);
        GcnGrads g = backward_impl(trace, labels, train_mask, result.model, cfg.weight_decay);
        ++adam.t;
        adam_step(result.model.W0, adam.m0, adam.v0, g.w0, cfg.learning_rate, adam.t);
        adam_step(result.model.W1, adam.m1, adam.v1, g.w1, cfg.learning_rate, adam.t);
    }
    return result;
}

}  // namespace

GcnModel init_model(int d, const TrainConfig& cfg) {
    require(d >= 1, ErrorCode::InvalidConfig, "feature dimension must be >= 1");
    GcnModel model;
    model.hidden_dim = cfg.hidden_dim;
    model.n_classes = 2;
    model.dropout_rate = cfg.dropout_rate;
    model.W0 = Matrix(d, cfg.hidden_dim);
    model.W1 = Matrix(cfg.hidden_dim, model.n_classes);
    std::mt19937_64 gen(derive_seed(cfg.seed, "gcn-init"));
    double limit0 = std::sqrt(6.0 / static_cast<double>(d + cfg.hidden_dim));
    for (double& w : model.W0.data) w = uniform_range(gen, -limit0, limit0);
    double limit1 = std::sqrt(6.0 / static_cast<double>(cfg.hidden_dim + model.n_classes));
    for (double& w : model.W1.data) w = uniform_range(gen, -limit1, limit1);
    return model;
}

ForwardTrace forward(const GcnModel& model, const Matrix& a_hat, const Matrix& X,
                     ForwardMode mode) {
    return forward_impl(model, &a_hat, X, mode);
}

ForwardTrace mlp_forward(const GcnModel& model, const Matrix& X, ForwardMode mode) {
    return forward_impl(model, nullptr, X, mode);
}

double masked_loss(const Matrix& probs, const std::vector<int>& labels,
                   const std::vector<bool>& mask, const GcnModel& model, double weight_decay) {
    require(labels.size() == static_cast<std::size_t>(probs.rows) && mask.size() == labels.size(),
            ErrorCode::LengthMismatch, "labels/mask must cover every row");
    double acc = 0.0;
    int m = 0;
    for (int i = 0; i < probs.rows; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        int y = labels[static_cast<std::size_t>(i)];
        require(y >= 0 && y < probs.cols, ErrorCode::MalformedRecord,
                "masked node " + std::to_string(i) + " has label " + std::to_string(y));
        acc -= std::log(std::max(probs(i, y), 1e-12));
        ++m;
    }
    require(m > 0, ErrorCode::EmptyMask, "no masked nodes");
    return acc / static_cast<double>(m) + 0.5 * weight_decay * frobenius_norm_squared(model.W0);
}

GcnGrads backward(const ForwardTrace& trace, const std::vector<int>& labels,
                  const std::vector<bool>& mask, const GcnModel& model, double weight_decay) {
    return backward_impl(trace, labels, mask, model, weight_decay);
}

GcnTrainResult train(const PatientGraph& graph, const std::vector<int>& labels,
                     const std::vector<bool>& train_mask, const TrainConfig& cfg) {
    return train_impl(&graph.normalized, graph.features, labels, train_mask, cfg);
}

GcnTrainResult train_mlp(const Matrix& X, const std::vector<int>& labels,
                         const std::vector<bool>& train_mask, const TrainConfig& cfg) {
    return train_impl(nullptr, X, labels, train_mask, cfg);
}

Matrix predict(const GcnModel& model, const PatientGraph& graph, ForwardMode mode) {
    return forward(model, graph.normalized, graph.features, mode).probs;
}

Matrix mlp_predict(const GcnModel& model, const Matrix& X, ForwardMode mode) {
    return mlp_forward(model, X, mode).probs;
}

std::vector<int> hard_labels(const Matrix& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows));
    for (int i = 0; i < probs.rows; ++i) {
        int best = 0;
        for (int j = 1; j < probs.cols; ++j)
            if (probs(i, j) > probs(i, best)) best = j;  // strict: ties stay on class 0
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

void save_gcn(const GcnModel& model, const std::filesystem::path& path) {
    json j;
    j["input_dim"] = model.W0.rows;
    j["hidden_dim"] = model.hidden_dim;
    j["n_classes"] = model.n_classes;
    j["dropout_rate"] = model.dropout_rate;
    j["W0"] = pack_f32(model.W0.data);
    j["W1"] = pack_f32(model.W1.data);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

GcnModel load_gcn(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    try {
        json j = json::parse(in);
        GcnModel model;
        int d = j.at("input_dim").get<int>();
        model.hidden_dim = j.at("hidden_dim").get<int>();
        model.n_classes = j.at("n_classes").get<int>();
        model.dropout_rate = j.at("dropout_rate").get<double>();
        model.W0 = Matrix(d, model.hidden_dim);
        model.W0.data = unpack_f32(j.at("W0").get<std::string>());
        model.W1 = Matrix(model.hidden_dim, model.n_classes);
        model.W1.data = unpack_f32(j.at("W1").get<std::string>());
        require(model.W0.data.size() ==
                        static_cast<std::size_t>(d) * static_cast<std::size_t>(model.hidden_dim) &&
                    model.W1.data.size() == static_cast<std::size_t>(model.hidden_dim) *
                                                static_cast<std::size_t>(model.n_classes),
                ErrorCode::MalformedRecord, "weight payloads do not match declared shapes");
        require(model.dropout_rate >= 0.0 && model.dropout_rate < 1.0, ErrorCode::MalformedRecord,
                "dropout_rate out of range");
        return model;
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, "bad model checkpoint: " + std::string(e.what()));
    }
}

void save_loss_history(const std::vector<double>& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << "epoch,loss\n";
    char buf[40];
    for (std::size_t e = 0; e < history.size(); ++e) {
        auto res = std::to_chars(buf, buf + sizeof(buf), history[e]);
        out << e << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace tacegcn
