// Command-line front end: synth | label | encode | graph | train | predict |
// crossval | ablate | triage. One global seed feeds every stage through named
// derivations, so reruns with the same config and seed are byte-identical.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tacegcn/autoencoder.hpp"
#include "tacegcn/dataset.hpp"
#include "tacegcn/evaluation.hpp"
#include "tacegcn/gcn.hpp"
#include "tacegcn/graph.hpp"
#include "tacegcn/pca.hpp"
#include "tacegcn/qeasl.hpp"
#include "tacegcn/rng.hpp"
#include "tacegcn/uncertainty.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace tacegcn;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidConfig, "config is not valid JSON: " + std::string(e.what()));
    }
}

std::uint64_t resolve_seed(const CommonArgs& args, const json& cfg) {
    if (args.seed) return *args.seed;
    if (cfg.contains("seed")) return cfg.at("seed").get<std::uint64_t>();
    return 0;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

SynthConfig synth_config(const json& cfg) {
    SynthConfig s;
    if (!cfg.contains("synth")) return s;
    const json& j = cfg.at("synth");
    maybe(j, "n_patients", s.n_patients);
    if (j.contains("volume_shape")) {
        auto shape = j.at("volume_shape").get<std::vector<int>>();
        require(shape.size() == 3, ErrorCode::InvalidConfig, "volume_shape needs 3 entries");
        std::copy(shape.begin(), shape.end(), s.volume_shape.begin());
    }
    maybe(j, "latent_dim_true", s.latent_dim_true);
    maybe(j, "class_balance", s.class_balance);
    maybe(j, "noise_sigma", s.noise_sigma);
    maybe(j, "class_separation", s.class_separation);
    maybe(j, "boundary_cases", s.boundary_cases);
    if (j.contains("attr_informativeness"))
        s.attr_informativeness =
            j.at("attr_informativeness").get<std::map<std::string, double>>();
    return s;
}

EncoderConfig encoder_config(const json& cfg) {
    EncoderConfig e;
    if (!cfg.contains("encoder")) return e;
    const json& j = cfg.at("encoder");
    maybe(j, "latent_dim", e.latent_dim);
    maybe(j, "hidden_widths", e.hidden_widths);
    maybe(j, "learning_rate", e.learning_rate);
    maybe(j, "epochs", e.epochs);
    maybe(j, "batch_size", e.batch_size);
    return e;
}

GraphConfig graph_config(const json& cfg) {
    GraphConfig g;
    if (!cfg.contains("graph")) return g;
    const json& j = cfg.at("graph");
    maybe(j, "edge_attrs", g.edge_attrs);
    maybe(j, "correlation_weighting", g.correlation_weighting);
    return g;
}

TrainConfig train_config(const json& cfg) {
    TrainConfig t;
    if (!cfg.contains("train")) return t;
    const json& j = cfg.at("train");
    maybe(j, "learning_rate", t.learning_rate);
    maybe(j, "weight_decay", t.weight_decay);
    maybe(j, "epochs", t.epochs);
    maybe(j, "dropout_rate", t.dropout_rate);
    maybe(j, "hidden_dim", t.hidden_dim);
    return t;
}

int cv_folds(const json& cfg) { return cfg.contains("k_folds") ? cfg.at("k_folds").get<int>() : 10; }
int mc_samples(const json& cfg) {
    return cfg.contains("n_mc_samples") ? cfg.at("n_mc_samples").get<int>() : 100;
}

// The CV harness refits the autoencoder per fold only when asked to (or when
// features are missing); an explicit encoder section in the config asks.
std::optional<EncoderConfig> cv_encoder(const json& cfg) {
    if (cfg.contains("encoder")) return encoder_config(cfg);
    return std::nullopt;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------

void cmd_synth(const CommonArgs& common, const std::string& out,
               std::optional<int> n_patients, std::optional<double> class_balance,
               std::optional<double> noise_sigma, std::optional<double> separation,
               bool boundary) {
    json cfg = load_config(common.config_path);
    SynthConfig s = synth_config(cfg);
    if (n_patients) s.n_patients = *n_patients;
    if (class_balance) s.class_balance = *class_balance;
    if (noise_sigma) s.noise_sigma = *noise_sigma;
    if (separation) s.class_separation = *separation;
    if (boundary) s.boundary_cases = true;
    s.seed = derive_seed(resolve_seed(common, cfg), "synth");
    Cohort cohort = generate_synthetic(s);
    save_cohort(cohort, out);
    if (!common.quiet)
        std::cout << "wrote " << cohort.size() << " patients to " << out << '\n';
}

void cmd_label(const CommonArgs& common, const std::string& in, const std::string& out) {
    json cfg = load_config(common.config_path);
    (void)resolve_seed(common, cfg);  // labeling is deterministic; seed unused
    Cohort cohort = load_cohort(in);
    for (PatientRecord& p : cohort.patients) {
        require(p.qeasl_baseline.has_value() && p.qeasl_followup.has_value(),
                ErrorCode::MissingMeasurements,
                "patient '" + p.id + "' lacks baseline/follow-up qEASL measurements");
        auto averaged = [](const std::vector<QeaslMeasurement>& list) {
            std::vector<QeaslEstimate> est;
            for (const QeaslMeasurement& m : list) est.push_back(measure_qeasl(m));
            return average_qeasl(est);
        };
        p.label = responder_label(averaged(*p.qeasl_baseline), averaged(*p.qeasl_followup));
    }
    save_cohort(cohort, out);
    if (!common.quiet) {
        int responders = 0;
        for (const PatientRecord& p : cohort.patients)
            if (p.label == Label::Responder) ++responders;
        std::cout << "labelled " << cohort.size() << " patients (" << responders
                  << " responders) into " << out << '\n';
    }
}

void cmd_encode(const CommonArgs& common, const std::string& in, const std::string& out,
                const std::string& model_out, std::optional<int> latent) {
    json cfg = load_config(common.config_path);
    EncoderConfig e = encoder_config(cfg);
    if (latent) e.latent_dim = *latent;
    e.seed = derive_seed(resolve_seed(common, cfg), "encode");
    Cohort cohort = load_cohort(in);
    AeTrainResult trained = train_autoencoder(cohort, e);
    Cohort with_features = attach_features(cohort, trained.model);
    save_cohort(with_features, out);
    if (!model_out.empty()) save_autoencoder(trained.model, model_out);
    if (!common.quiet)
        std::cout << "encoded " << cohort.size() << " patients to latent width "
                  << trained.model.latent_dim << "; reconstruction loss "
                  << trained.loss_history.front() << " -> " << trained.loss_history.back()
                  << '\n';
}

void cmd_graph(const CommonArgs& common, const std::string& in, const std::string& out) {
    json cfg = load_config(common.config_path);
    Cohort cohort = load_cohort(in);
    PatientGraph graph = build_graph(cohort, graph_config(cfg));
    save_graph_dump(graph, cohort.attr_names, out);
    if (!common.quiet) {
        int edges = 0;
        for (int i = 0; i < graph.adjacency.rows; ++i)
            for (int j = i + 1; j < graph.adjacency.cols; ++j)
                if (graph.adjacency(i, j) > 0.0) ++edges;
        std::cout << "graph over " << graph.adjacency.rows << " patients, " << edges
                  << " weighted edges -> " << out << '\n';
    }
}

void cmd_train(const CommonArgs& common, const std::string& in, const std::string& out,
               const std::string& history_out) {
    json cfg = load_config(common.config_path);
    Cohort cohort = load_cohort(in);
    PatientGraph graph = build_graph(cohort, graph_config(cfg));
    TrainConfig t = train_config(cfg);
    t.seed = derive_seed(resolve_seed(common, cfg), "train");
    std::vector<int> labels = label_indices(cohort);
    std::vector<bool> mask(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels[i] >= 0;
    GcnTrainResult trained = train(graph, labels, mask, t);
    save_gcn(trained.model, out);
    if (!history_out.empty()) save_loss_history(trained.loss_history, history_out);
    if (!common.quiet)
        std::cout << "trained " << t.epochs << " epochs; loss "
                  << trained.loss_history.front() << " -> " << trained.loss_history.back()
                  << "; model -> " << out << '\n';
}

void cmd_predict(const CommonArgs& common, const std::string& in, const std::string& model_path,
                 const std::string& out) {
    json cfg = load_config(common.config_path);
    Cohort cohort = load_cohort(in);
    PatientGraph graph = build_graph(cohort, graph_config(cfg));
    GcnModel model = load_gcn(model_path);
    Matrix probs = predict(model, graph, deterministic_mode());
    std::vector<int> hard = hard_labels(probs);
    json root;
    json nodes = json::array();
    for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
        json j;
        j["id"] = cohort.patients[i].id;
        j["prob"] = {probs(static_cast<int>(i), 0), probs(static_cast<int>(i), 1)};
        j["label"] = label_name(static_cast<Label>(hard[i]));
        j["true"] = cohort.patients[i].label
                        ? json(label_name(*cohort.patients[i].label))
                        : json(nullptr);
        nodes.push_back(std::move(j));
    }
    root["nodes"] = std::move(nodes);
    write_text(out, root.dump(2) + "\n");
    if (!common.quiet) std::cout << "predictions for " << cohort.size() << " nodes -> " << out << '\n';
}

void cmd_crossval(const CommonArgs& common, const std::string& in, const std::string& out,
                  const std::string& folds_csv, const std::string& table_out) {
    json cfg = load_config(common.config_path);
    std::uint64_t seed = resolve_seed(common, cfg);
    Cohort cohort = load_cohort(in);
    int k = cv_folds(cfg), n_mc = mc_samples(cfg);
    auto encoder = cv_encoder(cfg);
    std::vector<std::pair<std::string, CvResult>> rows;
    rows.emplace_back("GCN", run_pipeline_cv(cohort, graph_config(cfg), train_config(cfg), k,
                                             n_mc, seed, encoder));
    RfConfig rf;
    rows.emplace_back("RF", run_rf_cv(cohort, rf, k, seed, 16, encoder));
    save_results_json(rows, out);
    if (!folds_csv.empty()) save_fold_csv(rows, folds_csv);
    std::string table = format_results_table(rows);
    if (!table_out.empty()) write_text(table_out, table);
    if (!common.quiet) std::cout << table;
}

void cmd_ablate(const CommonArgs& common, const std::string& in, const std::string& out,
                const std::string& folds_csv, const std::string& table_out) {
    json cfg = load_config(common.config_path);
    std::uint64_t seed = resolve_seed(common, cfg);
    Cohort cohort = load_cohort(in);
    auto rows = run_ablations(cohort, graph_config(cfg), train_config(cfg), cv_folds(cfg),
                              mc_samples(cfg), seed, cv_encoder(cfg));
    save_results_json(rows, out);
    if (!folds_csv.empty()) save_fold_csv(rows, folds_csv);
    std::string table = format_results_table(rows);
    if (!table_out.empty()) write_text(table_out, table);
    if (!common.quiet) std::cout << table;
}

void cmd_triage(const CommonArgs& common, const std::string& in, const std::string& model_path,
                const std::string& out, std::vector<double> thresholds) {
    json cfg = load_config(common.config_path);
    std::uint64_t seed = resolve_seed(common, cfg);
    if (thresholds.empty()) {
        thresholds = {0.85, 0.90, 0.95};
        if (cfg.contains("triage_thresholds"))
            thresholds = cfg.at("triage_thresholds").get<std::vector<double>>();
    }
    Cohort cohort = load_cohort(in);
    PatientGraph graph = build_graph(cohort, graph_config(cfg));
    GcnModel model = load_gcn(model_path);
    std::vector<int> labels = label_indices(cohort);
    std::vector<int> nodes;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) nodes.push_back(static_cast<int>(i));
    require(!nodes.empty(), ErrorCode::EmptyPredictions, "no labelled nodes to triage");
    auto preds = mc_predict(model, graph, nodes, mc_samples(cfg), derive_seed(seed, "triage"));
    std::vector<std::string> ids;
    for (const PatientRecord& p : cohort.patients) ids.push_back(p.id);
    std::vector<TriageReport> reports;
    for (double t : thresholds) reports.push_back(triage(preds, labels, t));
    save_triage_report(reports, preds, ids, labels, out);
    if (!common.quiet)
        for (double t : thresholds) std::cout << format_triage_table(preds, ids, labels, t) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treatment-response prediction pipeline (patient graph + GCN + MC dropout)"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonArgs common;
    app.add_option("--config", common.config_path, "JSON config file (flags override it)");
    app.add_option("--seed", common.seed, "global seed; stages derive their own streams");
    app.add_flag("--quiet", common.quiet, "suppress progress chatter on stdout");

    std::string in, out, model_path, history_out, folds_csv, table_out, model_out;
    std::optional<int> n_patients, latent;
    std::optional<double> class_balance, noise_sigma, separation;
    bool boundary = false;
    std::vector<double> thresholds;

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    synth->add_option("--out", out)->required();
    synth->add_option("--n-patients", n_patients);
    synth->add_option("--class-balance", class_balance);
    synth->add_option("--noise-sigma", noise_sigma);
    synth->add_option("--separation", separation);
    synth->add_flag("--boundary-cases", boundary);
    synth->callback([&] {
        cmd_synth(common, out, n_patients, class_balance, noise_sigma, separation, boundary);
    });

    auto* label = app.add_subcommand("label", "derive responder labels from qEASL measurements");
    label->add_option("--in", in)->required();
    label->add_option("--out", out)->required();
    label->callback([&] { cmd_label(common, in, out); });

    auto* encode = app.add_subcommand("encode", "train the autoencoder and attach node features");
    encode->add_option("--in", in)->required();
    encode->add_option("--out", out)->required();
    encode->add_option("--model-out", model_out);
    encode->add_option("--latent", latent);
    encode->callback([&] { cmd_encode(common, in, out, model_out, latent); });

    auto* graph = app.add_subcommand("graph", "build and dump the patient graph");
    graph->add_option("--in", in)->required();
    graph->add_option("--out", out)->required();
    graph->callback([&] { cmd_graph(common, in, out); });

    auto* train = app.add_subcommand("train", "train the GCN on all labelled nodes");
    train->add_option("--in", in)->required();
    train->add_option("--out", out)->required();
    train->add_option("--history", history_out);
    train->callback([&] { cmd_train(common, in, out, history_out); });

    auto* predict = app.add_subcommand("predict", "deterministic softmax predictions");
    predict->add_option("--in", in)->required();
    predict->add_option("--model", model_path)->required();
    predict->add_option("--out", out)->required();
    predict->callback([&] { cmd_predict(common, in, model_path, out); });

    auto* crossval = app.add_subcommand("crossval", "10-fold CV of the GCN and the RF baseline");
    crossval->add_option("--in", in)->required();
    crossval->add_option("--out", out)->required();
    crossval->add_option("--folds-csv", folds_csv);
    crossval->add_option("--table", table_out);
    crossval->callback([&] { cmd_crossval(common, in, out, folds_csv, table_out); });

    auto* ablate = app.add_subcommand("ablate", "CV of graph-construction ablations");
    ablate->add_option("--in", in)->required();
    ablate->add_option("--out", out)->required();
    ablate->add_option("--folds-csv", folds_csv);
    ablate->add_option("--table", table_out);
    ablate->callback([&] { cmd_ablate(common, in, out, folds_csv, table_out); });

    auto* triage_cmd = app.add_subcommand("triage", "MC-dropout confidence triage");
    triage_cmd->add_option("--in", in)->required();
    triage_cmd->add_option("--model", model_path)->required();
    triage_cmd->add_option("--out", out)->required();
    triage_cmd->add_option("--thresholds", thresholds);
    triage_cmd->callback([&] { cmd_triage(common, in, model_path, out, thresholds); });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const tacegcn::Error& e) {
        nlohmann::ordered_json err;
        err["error"]["code"] = error_code_name(e.code());
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["error"]["code"] = "Internal";
        err["error"]["message"] = e.what();
        std::cerr << err.dump() << '\n';
        return 2;
    }
    return 0;
}
