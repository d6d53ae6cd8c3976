#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tacegcn/autoencoder.hpp"
#include "tacegcn/dataset.hpp"
#include "tacegcn/evaluation.hpp"
#include "tacegcn/gcn.hpp"
#include "tacegcn/graph.hpp"
#include "tacegcn/metrics.hpp"
#include "tacegcn/qeasl.hpp"
#include "tacegcn/uncertainty.hpp"

namespace py = pybind11;
using namespace tacegcn;

namespace {

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["f1"] = m.f1;
    d["auc"] = m.auc ? py::object(py::float_(*m.auc)) : py::object(py::none());
    return d;
}

py::dict cv_dict(const CvResult& cv) {
    py::dict d;
    py::list folds;
    for (const Metrics& m : cv.per_fold) folds.append(metrics_dict(m));
    d["per_fold"] = folds;
    d["mean"] = metrics_dict(cv.mean);
    d["std"] = metrics_dict(cv.stdev);
    return d;
}

GraphConfig make_graph_cfg(const std::vector<std::string>& edge_attrs, bool correlation) {
    GraphConfig g;
    g.edge_attrs = edge_attrs;
    g.correlation_weighting = correlation;
    return g;
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].size() == rows.front().size(), ErrorCode::ShapeMismatch,
                "ragged row lengths");
        std::copy(rows[i].begin(), rows[i].end(), m.row(static_cast<int>(i)).begin());
    }
    return m;
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows));
    for (int i = 0; i < m.rows; ++i) rows[static_cast<std::size_t>(i)].assign(m.row(i).begin(), m.row(i).end());
    return rows;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "treatment-response prediction pipeline: qEASL labels, patient graph, GCN, "
                "MC-dropout triage";

    py::register_exception<Error>(mod, "PipelineError");

    py::class_<Cohort>(mod, "Cohort")
        .def_property_readonly("attr_names", [](const Cohort& c) { return c.attr_names; })
        .def("__len__", [](const Cohort& c) { return c.size(); })
        .def("ids",
             [](const Cohort& c) {
                 std::vector<std::string> ids;
                 for (const PatientRecord& p : c.patients) ids.push_back(p.id);
                 return ids;
             })
        .def("labels",
             [](const Cohort& c) {
                 py::list out;
                 for (const PatientRecord& p : c.patients)
                     out.append(p.label ? py::object(py::str(label_name(*p.label)))
                                        : py::object(py::none()));
                 return out;
             })
        .def("features", [](const Cohort& c) {
            py::list out;
            for (const PatientRecord& p : c.patients)
                out.append(p.feature_vector ? py::object(py::cast(*p.feature_vector))
                                            : py::object(py::none()));
            return out;
        });

    mod.def(
        "generate_cohort",
        [](int n_patients, std::uint64_t seed, double class_balance, double noise_sigma,
           double class_separation, std::array<int, 3> volume_shape, int latent_dim_true,
           bool boundary_cases, const std::map<std::string, double>& attr_informativeness) {
            SynthConfig cfg;
            cfg.n_patients = n_patients;
            cfg.seed = seed;
            cfg.class_balance = class_balance;
            cfg.noise_sigma = noise_sigma;
            cfg.class_separation = class_separation;
            cfg.volume_shape = volume_shape;
            cfg.latent_dim_true = latent_dim_true;
            cfg.boundary_cases = boundary_cases;
            if (!attr_informativeness.empty()) cfg.attr_informativeness = attr_informativeness;
            return generate_synthetic(cfg);
        },
        py::arg("n_patients") = 120, py::arg("seed") = 0, py::arg("class_balance") = 0.5,
        py::arg("noise_sigma") = 0.5, py::arg("class_separation") = 2.0,
        py::arg("volume_shape") = std::array<int, 3>{6, 6, 6}, py::arg("latent_dim_true") = 8,
        py::arg("boundary_cases") = false,
        py::arg("attr_informativeness") = std::map<std::string, double>{});

    mod.def("load_cohort", &load_cohort, py::arg("path"));
    mod.def("save_cohort", &save_cohort, py::arg("cohort"), py::arg("path"));

    mod.def(
        "label_cohort",
        [](const Cohort& cohort) {
            Cohort out = cohort;
            for (PatientRecord& p : out.patients) {
                require(p.qeasl_baseline.has_value() && p.qeasl_followup.has_value(),
                        ErrorCode::MissingMeasurements,
                        "patient '" + p.id + "' lacks qEASL measurements");
                auto averaged = [](const std::vector<QeaslMeasurement>& list) {
                    std::vector<QeaslEstimate> est;
                    for (const QeaslMeasurement& m : list) est.push_back(measure_qeasl(m));
                    return average_qeasl(est);
                };
                p.label = responder_label(averaged(*p.qeasl_baseline), averaged(*p.qeasl_followup));
            }
            return out;
        },
        py::arg("cohort"));

    mod.def(
        "encode_cohort",
        [](const Cohort& cohort, int latent_dim, const std::vector<int>& hidden_widths,
           double learning_rate, int epochs, int batch_size, std::uint64_t seed) {
            EncoderConfig cfg;
            cfg.latent_dim = latent_dim;
            cfg.hidden_widths = hidden_widths;
            cfg.learning_rate = learning_rate;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.seed = seed;
            return attach_features(cohort, train_autoencoder(cohort, cfg).model);
        },
        py::arg("cohort"), py::arg("latent_dim") = 128,
        py::arg("hidden_widths") = std::vector<int>{}, py::arg("learning_rate") = 0.01,
        py::arg("epochs") = 150, py::arg("batch_size") = 16, py::arg("seed") = 0);

    mod.def(
        "qeasl_fraction",
        [](const std::vector<double>& tumor_intensities, const std::array<double, 3>& roi_means,
           double voxel_volume) {
            QeaslMeasurement m{tumor_intensities, roi_means, voxel_volume};
            QeaslEstimate est = measure_qeasl(m);
            py::dict d;
            d["enhancing_volume"] = est.enhancing_volume;
            d["total_volume"] = est.total_volume;
            d["fraction"] = est.fraction;
            return d;
        },
        py::arg("tumor_intensities"), py::arg("roi_means"), py::arg("voxel_volume") = 1.0);

    mod.def(
        "responder_label",
        [](double baseline, double followup) {
            return std::string(label_name(responder_label(baseline, followup)));
        },
        py::arg("baseline_volume"), py::arg("followup_volume"));

    mod.def("pearson_similarity", &pearson_similarity, py::arg("x"), py::arg("y"));

    mod.def(
        "normalize_adjacency",
        [](const std::vector<std::vector<double>>& W) {
            return from_matrix(normalize_adjacency(to_matrix(W)));
        },
        py::arg("W"));

    mod.def("auc", &auc, py::arg("scores"), py::arg("truth"));

    mod.def(
        "crossval",
        [](const Cohort& cohort, int k, int n_mc, std::uint64_t seed,
           const std::vector<std::string>& edge_attrs, bool correlation, int gcn_epochs,
           double dropout_rate, int gcn_hidden, double gcn_lr, double gcn_weight_decay,
           bool refit_encoder, int encoder_latent, int encoder_epochs) {
            GraphConfig g = make_graph_cfg(edge_attrs, correlation);
            TrainConfig t;
            t.epochs = gcn_epochs;
            t.dropout_rate = dropout_rate;
            t.hidden_dim = gcn_hidden;
            t.learning_rate = gcn_lr;
            t.weight_decay = gcn_weight_decay;
            std::optional<EncoderConfig> enc;
            if (refit_encoder) {
                EncoderConfig e;
                e.latent_dim = encoder_latent;
                e.epochs = encoder_epochs;
                enc = e;
            }
            py::dict out;
            out["GCN"] = cv_dict(run_pipeline_cv(cohort, g, t, k, n_mc, seed, enc));
            RfConfig rf;
            out["RF"] = cv_dict(run_rf_cv(cohort, rf, k, seed, 16, enc));
            return out;
        },
        py::arg("cohort"), py::arg("k") = 10, py::arg("n_mc") = 100, py::arg("seed") = 0,
        py::arg("edge_attrs") = std::vector<std::string>{"Cirrhosis", "Sorafenib"},
        py::arg("correlation") = true, py::arg("gcn_epochs") = 200,
        py::arg("dropout_rate") = 0.15, py::arg("gcn_hidden") = 16, py::arg("gcn_lr") = 0.01,
        py::arg("gcn_weight_decay") = 5e-4, py::arg("refit_encoder") = false,
        py::arg("encoder_latent") = 32, py::arg("encoder_epochs") = 60);

    mod.def(
        "ablate",
        [](const Cohort& cohort, int k, int n_mc, std::uint64_t seed,
           const std::vector<std::string>& edge_attrs, int gcn_epochs, double dropout_rate,
           int gcn_hidden, double gcn_lr, double gcn_weight_decay, bool refit_encoder,
           int encoder_latent, int encoder_epochs) {
            GraphConfig g = make_graph_cfg(edge_attrs, true);
            TrainConfig t;
            t.epochs = gcn_epochs;
            t.dropout_rate = dropout_rate;
            t.hidden_dim = gcn_hidden;
            t.learning_rate = gcn_lr;
            t.weight_decay = gcn_weight_decay;
            std::optional<EncoderConfig> enc;
            if (refit_encoder) {
                EncoderConfig e;
                e.latent_dim = encoder_latent;
                e.epochs = encoder_epochs;
                enc = e;
            }
            py::dict out;
            for (const auto& [name, cv] : run_ablations(cohort, g, t, k, n_mc, seed, enc))
                out[name.c_str()] = cv_dict(cv);
            return out;
        },
        py::arg("cohort"), py::arg("k") = 10, py::arg("n_mc") = 100, py::arg("seed") = 0,
        py::arg("edge_attrs") = std::vector<std::string>{"Cirrhosis", "Sorafenib"},
        py::arg("gcn_epochs") = 200, py::arg("dropout_rate") = 0.15, py::arg("gcn_hidden") = 16,
        py::arg("gcn_lr") = 0.01, py::arg("gcn_weight_decay") = 5e-4,
        py::arg("refit_encoder") = false, py::arg("encoder_latent") = 32,
        py::arg("encoder_epochs") = 60);

    mod.def(
        "train_and_triage",
        [](const Cohort& cohort, const std::vector<double>& thresholds, int n_mc,
           std::uint64_t seed, const std::vector<std::string>& edge_attrs) {
            PatientGraph graph = build_graph(cohort, make_graph_cfg(edge_attrs, true));
            std::vector<int> labels = label_indices(cohort);
            std::vector<bool> mask(labels.size());
            std::vector<int> nodes;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                mask[i] = labels[i] >= 0;
                if (mask[i]) nodes.push_back(static_cast<int>(i));
            }
            TrainConfig t;
            t.seed = seed;
            GcnTrainResult trained = train(graph, labels, mask, t);
            auto preds = mc_predict(trained.model, graph, nodes, n_mc, seed);
            py::list reports;
            for (double th : thresholds) {
                TriageReport r = triage(preds, labels, th);
                py::dict d;
                d["threshold"] = r.threshold;
                d["retained"] = r.retained;
                d["flagged"] = r.flagged;
                d["metrics_all"] = metrics_dict(r.metrics_all);
                d["metrics_retained"] = r.metrics_retained
                                            ? py::object(metrics_dict(*r.metrics_retained))
                                            : py::object(py::none());
                reports.append(d);
            }
            return reports;
        },
        py::arg("cohort"), py::arg("thresholds") = std::vector<double>{0.85, 0.90, 0.95},
        py::arg("n_mc") = 100, py::arg("seed") = 0,
        py::arg("edge_attrs") = std::vector<std::string>{"Cirrhosis", "Sorafenib"});
}
