#include "tacegcn/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tacegcn/pca.hpp"
#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

Metrics metrics_from(const std::vector<int>& pred, const std::vector<int>& truth,
                     const std::vector<double>& scores) {
    Metrics m;
    m.accuracy = accuracy(pred, truth);
    m.f1 = f1_binary(pred, truth);
    try {
        m.auc = auc(scores, truth);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SingleClass) throw;
    }
    return m;
}

void aggregate(CvResult& cv) {
    const double k = static_cast<double>(cv.per_fold.size());
    double acc = 0.0, f1 = 0.0;
    for (const Metrics& m : cv.per_fold) {
        acc += m.accuracy;
        f1 += m.f1;
    }
    cv.mean.accuracy = acc / k;
    cv.mean.f1 = f1 / k;
    double acc2 = 0.0, f12 = 0.0;
    for (const Metrics& m : cv.per_fold) {
        acc2 += (m.accuracy - cv.mean.accuracy) * (m.accuracy - cv.mean.accuracy);
        f12 += (m.f1 - cv.mean.f1) * (m.f1 - cv.mean.f1);
    }
    cv.stdev.accuracy = std::sqrt(acc2 / k);
    cv.stdev.f1 = std::sqrt(f12 / k);
    std::vector<double> aucs;
    for (const Metrics& m : cv.per_fold)
        if (m.auc) aucs.push_back(*m.auc);
    if (!aucs.empty()) {
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        double var = 0.0;
        for (double a : aucs) var += (a - mean) * (a - mean);
        cv.mean.auc = mean;
        cv.stdev.auc = std::sqrt(var / static_cast<double>(aucs.size()));
    }
}

// Per-fold feature source: either the cohort's stored vectors as-is, or a
// fresh autoencoder fitted on the training rows' volumes.
Cohort fold_features(const Cohort& cohort, const std::vector<int>& train_rows, bool refit,
                     EncoderConfig ae_cfg, std::uint64_t fold_seed) {
    if (!refit) return cohort;
    std::vector<std::vector<double>> rows;
    for (int r : train_rows) {
        const PatientRecord& p = cohort.patients[static_cast<std::size_t>(r)];
        require(p.volume.has_value(), ErrorCode::MissingVolume,
                "patient '" + p.id + "' has no volume to encode");
        rows.push_back(flatten_input(*p.volume));
    }
    Matrix X(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), X.row(static_cast<int>(i)).begin());
    ae_cfg.seed = fold_seed;
    AeTrainResult ae = train_autoencoder(X, ae_cfg);
    return attach_features(cohort, ae.model);
}

bool needs_refit(const Cohort& cohort, const std::optional<EncoderConfig>& encoder) {
    if (encoder) return true;
    return std::any_of(cohort.patients.begin(), cohort.patients.end(),
                       [](const PatientRecord& p) { return !p.feature_vector.has_value(); });
}

std::string format_pair(double mean, double std) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", mean, std);
    return buf;
}

// pad to a visible width; the ± glyph is two bytes but one column
std::string pad_cell(std::string cell, std::size_t width) {
    std::size_t visible = cell.size();
    for (std::size_t i = 0; i + 1 < cell.size(); ++i)
        if (static_cast<unsigned char>(cell[i]) == 0xC2 &&
            static_cast<unsigned char>(cell[i + 1]) == 0xB1)
            --visible;
    while (visible < width) {
        cell.push_back(' ');
        ++visible;
    }
    return cell;
}

}  // namespace

namespace {

// Per-fold cohorts with features in place (fitted on each fold's train rows);
// shared between ablation variants, which differ only in the edge set.
std::vector<Cohort> prefit_fold_cohorts(const Cohort& cohort,
                                        const std::vector<FoldSplit>& folds, bool refit,
                                        const EncoderConfig& ae_cfg, std::uint64_t ae_base) {
    std::vector<Cohort> out;
    out.reserve(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f)
        out.push_back(fold_features(cohort, folds[f].train, refit, ae_cfg,
                                    derive_seed(ae_base, static_cast<std::uint64_t>(f))));
    return out;
}

CvDetail run_cv_impl(const Cohort& cohort, const GraphConfig& graph_cfg,
                     const TrainConfig& train_cfg, int k, int n_mc, std::uint64_t seed,
                     const std::optional<EncoderConfig>& encoder,
                     const std::vector<Cohort>* prefit) {
    validate_cohort(cohort);
    const bool refit = needs_refit(cohort, encoder);
    const EncoderConfig ae_cfg = encoder.value_or(EncoderConfig{});
    const std::vector<int> labels = label_indices(cohort);
    const auto folds = stratified_kfold(cohort, k, derive_seed(seed, "folds"));
    const std::uint64_t ae_base = derive_seed(seed, "fold-ae");
    const std::uint64_t train_base = derive_seed(seed, "fold-train");
    const std::uint64_t mc_base = derive_seed(seed, "fold-mc");

    CvDetail detail;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        Cohort fold_cohort =
            prefit ? (*prefit)[f]
                   : fold_features(cohort, folds[f].train, refit, ae_cfg,
                                   derive_seed(ae_base, static_cast<std::uint64_t>(f)));
        PatientGraph graph = build_graph(fold_cohort, graph_cfg);
        std::vector<bool> mask(cohort.patients.size(), false);
        for (int r : folds[f].train) mask[static_cast<std::size_t>(r)] = true;
        TrainConfig fold_cfg = train_cfg;
        fold_cfg.seed = derive_seed(train_base, static_cast<std::uint64_t>(f));
        GcnTrainResult trained = train(graph, labels, mask, fold_cfg);
        std::vector<McPrediction> preds =
            mc_predict(trained.model, graph, folds[f].test, n_mc,
                       derive_seed(mc_base, static_cast<std::uint64_t>(f)));

        std::vector<int> pred, truth;
        std::vector<double> scores;
        for (const McPrediction& p : preds) {
            pred.push_back(p.final_label);
            truth.push_back(labels[static_cast<std::size_t>(p.node)]);
            scores.push_back(p.mean_prob[1]);
        }
        detail.result.per_fold.push_back(metrics_from(pred, truth, scores));
        detail.folds.push_back(FoldDetail{folds[f], std::move(preds)});
    }
    aggregate(detail.result);
    return detail;
}

}  // namespace

CvDetail run_pipeline_cv_detailed(const Cohort& cohort, const GraphConfig& graph_cfg,
                                  const TrainConfig& train_cfg, int k, int n_mc,
                                  std::uint64_t seed, const std::optional<EncoderConfig>& encoder) {
    return run_cv_impl(cohort, graph_cfg, train_cfg, k, n_mc, seed, encoder, nullptr);
}

CvResult run_pipeline_cv(const Cohort& cohort, const GraphConfig& graph_cfg,
                         const TrainConfig& train_cfg, int k, int n_mc, std::uint64_t seed,
                         const std::optional<EncoderConfig>& encoder) {
    return run_pipeline_cv_detailed(cohort, graph_cfg, train_cfg, k, n_mc, seed, encoder).result;
}

std::vector<std::pair<std::string, CvResult>> run_ablations(
    const Cohort& cohort, const GraphConfig& graph_cfg, const TrainConfig& train_cfg, int k,
    int n_mc, std::uint64_t seed, const std::optional<EncoderConfig>& encoder) {
    std::vector<std::pair<std::string, GraphConfig>> variants;
    variants.emplace_back("full", graph_cfg);
    for (const std::string& attr : graph_cfg.edge_attrs) {
        GraphConfig cfg = graph_cfg;
        cfg.edge_attrs.erase(std::remove(cfg.edge_attrs.begin(), cfg.edge_attrs.end(), attr),
                             cfg.edge_attrs.end());
        variants.emplace_back("wo_" + attr, cfg);
    }
    GraphConfig none = graph_cfg;
    none.edge_attrs.clear();
    variants.emplace_back("wo_nonimaging", none);

    validate_cohort(cohort);
    const bool refit = needs_refit(cohort, encoder);
    const EncoderConfig ae_cfg = encoder.value_or(EncoderConfig{});
    const auto folds = stratified_kfold(cohort, k, derive_seed(seed, "folds"));
    const std::vector<Cohort> prefit =
        prefit_fold_cohorts(cohort, folds, refit, ae_cfg, derive_seed(seed, "fold-ae"));

    std::vector<std::pair<std::string, CvResult>> results;
    for (const auto& [name, cfg] : variants)
        results.emplace_back(
            name, run_cv_impl(cohort, cfg, train_cfg, k, n_mc, seed, encoder, &prefit).result);
    return results;
}

CvResult run_rf_cv(const Cohort& cohort, const RfConfig& rf_cfg, int k, std::uint64_t seed,
                   int pca_components, const std::optional<EncoderConfig>& encoder) {
    validate_cohort(cohort);
    const bool refit = needs_refit(cohort, encoder);
    const EncoderConfig ae_cfg = encoder.value_or(EncoderConfig{});
    const std::vector<int> labels = label_indices(cohort);
    const auto folds = stratified_kfold(cohort, k, derive_seed(seed, "folds"));
    const std::uint64_t ae_base = derive_seed(seed, "fold-ae");
    const std::uint64_t rf_base = derive_seed(seed, "fold-rf");

    CvResult cv;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        Cohort fold_cohort = fold_features(cohort, folds[f].train, refit, ae_cfg,
                                           derive_seed(ae_base, static_cast<std::uint64_t>(f)));
        const int d = static_cast<int>(fold_cohort.patients.front().feature_vector->size());
        Matrix train_X(static_cast<int>(folds[f].train.size()), d);
        for (std::size_t i = 0; i < folds[f].train.size(); ++i) {
            const auto& fv =
                *fold_cohort.patients[static_cast<std::size_t>(folds[f].train[i])].feature_vector;
            std::copy(fv.begin(), fv.end(), train_X.row(static_cast<int>(i)).begin());
        }
        PcaResult basis = pca_reduce(train_X, std::min(pca_components, d));

        auto rows_for = [&](const std::vector<int>& idx) {
            Matrix raw(static_cast<int>(idx.size()), d);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const auto& fv =
                    *fold_cohort.patients[static_cast<std::size_t>(idx[i])].feature_vector;
                std::copy(fv.begin(), fv.end(), raw.row(static_cast<int>(i)).begin());
            }
            Matrix reduced = pca_transform(basis, raw);
            Matrix full(reduced.rows, reduced.cols + static_cast<int>(cohort.attr_names.size()));
            for (int i = 0; i < reduced.rows; ++i) {
                std::copy(reduced.row(i).begin(), reduced.row(i).end(), full.row(i).begin());
                for (std::size_t a = 0; a < cohort.attr_names.size(); ++a)
                    full(i, reduced.cols + static_cast<int>(a)) = static_cast<double>(
                        fold_cohort.patients[static_cast<std::size_t>(idx[i])].binary_attrs.at(
                            cohort.attr_names[a]));
            }
            return full;
        };

        std::vector<int> train_y, test_y;
        for (int r : folds[f].train) train_y.push_back(labels[static_cast<std::size_t>(r)]);
        for (int r : folds[f].test) test_y.push_back(labels[static_cast<std::size_t>(r)]);
        RfConfig fold_rf = rf_cfg;
        fold_rf.seed = derive_seed(rf_base, static_cast<std::uint64_t>(f));
        RandomForest forest = train_random_forest(rows_for(folds[f].train), train_y, fold_rf);
        RfPrediction pred = rf_predict(forest, rows_for(folds[f].test));
        cv.per_fold.push_back(metrics_from(pred.labels, test_y, pred.vote_fraction));
    }
    aggregate(cv);
    return cv;
}

std::string format_results_table(const std::vector<std::pair<std::string, CvResult>>& rows) {
    std::size_t name_width = 6;
    for (const auto& [name, cv] : rows) name_width = std::max(name_width, name.size());
    std::ostringstream out;
    out << pad_cell("Method", name_width) << " | " << pad_cell("Accuracy (std)", 14) << " | "
        << pad_cell("F1 (std)", 14) << " | " << pad_cell("AUC (std)", 14) << '\n';
    out << std::string(name_width, '-') << "-|-" << std::string(14, '-') << "-|-"
        << std::string(14, '-') << "-|-" << std::string(14, '-') << '\n';
    for (const auto& [name, cv] : rows) {
        std::string auc_cell = cv.mean.auc && cv.stdev.auc
                                   ? format_pair(*cv.mean.auc, *cv.stdev.auc)
                                   : std::string("n/a");
        out << pad_cell(name, name_width) << " | "
            << pad_cell(format_pair(cv.mean.accuracy, cv.stdev.accuracy), 14) << " | "
            << pad_cell(format_pair(cv.mean.f1, cv.stdev.f1), 14) << " | "
            << pad_cell(auc_cell, 14) << '\n';
    }
    return out.str();
}

void save_results_json(const std::vector<std::pair<std::string, CvResult>>& rows,
                       const std::filesystem::path& path) {
    using json = nlohmann::ordered_json;
    auto metrics_json = [](const Metrics& m) {
        json j;
        j["accuracy"] = m.accuracy;
        j["f1"] = m.f1;
        j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
        return j;
    };
    json root;
    json methods = json::array();
    for (const auto& [name, cv] : rows) {
        json j;
        j["name"] = name;
        json folds = json::array();
        for (const Metrics& m : cv.per_fold) folds.push_back(metrics_json(m));
        j["per_fold"] = std::move(folds);
        j["mean"] = metrics_json(cv.mean);
        j["std"] = metrics_json(cv.stdev);
        methods.push_back(std::move(j));
    }
    root["methods"] = std::move(methods);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << root.dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

void save_fold_csv(const std::vector<std::pair<std::string, CvResult>>& rows,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << "method,fold,accuracy,f1,auc\n";
    char buf[40];
    auto num = [&buf](double v) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    for (const auto& [name, cv] : rows)
        for (std::size_t f = 0; f < cv.per_fold.size(); ++f) {
            const Metrics& m = cv.per_fold[f];
            out << name << ',' << f << ',' << num(m.accuracy) << ',' << num(m.f1) << ','
                << (m.auc ? num(*m.auc) : "") << '\n';
        }
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace tacegcn
