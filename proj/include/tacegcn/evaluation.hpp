#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tacegcn/autoencoder.hpp"
#include "tacegcn/dataset.hpp"
#include "tacegcn/gcn.hpp"
#include "tacegcn/graph.hpp"
#include "tacegcn/metrics.hpp"
#include "tacegcn/random_forest.hpp"
#include "tacegcn/uncertainty.hpp"

namespace tacegcn {

struct CvResult {
    std::vector<Metrics> per_fold;
    Metrics mean;
    Metrics stdev;  // population std over folds
};

struct FoldDetail {
    FoldSplit split;
    std::vector<McPrediction> preds;  // MC predictions on the fold's test nodes
};

struct CvDetail {
    CvResult result;
    std::vector<FoldDetail> folds;
};

// Stratified k-fold over labelled patients. Each fold builds the graph on the
// whole cohort (transductive), masks the loss to train nodes, and scores the
// test nodes with MC dropout (AUC from mean responder probability). When
// `encoder` is set — or some patient lacks a feature vector — a fresh
// autoencoder is fitted per fold on the training rows' volumes only.
CvResult run_pipeline_cv(const Cohort& cohort, const GraphConfig& graph_cfg,
                         const TrainConfig& train_cfg, int k = 10, int n_mc = 100,
                         std::uint64_t seed = 0,
                         const std::optional<EncoderConfig>& encoder = std::nullopt);

CvDetail run_pipeline_cv_detailed(const Cohort& cohort, const GraphConfig& graph_cfg,
                                  const TrainConfig& train_cfg, int k = 10, int n_mc = 100,
                                  std::uint64_t seed = 0,
                                  const std::optional<EncoderConfig>& encoder = std::nullopt);

// Variants: "full", "wo_<attr>" for each edge attribute, "wo_nonimaging".
// All variants share fold splits and per-fold seeds.
std::vector<std::pair<std::string, CvResult>> run_ablations(
    const Cohort& cohort, const GraphConfig& graph_cfg, const TrainConfig& train_cfg, int k = 10,
    int n_mc = 100, std::uint64_t seed = 0,
    const std::optional<EncoderConfig>& encoder = std::nullopt);

// Baseline: per-fold PCA of the node features (train rows only) down to
// `pca_components`, binary attributes appended as extra columns, then a
// random forest; AUC from responder vote fractions.
CvResult run_rf_cv(const Cohort& cohort, const RfConfig& rf_cfg, int k = 10,
                   std::uint64_t seed = 0, int pca_components = 16,
                   const std::optional<EncoderConfig>& encoder = std::nullopt);

// "Method | Accuracy (std) | F1 (std) | AUC (std)" rows like "0.71 ± 0.07".
std::string format_results_table(const std::vector<std::pair<std::string, CvResult>>& rows);

void save_results_json(const std::vector<std::pair<std::string, CvResult>>& rows,
                       const std::filesystem::path& path);
void save_fold_csv(const std::vector<std::pair<std::string, CvResult>>& rows,
                   const std::filesystem::path& path);

}  // namespace tacegcn
