#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tacegcn/gcn.hpp"
#include "tacegcn/metrics.hpp"

namespace tacegcn {

struct McPrediction {
    int node = 0;
    std::array<int, 2> votes{0, 0};      // sums to n_samples
    int final_label = 0;                 // majority vote
    double confidence = 0.0;             // votes[final_label] / n_samples
    std::array<double, 2> mean_prob{0.0, 0.0};
};

// n_samples stochastic passes with per-pass derived seeds; each pass votes via
// argmax per node. Vote ties go to the class with larger mean probability,
// then to NonResponder.
std::vector<McPrediction> mc_predict(const GcnModel& model, const PatientGraph& graph,
                                     const std::vector<int>& nodes, int n_samples,
                                     std::uint64_t seed);

struct TriageReport {
    double threshold = 0.0;
    std::vector<int> retained;  // node ids with confidence >= threshold
    std::vector<int> flagged;   // the rest
    Metrics metrics_all;
    std::optional<Metrics> metrics_retained;  // absent when nothing is retained
};

// labels holds the true label per node index (entries for evaluated nodes
// must be 0/1).
TriageReport triage(const std::vector<McPrediction>& preds, const std::vector<int>& labels,
                    double threshold);

std::string format_triage_table(const std::vector<McPrediction>& preds,
                                const std::vector<std::string>& node_ids,
                                const std::vector<int>& labels, double threshold);

void save_triage_report(const std::vector<TriageReport>& reports,
                        const std::vector<McPrediction>& preds,
                        const std::vector<std::string>& node_ids, const std::vector<int>& labels,
                        const std::filesystem::path& path);

}  // namespace tacegcn
