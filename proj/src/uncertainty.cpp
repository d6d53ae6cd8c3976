#include "tacegcn/uncertainty.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

Metrics compute_metrics(const std::vector<McPrediction>& preds, const std::vector<int>& labels,
                        const std::vector<int>& subset) {
    std::vector<int> pred, truth;
    std::vector<double> scores;
    for (int node : subset) {
        auto it = std::find_if(preds.begin(), preds.end(),
                               [&](const McPrediction& p) { return p.node == node; });
        pred.push_back(it->final_label);
        truth.push_back(labels[static_cast<std::size_t>(node)]);
        scores.push_back(it->mean_prob[1]);
    }
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

}  // namespace

std::vector<McPrediction> mc_predict(const GcnModel& model, const PatientGraph& graph,
                                     const std::vector<int>& nodes, int n_samples,
                                     std::uint64_t seed) {
    require(n_samples >= 1, ErrorCode::InvalidSampleCount, "n_samples must be >= 1");
    const int n = graph.features.rows;
    for (int node : nodes)
        require(node >= 0 && node < n, ErrorCode::InvalidConfig,
                "node " + std::to_string(node) + " out of range");

    std::vector<McPrediction> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) out[i].node = nodes[i];

    const std::uint64_t pass_base = derive_seed(seed, "mc-pass");
    for (int pass = 0; pass < n_samples; ++pass) {
        Matrix probs = predict(model, graph,
                               stochastic_mode(derive_seed(pass_base,
                                                           static_cast<std::uint64_t>(pass))));
        std::vector<int> hard = hard_labels(probs);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            int node = nodes[i];
            ++out[i].votes[static_cast<std::size_t>(hard[static_cast<std::size_t>(node)])];
            out[i].mean_prob[0] += probs(node, 0);
            out[i].mean_prob[1] += probs(node, 1);
        }
    }
    for (McPrediction& p : out) {
        p.mean_prob[0] /= static_cast<double>(n_samples);
        p.mean_prob[1] /= static_cast<double>(n_samples);
        if (p.votes[1] > p.votes[0])
            p.final_label = 1;
        else if (p.votes[0] > p.votes[1])
            p.final_label = 0;
        else
            p.final_label = p.mean_prob[1] > p.mean_prob[0] ? 1 : 0;
        p.confidence = static_cast<double>(p.votes[static_cast<std::size_t>(p.final_label)]) /
                       static_cast<double>(n_samples);
    }
    return out;
}

TriageReport triage(const std::vector<McPrediction>& preds, const std::vector<int>& labels,
                    double threshold) {
    require(!preds.empty(), ErrorCode::EmptyPredictions, "no predictions to triage");
    require(threshold > 0.5 && threshold <= 1.0, ErrorCode::InvalidConfig,
            "threshold must lie in (0.5, 1.0]");
    for (const McPrediction& p : preds) {
        require(p.node >= 0 && p.node < static_cast<int>(labels.size()), ErrorCode::LengthMismatch,
                "prediction node " + std::to_string(p.node) + " outside label vector");
        int y = labels[static_cast<std::size_t>(p.node)];
        require(y == 0 || y == 1, ErrorCode::MalformedRecord,
                "node " + std::to_string(p.node) + " has no true label");
    }
    TriageReport report;
    report.threshold = threshold;
    std::vector<int> all;
    for (const McPrediction& p : preds) {
        all.push_back(p.node);
        if (p.confidence >= threshold)
            report.retained.push_back(p.node);
        else
            report.flagged.push_back(p.node);
    }
    report.metrics_all = compute_metrics(preds, labels, all);
    if (!report.retained.empty()) report.metrics_retained = compute_metrics(preds, labels, report.retained);
    return report;
}

std::string format_triage_table(const std::vector<McPrediction>& preds,
                                const std::vector<std::string>& node_ids,
                                const std::vector<int>& labels, double threshold) {
    std::size_t id_width = 4;
    for (const McPrediction& p : preds)
        id_width = std::max(id_width, node_ids[static_cast<std::size_t>(p.node)].size());
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-*s  %-5s  %10s  %-4s  %s\n", static_cast<int>(id_width),
                  "node", "pred", "confidence", "true", "retained");
    out << line;
    for (const McPrediction& p : preds) {
        int y = labels[static_cast<std::size_t>(p.node)];
        std::snprintf(line, sizeof(line), "%-*s  %-5s  %10.4f  %-4s  %s\n",
                      static_cast<int>(id_width),
                      node_ids[static_cast<std::size_t>(p.node)].c_str(),
                      label_name(static_cast<Label>(p.final_label)), p.confidence,
                      y == 0 || y == 1 ? label_name(static_cast<Label>(y)) : "?",
                      p.confidence >= threshold ? "yes" : "no");
        out << line;
    }
    return out.str();
}

void save_triage_report(const std::vector<TriageReport>& reports,
                        const std::vector<McPrediction>& preds,
                        const std::vector<std::string>& node_ids, const std::vector<int>& labels,
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
    json nodes = json::array();
    for (const McPrediction& p : preds) {
        json j;
        j["node"] = node_ids[static_cast<std::size_t>(p.node)];
        j["votes"] = {p.votes[0], p.votes[1]};
        j["final"] = label_name(static_cast<Label>(p.final_label));
        j["confidence"] = p.confidence;
        j["mean_prob"] = {p.mean_prob[0], p.mean_prob[1]};
        int y = labels[static_cast<std::size_t>(p.node)];
        j["true"] = y == 0 || y == 1 ? json(label_name(static_cast<Label>(y))) : json(nullptr);
        nodes.push_back(std::move(j));
    }
    root["predictions"] = std::move(nodes);
    json reports_json = json::array();
    for (const TriageReport& r : reports) {
        json j;
        j["threshold"] = r.threshold;
        json retained = json::array(), flagged = json::array();
        for (int node : r.retained) retained.push_back(node_ids[static_cast<std::size_t>(node)]);
        for (int node : r.flagged) flagged.push_back(node_ids[static_cast<std::size_t>(node)]);
        j["retained"] = std::move(retained);
        j["flagged"] = std::move(flagged);
        j["metrics_all"] = metrics_json(r.metrics_all);
        j["metrics_retained"] = r.metrics_retained ? metrics_json(*r.metrics_retained) : json(nullptr);
        reports_json.push_back(std::move(j));
    }
    root["reports"] = std::move(reports_json);
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << root.dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace tacegcn
