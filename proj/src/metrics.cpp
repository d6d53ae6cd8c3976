#include "tacegcn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "tacegcn/common.hpp"

namespace tacegcn {

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    require(pred.size() == truth.size() && !pred.empty(), ErrorCode::LengthMismatch,
            "need equal nonempty prediction/truth vectors");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1_binary(const std::vector<int>& pred, const std::vector<int>& truth, int positive) {
    require(pred.size() == truth.size() && !pred.empty(), ErrorCode::LengthMismatch,
            "need equal nonempty prediction/truth vectors");
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        bool p = pred[i] == positive, t = truth[i] == positive;
        if (p && t)
            ++tp;
        else if (p)
            ++fp;
        else if (t)
            ++fn;
    }
    double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double auc(const std::vector<double>& scores, const std::vector<int>& truth) {
    require(scores.size() == truth.size() && !scores.empty(), ErrorCode::LengthMismatch,
            "need equal nonempty score/truth vectors");
    std::size_t n_pos = 0, n_neg = 0;
    for (int t : truth) {
        if (t == 1)
            ++n_pos;
        else
            ++n_neg;
    }
    require(n_pos > 0 && n_neg > 0, ErrorCode::SingleClass, "AUC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (truth[order[k]] == 1) rank_sum_pos += midrank;
        i = j;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

}  // namespace tacegcn
