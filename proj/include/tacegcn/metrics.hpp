#pragma once

#include <optional>
#include <vector>

namespace tacegcn {

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
    std::optional<double> auc;  // absent when only one class is present
};

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// Binary F1 with the responder class (1) positive by default.
double f1_binary(const std::vector<int>& pred, const std::vector<int>& truth, int positive = 1);

// Mann-Whitney AUC: over all (positive, negative) pairs, credit 1 when the
// positive scores higher, 0.5 on ties. Computed via midranks.
double auc(const std::vector<double>& scores, const std::vector<int>& truth);

}  // namespace tacegcn
