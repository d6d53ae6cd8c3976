#pragma once

#include <array>
#include <vector>

#include "tacegcn/common.hpp"

namespace tacegcn {

// One qEASL estimation attempt on a contrast scan: the per-voxel tumor
// intensities plus the three parenchymal ROI means that define the
// enhancement threshold.
struct QeaslMeasurement {
    std::vector<double> tumor_intensities;  // a.u., one entry per tumor voxel
    std::array<double, 3> roi_means{};      // a.u., parenchymal reference ROIs
    double voxel_volume = 0.0;              // cm^3 per voxel
};

struct QeaslEstimate {
    double enhancing_volume = 0.0;  // cm^3
    double total_volume = 0.0;      // cm^3
    double fraction = 0.0;          // enhancing / total, in [0, 1]
};

// Strictly-greater-than-65% reduction separates responders from
// non-responders.
inline constexpr double kResponderReductionThreshold = 0.65;

// Threshold a measurement at mean(roi_means) + k_sigma * std(roi_means)
// (population std). A voxel counts as enhancing iff its intensity is
// strictly above the threshold.
QeaslEstimate measure_qeasl(const QeaslMeasurement& m, double k_sigma = 0.0);

// Arithmetic mean of the enhancing volumes of repeated estimations.
double average_qeasl(const std::vector<QeaslEstimate>& estimates);

// Responder iff (baseline - followup) / baseline > 0.65, strictly.
Label responder_label(double baseline_cm3, double followup_cm3);

}  // namespace tacegcn
