#include "tacegcn/qeasl.hpp"

#include <cmath>

namespace tacegcn {

QeaslEstimate measure_qeasl(const QeaslMeasurement& m, double k_sigma) {
    require(!m.tumor_intensities.empty(), ErrorCode::EmptyTumor, "measurement has no tumor voxels");
    require(m.voxel_volume > 0.0 && std::isfinite(m.voxel_volume), ErrorCode::InvalidConfig,
            "voxel_volume must be positive and finite");
    for (double v : m.roi_means)
        require(std::isfinite(v), ErrorCode::InvalidConfig, "non-finite ROI mean");

    double mean = (m.roi_means[0] + m.roi_means[1] + m.roi_means[2]) / 3.0;
    double var = 0.0;
    for (double v : m.roi_means) var += (v - mean) * (v - mean);
    var /= 3.0;
    double threshold = mean + k_sigma * std::sqrt(var);

    std::size_t enhancing = 0;
    for (double v : m.tumor_intensities) {
        require(std::isfinite(v), ErrorCode::InvalidConfig, "non-finite tumor intensity");
        if (v > threshold) ++enhancing;
    }

    QeaslEstimate e;
    e.enhancing_volume = static_cast<double>(enhancing) * m.voxel_volume;
    e.total_volume = static_cast<double>(m.tumor_intensities.size()) * m.voxel_volume;
    e.fraction = e.enhancing_volume / e.total_volume;
    return e;
}

double average_qeasl(const std::vector<QeaslEstimate>& estimates) {
    require(!estimates.empty(), ErrorCode::EmptyList, "no qEASL estimates to average");
    double sum = 0.0;
    for (const QeaslEstimate& e : estimates) sum += e.enhancing_volume;
    return sum / static_cast<double>(estimates.size());
}

Label responder_label(double baseline_cm3, double followup_cm3) {
    require(baseline_cm3 > 0.0 && std::isfinite(baseline_cm3), ErrorCode::NonPositiveBaseline,
            "baseline enhancing volume must be positive");
    require(followup_cm3 >= 0.0 && std::isfinite(followup_cm3), ErrorCode::InvalidConfig,
            "follow-up enhancing volume must be non-negative");
    double reduction = (baseline_cm3 - followup_cm3) / baseline_cm3;
    return reduction > kResponderReductionThreshold ? Label::Responder : Label::NonResponder;
}

}  // namespace tacegcn
