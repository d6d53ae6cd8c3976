#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tacegcn/dataset.hpp"
#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

float to_f32(double v) { return static_cast<float>(v); }

// One qEASL measurement whose enhancing-voxel count is exactly `count` out of
// `total`: the threshold sits at the ROI mean, enhancing voxels are pushed
// well above it and the rest well below, so float noise cannot flip a voxel.
QeaslMeasurement make_measurement(int count, int total, double voxel_volume, std::mt19937_64& gen) {
    QeaslMeasurement m;
    double centre = uniform_range(gen, 80.0, 120.0);
    double spread = uniform_range(gen, 1.0, 5.0);
    m.roi_means = {centre - spread, centre, centre + spread};
    m.voxel_volume = voxel_volume;
    m.tumor_intensities.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < count; ++i) m.tumor_intensities.push_back(centre + uniform_range(gen, 5.0, 50.0));
    for (int i = count; i < total; ++i)
        m.tumor_intensities.push_back(centre - uniform_range(gen, 5.0, 50.0));
    shuffle_in_place(m.tumor_intensities, gen);
    return m;
}

std::vector<QeaslMeasurement> make_triplet(int count, int total, double voxel_volume,
                                           std::mt19937_64& gen) {
    std::vector<QeaslMeasurement> list;
    for (int r = 0; r < 3; ++r) {
        int jitter = static_cast<int>(uniform_int(gen, 3)) - 1;
        int c = std::clamp(count + jitter, 0, total);
        list.push_back(make_measurement(c, total, voxel_volume, gen));
    }
    return list;
}

double averaged_volume(const std::vector<QeaslMeasurement>& list) {
    std::vector<QeaslEstimate> est;
    for (const QeaslMeasurement& m : list) est.push_back(measure_qeasl(m));
    return average_qeasl(est);
}

}  // namespace

Cohort generate_synthetic(const SynthConfig& cfg) {
    require(cfg.n_patients >= 4, ErrorCode::InvalidConfig, "need at least 4 patients");
    require(cfg.class_balance > 0.0 && cfg.class_balance < 1.0, ErrorCode::InvalidConfig,
            "class_balance must lie in (0,1)");
    require(cfg.latent_dim_true >= 1, ErrorCode::InvalidConfig, "latent_dim_true must be positive");
    require(cfg.noise_sigma >= 0.0, ErrorCode::InvalidConfig, "noise_sigma must be non-negative");
    require(cfg.class_separation >= 0.0, ErrorCode::InvalidConfig,
            "class_separation must be non-negative");
    for (int s : cfg.volume_shape)
        require(s >= 1, ErrorCode::InvalidConfig, "volume_shape entries must be positive");
    for (const auto& [name, q] : cfg.attr_informativeness)
        require(q >= 0.0 && q <= 1.0, ErrorCode::InvalidConfig,
                "informativeness of '" + name + "' must lie in [0,1]");

    Cohort cohort;
    for (const auto& [name, q] : cfg.attr_informativeness) cohort.attr_names.push_back(name);

    std::mt19937_64 gen_label(derive_seed(cfg.seed, "synth-labels"));
    std::mt19937_64 gen_attr(derive_seed(cfg.seed, "synth-attrs"));
    std::mt19937_64 gen_map(derive_seed(cfg.seed, "synth-mapping"));
    std::mt19937_64 gen_vol(derive_seed(cfg.seed, "synth-volumes"));
    std::mt19937_64 gen_qeasl(derive_seed(cfg.seed, "synth-qeasl"));

    const int k = cfg.latent_dim_true;
    const std::size_t voxels = static_cast<std::size_t>(cfg.volume_shape[0]) *
                               static_cast<std::size_t>(cfg.volume_shape[1]) *
                               static_cast<std::size_t>(cfg.volume_shape[2]);
    // shared linear map from latent space to the stacked liver+tumor grid
    std::vector<double> mapping(2 * voxels * static_cast<std::size_t>(k));
    const double map_scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (double& w : mapping) w = map_scale * normal01(gen_map);
    const double offset = cfg.class_separation / (2.0 * std::sqrt(static_cast<double>(k)));

    for (int i = 0; i < cfg.n_patients; ++i) {
        PatientRecord p;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%04d", i);
        p.id = buf;

        bool responder = uniform01(gen_label) < cfg.class_balance;

        // qEASL course: pick baseline burden and a target reduction, then keep
        // the realized averaged reduction away from the 0.65 boundary unless
        // boundary cases were explicitly requested.
        const int total = 120;
        double voxel_volume = uniform_range(gen_qeasl, 0.05, 0.25);
        int count_base = 30 + static_cast<int>(uniform_int(gen_qeasl, 61));  // 30..90
        double target = cfg.boundary_cases ? uniform_range(gen_qeasl, 0.55, 0.75)
                        : responder        ? uniform_range(gen_qeasl, 0.72, 0.97)
                                           : uniform_range(gen_qeasl, 0.05, 0.58);
        int count_follow =
            std::clamp(static_cast<int>(std::lround((1.0 - target) * count_base)), 0, total);
        auto baseline = make_triplet(count_base, total, voxel_volume, gen_qeasl);
        auto followup = make_triplet(count_follow, total, voxel_volume, gen_qeasl);
        double vol_base = averaged_volume(baseline);
        double vol_follow = averaged_volume(followup);
        if (!cfg.boundary_cases) {
            double reduction = (vol_base - vol_follow) / vol_base;
            int guard = 0;
            while (reduction > 0.60 && reduction < 0.70 && guard++ < 200) {
                count_follow = std::clamp(count_follow + (responder ? -1 : 1), 0, total);
                followup = make_triplet(count_follow, total, voxel_volume, gen_qeasl);
                vol_follow = averaged_volume(followup);
                reduction = (vol_base - vol_follow) / vol_base;
            }
        }
        p.qeasl_baseline = std::move(baseline);
        p.qeasl_followup = std::move(followup);
        Label label = responder_label(vol_base, vol_follow);
        p.label = label;
        int bit = static_cast<int>(label);

        for (const std::string& name : cohort.attr_names) {
            double q = cfg.attr_informativeness.at(name);
            p.binary_attrs[name] = uniform01(gen_attr) < q ? bit : 1 - bit;
        }

        std::vector<double> latent(static_cast<std::size_t>(k));
        double sign = bit == 1 ? 1.0 : -1.0;
        for (double& z : latent) z = sign * offset + normal01(gen_vol);
        Volume v;
        v.shape = cfg.volume_shape;
        v.voxel_volume = voxel_volume;
        v.liver.resize(voxels);
        v.tumor.resize(voxels);
        for (std::size_t r = 0; r < 2 * voxels; ++r) {
            double acc = 0.0;
            for (int c = 0; c < k; ++c)
                acc += mapping[r * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)] *
                       latent[static_cast<std::size_t>(c)];
            acc += cfg.noise_sigma * normal01(gen_vol);
            double stored = static_cast<double>(to_f32(acc));  // survives f32 payload round-trips
            if (r < voxels)
                v.liver[r] = stored;
            else
                v.tumor[r - voxels] = stored;
        }
        p.volume = std::move(v);
        cohort.patients.push_back(std::move(p));
    }
    validate_cohort(cohort);
    return cohort;
}

}  // namespace tacegcn
