#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tacegcn/common.hpp"
#include "tacegcn/qeasl.hpp"

namespace tacegcn {

// Paired liver/tumor intensity grids, row-major (z, y, x).
struct Volume {
    std::array<int, 3> shape{0, 0, 0};  // D, H, W
    std::vector<double> liver;
    std::vector<double> tumor;
    double voxel_volume = 0.0;  // cm^3 per voxel

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
    }
};

struct PatientRecord {
    std::string id;
    std::optional<Volume> volume;
    std::optional<std::vector<double>> feature_vector;
    std::map<std::string, int> binary_attrs;
    std::optional<std::vector<QeaslMeasurement>> qeasl_baseline;
    std::optional<std::vector<QeaslMeasurement>> qeasl_followup;
    std::optional<Label> label;
};

// Node index in every downstream matrix equals the patient's position here.
struct Cohort {
    std::vector<PatientRecord> patients;
    std::vector<std::string> attr_names;

    int size() const { return static_cast<int>(patients.size()); }
};

struct SynthConfig {
    int n_patients = 120;
    std::array<int, 3> volume_shape{6, 6, 6};
    int latent_dim_true = 8;
    double class_balance = 0.5;  // P(Responder)
    std::map<std::string, double> attr_informativeness{{"Cirrhosis", 0.8}, {"Sorafenib", 0.8}};
    double noise_sigma = 0.5;
    std::uint64_t seed = 0;
    // Class separation of the latent Gaussians, in units of latent std.
    double class_separation = 2.0;
    // When set, follow-up reductions are drawn around the 65% boundary
    // instead of avoiding the [0.60, 0.70] band; labels are still derived
    // from the realized measurements.
    bool boundary_cases = false;
};

struct FoldSplit {
    std::vector<int> train;
    std::vector<int> test;
};

// Throws MalformedRecord (identifying patient and field) on any invariant
// violation: duplicate ids, non-binary attributes, missing attributes,
// liver/tumor shape mismatch, or a stored label inconsistent with the
// patient's qEASL measurements.
void validate_cohort(const Cohort& cohort);

// JSON by default; a flat CSV variant (id, attrs, feature columns, label)
// when the path ends in .csv.
Cohort load_cohort(const std::filesystem::path& path);
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

Cohort generate_synthetic(const SynthConfig& cfg);

// Stratified k-fold over the labelled indices. Test folds partition the
// labelled nodes with per-fold class counts within one of each other.
std::vector<FoldSplit> stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed);

// Per-node class indices, -1 for unlabelled patients.
std::vector<int> label_indices(const Cohort& cohort);
std::vector<int> labelled_nodes(const Cohort& cohort);

}  // namespace tacegcn
