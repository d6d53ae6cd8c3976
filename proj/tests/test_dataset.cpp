#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "tacegcn/dataset.hpp"
#include "tacegcn/rng.hpp"

using namespace tacegcn;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

float f32(double v) { return static_cast<float>(v); }

// random but always-valid cohort; volume intensities pre-quantized to f32 so
// the base64 payload round-trips bit-exactly
Cohort random_cohort(std::mt19937_64& gen) {
    Cohort c;
    if (uniform01(gen) < 0.7) c.attr_names = {"Cirrhosis", "Sorafenib"};
    int n = 2 + static_cast<int>(uniform_int(gen, 4));
    for (int i = 0; i < n; ++i) {
        PatientRecord p;
        p.id = "pt" + std::to_string(i);
        for (const std::string& a : c.attr_names)
            p.binary_attrs[a] = static_cast<int>(uniform_int(gen, 2));
        if (uniform01(gen) < 0.5) {
            Volume v;
            v.shape = {2, 2, 1};
            v.voxel_volume = 0.125;
            for (int r = 0; r < 4; ++r) {
                v.liver.push_back(f32(uniform_range(gen, -3.0, 3.0)));
                v.tumor.push_back(f32(uniform_range(gen, -3.0, 3.0)));
            }
            p.volume = std::move(v);
        } else {
            std::vector<double> feat(3);
            for (double& x : feat) x = uniform_range(gen, -1.0, 1.0);
            p.feature_vector = std::move(feat);
        }
        if (uniform01(gen) < 0.5) {
            auto triplet = [&](double level) {
                std::vector<QeaslMeasurement> ms(3);
                for (QeaslMeasurement& m : ms) {
                    m.tumor_intensities.resize(20);
                    for (double& t : m.tumor_intensities) t = uniform_range(gen, 0.0, level);
                    m.roi_means = {40.0, 50.0, 60.0};
                    m.voxel_volume = 0.2;
                }
                return ms;
            };
            p.qeasl_baseline = triplet(100.0);
            p.qeasl_followup = triplet(uniform01(gen) < 0.5 ? 55.0 : 100.0);
            std::vector<QeaslEstimate> base, follow;
            for (const auto& m : *p.qeasl_baseline) base.push_back(measure_qeasl(m));
            for (const auto& m : *p.qeasl_followup) follow.push_back(measure_qeasl(m));
            double vb = average_qeasl(base);
            if (vb > 0.0) p.label = responder_label(vb, average_qeasl(follow));
        } else if (uniform01(gen) < 0.4) {
            p.label = static_cast<Label>(uniform_int(gen, 2));
        }
        c.patients.push_back(std::move(p));
    }
    return c;
}

bool same_cohort(const Cohort& a, const Cohort& b) {
    if (a.attr_names != b.attr_names) return false;
    if (a.patients.size() != b.patients.size()) return false;
    for (std::size_t i = 0; i < a.patients.size(); ++i) {
        const PatientRecord& p = a.patients[i];
        const PatientRecord& q = b.patients[i];
        if (p.id != q.id || p.binary_attrs != q.binary_attrs || p.label != q.label) return false;
        if (p.feature_vector != q.feature_vector) return false;
        if (p.volume.has_value() != q.volume.has_value()) return false;
        if (p.volume) {
            if (p.volume->shape != q.volume->shape) return false;
            if (p.volume->voxel_volume != q.volume->voxel_volume) return false;
            if (p.volume->liver != q.volume->liver || p.volume->tumor != q.volume->tumor)
                return false;
        }
        for (auto [lhs, rhs] : {std::pair{&p.qeasl_baseline, &q.qeasl_baseline},
                                std::pair{&p.qeasl_followup, &q.qeasl_followup}}) {
            if (lhs->has_value() != rhs->has_value()) return false;
            if (!lhs->has_value()) continue;
            if ((*lhs)->size() != (*rhs)->size()) return false;
            for (std::size_t m = 0; m < (*lhs)->size(); ++m) {
                if ((**lhs)[m].tumor_intensities != (**rhs)[m].tumor_intensities) return false;
                if ((**lhs)[m].roi_means != (**rhs)[m].roi_means) return false;
                if ((**lhs)[m].voxel_volume != (**rhs)[m].voxel_volume) return false;
            }
        }
    }
    return true;
}

// minimal feature-only cohort with the given labels (-1 = unlabelled)
Cohort labelled_cohort(const std::vector<int>& labels) {
    Cohort c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        PatientRecord p;
        p.id = "n" + std::to_string(i);
        p.feature_vector = std::vector<double>{static_cast<double>(i), 1.0};
        if (labels[i] >= 0) p.label = static_cast<Label>(labels[i]);
        c.patients.push_back(std::move(p));
    }
    return c;
}

}  // namespace

TEST_CASE("three-patient file round trips in order") {
    Cohort c;
    c.attr_names = {"Cirrhosis", "Sorafenib"};
    for (int i = 0; i < 3; ++i) {
        PatientRecord p;
        p.id = "case" + std::to_string(i);
        p.binary_attrs = {{"Cirrhosis", i % 2}, {"Sorafenib", 1}};
        p.feature_vector = std::vector<double>{0.25 * i, -1.5, 3.0};
        c.patients.push_back(std::move(p));
    }
    auto path = tmp_file("cohort3.json");
    save_cohort(c, path);
    Cohort back = load_cohort(path);
    REQUIRE(back.size() == 3);
    CHECK(back.patients[0].id == "case0");
    CHECK(back.patients[2].id == "case2");
    CHECK(same_cohort(c, back));
    std::filesystem::remove(path);
}

TEST_CASE("missing declared attribute is rejected with the field name") {
    auto path = tmp_file("cohort_missing_attr.json");
    std::ofstream out(path);
    out << R"({"attr_names":["Cirrhosis","Sorafenib"],"patients":[
        {"id":"a","binary_attrs":{"Cirrhosis":1,"Sorafenib":0},"feature_vector":[1,2]},
        {"id":"b","binary_attrs":{"Cirrhosis":0},"feature_vector":[3,4]}]})";
    out.close();
    try {
        load_cohort(path);
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRecord);
        CHECK(std::string(e.what()).find("Sorafenib") != std::string::npos);
        CHECK(std::string(e.what()).find("b") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("random cohorts round trip structurally") {
    std::mt19937_64 gen(82);
    auto path = tmp_file("cohort_rt.json");
    for (int trial = 0; trial < 100; ++trial) {
        Cohort c = random_cohort(gen);
        save_cohort(c, path);
        CHECK(same_cohort(c, load_cohort(path)));
    }
    std::filesystem::remove(path);
}

TEST_CASE("empty attribute list is a valid cohort") {
    Cohort c;
    PatientRecord p;
    p.id = "solo";
    p.feature_vector = std::vector<double>{1.0, 2.0};
    c.patients.push_back(std::move(p));
    auto path = tmp_file("cohort_noattr.json");
    save_cohort(c, path);
    Cohort back = load_cohort(path);
    CHECK(back.attr_names.empty());
    CHECK(back.size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("volumes are stored as base64 payloads") {
    Cohort c;
    PatientRecord p;
    p.id = "vol";
    Volume v;
    v.shape = {2, 1, 1};
    v.voxel_volume = 1.0;
    v.liver = {1.0, 2.0};
    v.tumor = {3.0, 4.0};
    p.volume = std::move(v);
    c.patients.push_back(std::move(p));
    auto path = tmp_file("cohort_vol.json");
    save_cohort(c, path);
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    const auto& jv = j["patients"][0]["volume"];
    CHECK(jv["liver"].is_string());
    CHECK(!jv["liver"].get<std::string>().empty());
    CHECK(jv["shape"] == nlohmann::json({2, 1, 1}));
    std::filesystem::remove(path);
}

TEST_CASE("csv holds feature-only cohorts and refuses volumes") {
    std::mt19937_64 gen(84);
    Cohort c;
    c.attr_names = {"Cirrhosis", "Sorafenib"};
    for (int i = 0; i < 5; ++i) {
        PatientRecord p;
        p.id = "csv" + std::to_string(i);
        p.binary_attrs = {{"Cirrhosis", i % 2}, {"Sorafenib", (i / 2) % 2}};
        p.feature_vector = std::vector<double>{uniform_range(gen, -2, 2), uniform_range(gen, -2, 2),
                                               uniform_range(gen, -2, 2)};
        if (i != 2) p.label = i % 2 ? Label::Responder : Label::NonResponder;
        c.patients.push_back(std::move(p));
    }
    auto path = tmp_file("cohort.csv");
    save_cohort(c, path);
    CHECK(same_cohort(c, load_cohort(path)));
    std::filesystem::remove(path);

    Cohort with_vol = c;
    Volume v;
    v.shape = {1, 1, 1};
    v.voxel_volume = 1.0;
    v.liver = {0.0};
    v.tumor = {0.0};
    with_vol.patients[0].volume = std::move(v);
    CHECK(oracles::error_code_of([&] { save_cohort(with_vol, tmp_file("bad.csv")); }) ==
          ErrorCode::InvalidConfig);
}

TEST_CASE("generate_synthetic is seed-deterministic") {
    SynthConfig cfg;
    cfg.n_patients = 20;
    cfg.volume_shape = {3, 3, 3};
    cfg.seed = 7;
    Cohort a = generate_synthetic(cfg);
    Cohort b = generate_synthetic(cfg);
    CHECK(same_cohort(a, b));
    cfg.seed = 8;
    CHECK(!same_cohort(a, generate_synthetic(cfg)));
}

TEST_CASE("fully informative attributes equal the label") {
    SynthConfig cfg;
    cfg.n_patients = 40;
    cfg.volume_shape = {2, 2, 2};
    cfg.attr_informativeness = {{"Cirrhosis", 1.0}, {"Sorafenib", 1.0}};
    cfg.seed = 11;
    Cohort c = generate_synthetic(cfg);
    for (const PatientRecord& p : c.patients) {
        REQUIRE(p.label.has_value());
        int bit = static_cast<int>(*p.label);
        CHECK(p.binary_attrs.at("Cirrhosis") == bit);
        CHECK(p.binary_attrs.at("Sorafenib") == bit);
    }
}

TEST_CASE("uninformative attributes agree about half the time") {
    SynthConfig cfg;
    cfg.n_patients = 1000;
    cfg.volume_shape = {1, 1, 1};
    cfg.attr_informativeness = {{"Cirrhosis", 0.5}};
    cfg.seed = 13;
    Cohort c = generate_synthetic(cfg);
    int agree = 0;
    for (const PatientRecord& p : c.patients)
        if (p.binary_attrs.at("Cirrhosis") == static_cast<int>(*p.label)) ++agree;
    double rate = static_cast<double>(agree) / 1000.0;
    CHECK(rate > 0.45);
    CHECK(rate < 0.55);
}

TEST_CASE("synthetic labels always match the realized measurements") {
    SynthConfig cfg;
    cfg.n_patients = 60;
    cfg.volume_shape = {2, 2, 2};
    cfg.seed = 17;
    Cohort c = generate_synthetic(cfg);
    validate_cohort(c);  // includes the label-vs-qEASL consistency check
    for (const PatientRecord& p : c.patients) {
        std::vector<QeaslEstimate> base, follow;
        for (const auto& m : *p.qeasl_baseline) base.push_back(measure_qeasl(m));
        for (const auto& m : *p.qeasl_followup) follow.push_back(measure_qeasl(m));
        double reduction = 1.0 - average_qeasl(follow) / average_qeasl(base);
        // default generation steers clear of the ambiguous band
        CHECK((reduction <= 0.60 || reduction >= 0.70));
        CHECK((*p.label == Label::Responder) == (reduction > 0.65));
    }
}

TEST_CASE("boundary mode samples the ambiguous band") {
    SynthConfig cfg;
    cfg.n_patients = 80;
    cfg.volume_shape = {2, 2, 2};
    cfg.boundary_cases = true;
    cfg.seed = 19;
    Cohort c = generate_synthetic(cfg);
    int in_band = 0;
    for (const PatientRecord& p : c.patients) {
        std::vector<QeaslEstimate> base, follow;
        for (const auto& m : *p.qeasl_baseline) base.push_back(measure_qeasl(m));
        for (const auto& m : *p.qeasl_followup) follow.push_back(measure_qeasl(m));
        double reduction = 1.0 - average_qeasl(follow) / average_qeasl(base);
        if (reduction > 0.60 && reduction < 0.70) ++in_band;
    }
    CHECK(in_band > 0);
}

TEST_CASE("generate_synthetic rejects invalid configuration") {
    SynthConfig cfg;
    cfg.n_patients = 2;
    CHECK(oracles::error_code_of([&] { generate_synthetic(cfg); }) == ErrorCode::InvalidConfig);
    cfg = SynthConfig{};
    cfg.attr_informativeness["Cirrhosis"] = 1.5;
    CHECK(oracles::error_code_of([&] { generate_synthetic(cfg); }) == ErrorCode::InvalidConfig);
    cfg = SynthConfig{};
    cfg.noise_sigma = -1.0;
    CHECK(oracles::error_code_of([&] { generate_synthetic(cfg); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("stratified folds on a balanced ten-patient cohort") {
    Cohort c = labelled_cohort({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    std::vector<FoldSplit> folds = stratified_kfold(c, 5, 3);
    REQUIRE(folds.size() == 5);
    for (const FoldSplit& f : folds) {
        REQUIRE(f.test.size() == 2);
        int ones = 0;
        for (int idx : f.test) ones += static_cast<int>(*c.patients[idx].label);
        CHECK(ones == 1);  // exactly one of each class
        CHECK(f.train.size() == 8);
    }
}

TEST_CASE("test folds partition the labelled nodes") {
    std::mt19937_64 gen(85);
    std::vector<int> labels(40);
    for (int i = 0; i < 40; ++i) labels[i] = i % 3 == 0 ? -1 : static_cast<int>(uniform_int(gen, 2));
    labels[0] = 0;
    labels[1] = 0;
    labels[2] = 1;
    labels[3] = 1;  // keep both classes populated
    Cohort c = labelled_cohort(labels);
    std::vector<FoldSplit> folds = stratified_kfold(c, 4, 9);

    std::vector<int> all = labelled_nodes(c);
    std::set<int> seen;
    for (const FoldSplit& f : folds) {
        for (int idx : f.test) CHECK(seen.insert(idx).second);  // pairwise disjoint
        // train = labelled \ test
        std::set<int> train(f.train.begin(), f.train.end());
        for (int idx : all) CHECK((train.count(idx) + static_cast<std::size_t>(std::count(
                                                          f.test.begin(), f.test.end(), idx))) == 1);
    }
    CHECK(seen == std::set<int>(all.begin(), all.end()));
}

TEST_CASE("ten folds over 83 patients come out sized 8 or 9") {
    std::vector<int> labels(83);
    for (int i = 0; i < 83; ++i) labels[i] = i < 40 ? 1 : 0;
    Cohort c = labelled_cohort(labels);
    std::vector<FoldSplit> folds = stratified_kfold(c, 10, 21);
    int nines = 0;
    for (const FoldSplit& f : folds) {
        CHECK((f.test.size() == 8 || f.test.size() == 9));
        if (f.test.size() == 9) ++nines;
    }
    CHECK(nines == 3);  // 83 = 7*8 + 3*9
}

TEST_CASE("stratified_kfold is deterministic and validates inputs") {
    Cohort c = labelled_cohort({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    auto a = stratified_kfold(c, 3, 5);
    auto b = stratified_kfold(c, 3, 5);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].test == b[i].test);
        CHECK(a[i].train == b[i].train);
    }
    CHECK(oracles::error_code_of([&] { stratified_kfold(c, 1, 0); }) == ErrorCode::InvalidConfig);
    Cohort small = labelled_cohort({0, 0, 0, 0, 1, 1});
    CHECK(oracles::error_code_of([&] { stratified_kfold(small, 3, 0); }) ==
          ErrorCode::TooFewSamples);
}

TEST_CASE("label helpers expose indices") {
    Cohort c = labelled_cohort({1, -1, 0});
    CHECK(label_indices(c) == std::vector<int>{1, -1, 0});
    CHECK(labelled_nodes(c) == std::vector<int>{0, 2});
}

TEST_CASE("validate_cohort catches duplicate ids and inconsistent labels") {
    Cohort c = labelled_cohort({0, 1});
    c.patients[1].id = c.patients[0].id;
    CHECK(oracles::error_code_of([&] { validate_cohort(c); }) == ErrorCode::MalformedRecord);

    // stored label contradicting the measurements
    Cohort d = labelled_cohort({-1});
    QeaslMeasurement m;
    m.tumor_intensities = {100.0, 100.0};
    m.roi_means = {50.0, 50.0, 50.0};
    m.voxel_volume = 1.0;
    d.patients[0].qeasl_baseline = std::vector<QeaslMeasurement>{m};
    m.tumor_intensities = {100.0, 10.0};  // 50% reduction: NonResponder
    d.patients[0].qeasl_followup = std::vector<QeaslMeasurement>{m};
    d.patients[0].label = Label::Responder;
    CHECK(oracles::error_code_of([&] { validate_cohort(d); }) == ErrorCode::MalformedRecord);
    d.patients[0].label = Label::NonResponder;
    validate_cohort(d);  // consistent version passes
}
