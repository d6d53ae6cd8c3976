#include "tacegcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tacegcn/payload.hpp"
#include "tacegcn/rng.hpp"

namespace tacegcn {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& id, const std::string& what) {
    fail(ErrorCode::MalformedRecord, "patient '" + id + "': " + what);
}

void validate_measurements(const std::string& id, const char* field,
                           const std::vector<QeaslMeasurement>& list) {
    if (list.empty()) malformed(id, std::string(field) + " is empty");
    for (const QeaslMeasurement& m : list) {
        if (m.tumor_intensities.empty()) malformed(id, std::string(field) + ": no tumor intensities");
        if (!(m.voxel_volume > 0.0) || !std::isfinite(m.voxel_volume))
            malformed(id, std::string(field) + ": voxel_volume must be positive");
        for (double v : m.roi_means)
            if (!std::isfinite(v)) malformed(id, std::string(field) + ": non-finite roi mean");
        for (double v : m.tumor_intensities)
            if (!std::isfinite(v)) malformed(id, std::string(field) + ": non-finite intensity");
    }
}

double averaged_enhancing_volume(const std::vector<QeaslMeasurement>& list) {
    std::vector<QeaslEstimate> estimates;
    estimates.reserve(list.size());
    for (const QeaslMeasurement& m : list) estimates.push_back(measure_qeasl(m));
    return average_qeasl(estimates);
}

std::string shortest_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// JSON format

json measurement_to_json(const QeaslMeasurement& m) {
    json j;
    j["tumor_intensities"] = m.tumor_intensities;
    j["roi_means"] = {m.roi_means[0], m.roi_means[1], m.roi_means[2]};
    j["voxel_volume"] = m.voxel_volume;
    return j;
}

QeaslMeasurement measurement_from_json(const std::string& id, const json& j) {
    QeaslMeasurement m;
    if (!j.contains("tumor_intensities") || !j.contains("roi_means") || !j.contains("voxel_volume"))
        malformed(id, "qEASL measurement missing a required field");
    m.tumor_intensities = j.at("tumor_intensities").get<std::vector<double>>();
    auto roi = j.at("roi_means").get<std::vector<double>>();
    if (roi.size() != 3) malformed(id, "roi_means must hold exactly 3 values");
    std::copy(roi.begin(), roi.end(), m.roi_means.begin());
    m.voxel_volume = j.at("voxel_volume").get<double>();
    return m;
}

json cohort_to_json(const Cohort& cohort) {
    json root;
    root["attr_names"] = cohort.attr_names;
    json patients = json::array();
    for (const PatientRecord& p : cohort.patients) {
        json j;
        j["id"] = p.id;
        json attrs;
        for (const std::string& name : cohort.attr_names) attrs[name] = p.binary_attrs.at(name);
        j["binary_attrs"] = std::move(attrs);
        if (p.feature_vector) j["feature_vector"] = *p.feature_vector;
        if (p.volume) {
            const Volume& v = *p.volume;
            json jv;
            jv["shape"] = {v.shape[0], v.shape[1], v.shape[2]};
            jv["voxel_volume"] = v.voxel_volume;
            jv["liver"] = pack_f32(v.liver);
            jv["tumor"] = pack_f32(v.tumor);
            j["volume"] = std::move(jv);
        }
        if (p.qeasl_baseline) {
            json arr = json::array();
            for (const QeaslMeasurement& m : *p.qeasl_baseline) arr.push_back(measurement_to_json(m));
            j["qeasl_baseline"] = std::move(arr);
        }
        if (p.qeasl_followup) {
            json arr = json::array();
            for (const QeaslMeasurement& m : *p.qeasl_followup) arr.push_back(measurement_to_json(m));
            j["qeasl_followup"] = std::move(arr);
        }
        j["label"] = p.label ? json(label_name(*p.label)) : json(nullptr);
        patients.push_back(std::move(j));
    }
    root["patients"] = std::move(patients);
    return root;
}

Cohort cohort_from_json(const json& root) {
    Cohort cohort;
    if (!root.contains("attr_names") || !root.contains("patients"))
        fail(ErrorCode::MalformedRecord, "cohort file missing attr_names or patients");
    cohort.attr_names = root.at("attr_names").get<std::vector<std::string>>();
    for (const json& j : root.at("patients")) {
        PatientRecord p;
        if (!j.contains("id")) fail(ErrorCode::MalformedRecord, "patient without id");
        p.id = j.at("id").get<std::string>();
        if (!j.contains("binary_attrs")) malformed(p.id, "missing binary_attrs");
        for (auto it = j.at("binary_attrs").begin(); it != j.at("binary_attrs").end(); ++it) {
            if (!it.value().is_number_integer()) malformed(p.id, "attribute '" + it.key() + "' not integral");
            p.binary_attrs[it.key()] = it.value().get<int>();
        }
        if (j.contains("feature_vector") && !j.at("feature_vector").is_null())
            p.feature_vector = j.at("feature_vector").get<std::vector<double>>();
        if (j.contains("volume") && !j.at("volume").is_null()) {
            const json& jv = j.at("volume");
            if (!jv.contains("shape") || !jv.contains("voxel_volume") || !jv.contains("liver") ||
                !jv.contains("tumor"))
                malformed(p.id, "volume missing a required field");
            Volume v;
            auto shape = jv.at("shape").get<std::vector<int>>();
            if (shape.size() != 3) malformed(p.id, "volume shape must have 3 entries");
            std::copy(shape.begin(), shape.end(), v.shape.begin());
            v.voxel_volume = jv.at("voxel_volume").get<double>();
            v.liver = unpack_f32(jv.at("liver").get<std::string>());
            v.tumor = unpack_f32(jv.at("tumor").get<std::string>());
            p.volume = std::move(v);
        }
        if (j.contains("qeasl_baseline") && !j.at("qeasl_baseline").is_null()) {
            std::vector<QeaslMeasurement> list;
            for (const json& jm : j.at("qeasl_baseline")) list.push_back(measurement_from_json(p.id, jm));
            p.qeasl_baseline = std::move(list);
        }
        if (j.contains("qeasl_followup") && !j.at("qeasl_followup").is_null()) {
            std::vector<QeaslMeasurement> list;
            for (const json& jm : j.at("qeasl_followup")) list.push_back(measurement_from_json(p.id, jm));
            p.qeasl_followup = std::move(list);
        }
        if (j.contains("label") && !j.at("label").is_null()) {
            std::string s = j.at("label").get<std::string>();
            if (s == "R")
                p.label = Label::Responder;
            else if (s == "NR")
                p.label = Label::NonResponder;
            else
                malformed(p.id, "label must be \"R\", \"NR\" or null");
        }
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

// ---------------------------------------------------------------------------
// Flat CSV variant: id, one column per attribute, f0..f{d-1}, label.

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

bool is_feature_column(const std::string& name) {
    if (name.size() < 2 || name[0] != 'f') return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Cohort load_cohort_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    std::string header;
    require(static_cast<bool>(std::getline(in, header)), ErrorCode::MalformedRecord, "empty CSV file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    auto columns = split_csv_line(header);
    require(!columns.empty() && columns[0] == "id", ErrorCode::MalformedRecord,
            "CSV header must start with 'id'");

    Cohort cohort;
    std::vector<int> attr_cols, feature_cols;
    int label_col = -1;
    for (std::size_t c = 1; c < columns.size(); ++c) {
        if (columns[c] == "label")
            label_col = static_cast<int>(c);
        else if (is_feature_column(columns[c]))
            feature_cols.push_back(static_cast<int>(c));
        else {
            attr_cols.push_back(static_cast<int>(c));
            cohort.attr_names.push_back(columns[c]);
        }
    }

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        require(cells.size() == columns.size(), ErrorCode::MalformedRecord,
                "CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(columns.size()));
        PatientRecord p;
        p.id = cells[0];
        for (std::size_t a = 0; a < attr_cols.size(); ++a) {
            const std::string& cell = cells[attr_cols[a]];
            if (cell != "0" && cell != "1") malformed(p.id, "attribute '" + cohort.attr_names[a] + "' not 0/1");
            p.binary_attrs[cohort.attr_names[a]] = cell == "1" ? 1 : 0;
        }
        if (!feature_cols.empty()) {
            std::vector<double> fv;
            fv.reserve(feature_cols.size());
            for (int c : feature_cols) {
                const std::string& cell = cells[c];
                double value = 0.0;
                auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
                    malformed(p.id, "feature cell '" + cell + "' is not a number");
                fv.push_back(value);
            }
            p.feature_vector = std::move(fv);
        }
        if (label_col >= 0) {
            const std::string& cell = cells[label_col];
            if (cell == "R")
                p.label = Label::Responder;
            else if (cell == "NR")
                p.label = Label::NonResponder;
            else if (!cell.empty())
                malformed(p.id, "label cell must be R, NR or empty");
        }
        cohort.patients.push_back(std::move(p));
    }
    return cohort;
}

void save_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
    int feature_dim = -1;
    for (const PatientRecord& p : cohort.patients) {
        require(!p.volume && !p.qeasl_baseline && !p.qeasl_followup, ErrorCode::InvalidConfig,
                "CSV cohort format holds only attributes, feature vectors and labels; use JSON");
        require(p.feature_vector.has_value(), ErrorCode::MissingFeatureVector,
                "patient '" + p.id + "' lacks a feature vector");
        int d = static_cast<int>(p.feature_vector->size());
        if (feature_dim < 0) feature_dim = d;
        require(d == feature_dim, ErrorCode::DimMismatch,
                "patient '" + p.id + "' feature length differs from cohort");
    }
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << "id";
    for (const std::string& a : cohort.attr_names) {
        require(a.find(',') == std::string::npos, ErrorCode::InvalidConfig,
                "attribute name '" + a + "' cannot be stored in CSV");
        out << ',' << a;
    }
    for (int f = 0; f < std::max(feature_dim, 0); ++f) out << ",f" << f;
    out << ",label\n";
    for (const PatientRecord& p : cohort.patients) {
        out << p.id;
        for (const std::string& a : cohort.attr_names) out << ',' << p.binary_attrs.at(a);
        for (double v : *p.feature_vector) out << ',' << shortest_double(v);
        out << ',' << (p.label ? label_name(*p.label) : "") << '\n';
    }
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace

// ---------------------------------------------------------------------------

void validate_cohort(const Cohort& cohort) {
    std::set<std::string> seen;
    for (const PatientRecord& p : cohort.patients) {
        if (p.id.empty()) fail(ErrorCode::MalformedRecord, "patient with empty id");
        if (!seen.insert(p.id).second) malformed(p.id, "duplicate id");
        if (!p.volume && !p.feature_vector) malformed(p.id, "needs a volume or a feature_vector");
        for (const std::string& name : cohort.attr_names) {
            auto it = p.binary_attrs.find(name);
            if (it == p.binary_attrs.end()) malformed(p.id, "missing attribute '" + name + "'");
            if (it->second != 0 && it->second != 1)
                malformed(p.id, "attribute '" + name + "' must be 0 or 1, got " + std::to_string(it->second));
        }
        for (const auto& [name, value] : p.binary_attrs)
            if (std::find(cohort.attr_names.begin(), cohort.attr_names.end(), name) ==
                cohort.attr_names.end())
                malformed(p.id, "attribute '" + name + "' not declared in attr_names");
        if (p.volume) {
            const Volume& v = *p.volume;
            if (v.shape[0] <= 0 || v.shape[1] <= 0 || v.shape[2] <= 0)
                malformed(p.id, "volume shape entries must be positive");
            if (v.liver.size() != v.voxel_count() || v.tumor.size() != v.voxel_count())
                malformed(p.id, "liver/tumor grids do not match the declared shape");
            if (!(v.voxel_volume > 0.0)) malformed(p.id, "voxel_volume must be positive");
            for (double x : v.liver)
                if (!std::isfinite(x)) malformed(p.id, "non-finite liver intensity");
            for (double x : v.tumor)
                if (!std::isfinite(x)) malformed(p.id, "non-finite tumor intensity");
        }
        if (p.feature_vector)
            for (double x : *p.feature_vector)
                if (!std::isfinite(x)) malformed(p.id, "non-finite feature value");
        if (p.qeasl_baseline) validate_measurements(p.id, "qeasl_baseline", *p.qeasl_baseline);
        if (p.qeasl_followup) validate_measurements(p.id, "qeasl_followup", *p.qeasl_followup);
        if (p.label && p.qeasl_baseline && p.qeasl_followup) {
            Label derived = responder_label(averaged_enhancing_volume(*p.qeasl_baseline),
                                            averaged_enhancing_volume(*p.qeasl_followup));
            if (derived != *p.label)
                malformed(p.id, std::string("stored label ") + label_name(*p.label) +
                                    " contradicts qEASL measurements (" + label_name(derived) + ")");
        }
    }
}

Cohort load_cohort(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::IoError, "no such file: " + path.string());
    Cohort cohort;
    if (path.extension() == ".csv") {
        cohort = load_cohort_csv(path);
    } else {
        std::ifstream in(path);
        require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
        json root;
        try {
            root = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorCode::MalformedRecord, "invalid JSON in " + path.string() + ": " + e.what());
        }
        try {
            cohort = cohort_from_json(root);
        } catch (const json::exception& e) {
            fail(ErrorCode::MalformedRecord, std::string("bad cohort field: ") + e.what());
        }
    }
    validate_cohort(cohort);
    return cohort;
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
    validate_cohort(cohort);
    if (path.extension() == ".csv") {
        save_cohort_csv(cohort, path);
        return;
    }
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path.string());
    out << cohort_to_json(cohort).dump(2) << '\n';
    require(out.good(), ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<int> label_indices(const Cohort& cohort) {
    std::vector<int> labels(cohort.patients.size(), -1);
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        if (cohort.patients[i].label) labels[i] = static_cast<int>(*cohort.patients[i].label);
    return labels;
}

std::vector<int> labelled_nodes(const Cohort& cohort) {
    std::vector<int> nodes;
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
        if (cohort.patients[i].label) nodes.push_back(static_cast<int>(i));
    return nodes;
}

std::vector<FoldSplit> stratified_kfold(const Cohort& cohort, int k, std::uint64_t seed) {
    require(k >= 2, ErrorCode::InvalidConfig, "k must be at least 2");
    std::array<std::vector<int>, 2> by_class;
    for (int node : labelled_nodes(cohort))
        by_class[static_cast<int>(*cohort.patients[node].label)].push_back(node);
    for (int c = 0; c < 2; ++c)
        require(static_cast<int>(by_class[c].size()) >= k, ErrorCode::TooFewSamples,
                std::string("class ") + (c == 0 ? "NR" : "R") + " has " +
                    std::to_string(by_class[c].size()) + " labelled members, need >= " +
                    std::to_string(k));

    std::mt19937_64 gen(derive_seed(seed, "stratified-kfold"));
    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (auto& cls : by_class) {
        shuffle_in_place(cls, gen);
        for (std::size_t i = 0; i < cls.size(); ++i)
            folds[i % static_cast<std::size_t>(k)].test.push_back(cls[i]);
    }
    std::vector<int> all = labelled_nodes(cohort);
    for (FoldSplit& f : folds) {
        std::sort(f.test.begin(), f.test.end());
        std::set_difference(all.begin(), all.end(), f.test.begin(), f.test.end(),
                            std::back_inserter(f.train));
    }
    return folds;
}

}  // namespace tacegcn
