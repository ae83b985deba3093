#include "cfa/attest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cfa/errors.hpp"
#include "cfa/hausdorff.hpp"
#include "json.hpp"

namespace cfa {

Matrix embed(const VgaeModel& model, const ExecutionGraph& graph) {
    return encode(model, graph, EncodeMode::infer).z;
}

AttestationProfile calibrate(const VgaeModel& model,
                             const ExecutionGraph& reference,
                             const std::vector<ExecutionGraph>& validation) {
    if (validation.empty())
        throw CalibrationError("calibration needs at least one validation trace");

    AttestationProfile profile;
    profile.model_digest = model_digest(model);
    profile.reference_embeddings = embed(model, reference);
    profile.n_val = validation.size();
    for (const ExecutionGraph& g : validation)
        profile.distances.push_back(
            directed_hausdorff(embed(model, g), profile.reference_embeddings));

    double mean = 0.0;
    for (double d : profile.distances) mean += d;
    mean /= static_cast<double>(profile.distances.size());
    double var = 0.0;
    for (double d : profile.distances) var += (d - mean) * (d - mean);
    var /= static_cast<double>(profile.distances.size());  // population
    profile.threshold = mean + 2.0 * std::sqrt(var);
    return profile;
}

Verdict attest(const AttestationProfile& profile, const VgaeModel& model,
               const ExecutionGraph& graph, const std::string& trace_id) {
    if (profile.model_digest != model_digest(model))
        throw ProfileError("profile was calibrated with a different model");
    Verdict v;
    v.trace_id = trace_id;
    v.threshold = profile.threshold;
    v.distance =
        directed_hausdorff(embed(model, graph), profile.reference_embeddings);
    v.outcome =
        v.distance > v.threshold ? Outcome::malicious : Outcome::benign;
    return v;
}

std::string profile_to_json(const AttestationProfile& profile) {
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["model_digest"] = profile.model_digest;
    auto ref = nlohmann::json::array();
    for (std::size_t i = 0; i < profile.reference_embeddings.rows; ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t j = 0; j < profile.reference_embeddings.cols; ++j)
            row.push_back(profile.reference_embeddings.at(i, j));
        ref.push_back(std::move(row));
    }
    doc["reference_embeddings"] = std::move(ref);
    doc["distances"] = profile.distances;
    doc["n_val"] = profile.n_val;
    doc["threshold"] = profile.threshold;
    return doc.dump() + "\n";
}

AttestationProfile profile_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("profile: ") + e.what(), e.byte);
    }
    if (doc.value("format_version", 0) != 1)
        throw ProfileError("unsupported profile format_version");
    AttestationProfile p;
    p.model_digest = doc.at("model_digest").get<std::string>();
    const auto& ref = doc.at("reference_embeddings");
    p.reference_embeddings =
        Matrix(ref.size(), ref.empty() ? 0 : ref.at(0).size());
    for (std::size_t i = 0; i < p.reference_embeddings.rows; ++i)
        for (std::size_t j = 0; j < p.reference_embeddings.cols; ++j)
            p.reference_embeddings.at(i, j) = ref.at(i).at(j).get<double>();
    p.distances = doc.at("distances").get<std::vector<double>>();
    p.n_val = doc.at("n_val").get<std::size_t>();
    p.threshold = doc.at("threshold").get<double>();
    if (p.n_val != p.distances.size())
        throw ProfileError("profile n_val disagrees with distance list");
    return p;
}

void save_profile(const AttestationProfile& profile,
                  const std::filesystem::path& path) {
    std::string bytes = profile_to_json(profile);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

AttestationProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open profile file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return profile_from_json(ss.str());
}

std::string verdict_to_json(const Verdict& verdict) {
    nlohmann::json doc;
    doc["distance"] = verdict.distance;
    doc["threshold"] = verdict.threshold;
    doc["outcome"] =
        verdict.outcome == Outcome::malicious ? "malicious" : "benign";
    doc["trace_id"] = verdict.trace_id;
    return doc.dump() + "\n";
}

void save_verdict(const Verdict& verdict, const std::filesystem::path& path) {
    std::string bytes = verdict_to_json(verdict);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

}  // namespace cfa
