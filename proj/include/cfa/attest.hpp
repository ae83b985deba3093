#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cfa/graph.hpp"
#include "cfa/linalg.hpp"
#include "cfa/vgae.hpp"

namespace cfa {

// Infer-mode embeddings: row i is the latent vector of node i.
Matrix embed(const VgaeModel& model, const ExecutionGraph& graph);

struct AttestationProfile {
    std::string model_digest;
    Matrix reference_embeddings;     // trace0 embeddings
    std::vector<double> distances;   // validation calibration distances
    std::size_t n_val = 0;
    double threshold = 0.0;          // mean + 2 * population std
};

AttestationProfile calibrate(const VgaeModel& model,
                             const ExecutionGraph& reference,
                             const std::vector<ExecutionGraph>& validation);

enum class Outcome { benign, malicious };

struct Verdict {
    double distance = 0.0;
    double threshold = 0.0;
    Outcome outcome = Outcome::benign;
    std::string trace_id;
};

// Distance is measured from the candidate embedding set to the reference
// set; strictly above threshold flags malicious.
Verdict attest(const AttestationProfile& profile, const VgaeModel& model,
               const ExecutionGraph& graph, const std::string& trace_id = "");

std::string profile_to_json(const AttestationProfile& profile);
AttestationProfile profile_from_json(const std::string& json_text);
void save_profile(const AttestationProfile& profile,
                  const std::filesystem::path& path);
AttestationProfile load_profile(const std::filesystem::path& path);

std::string verdict_to_json(const Verdict& verdict);
void save_verdict(const Verdict& verdict, const std::filesystem::path& path);

}  // namespace cfa
