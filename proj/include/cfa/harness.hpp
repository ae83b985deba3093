#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfa/graph.hpp"
#include "cfa/metrics.hpp"
#include "cfa/vgae.hpp"
#include "cfa/workload.hpp"

namespace cfa {

// Experiment wiring shared by the grids: per repetition the harness draws a
// fresh workload, trains on its first trace, calibrates the threshold on the
// validation traces and attests the rest.
struct HarnessConfig {
    WorkloadSpec workload;   // n_traces is derived from the counts below
    TrainConfig train;
    FeatureOptions features;
    std::size_t n_validation = 10;
    std::size_t n_benign_attest = 50;
    std::uint64_t seed = 0;
};

struct LengthStats {
    std::size_t length = 0;  // inserted steps (ROP) or total inserted (DOP)
    Confusion counts;
    double mean_distance = 0.0;
};

struct RepMetrics {
    std::size_t rep = 0;
    Confusion counts;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<LengthStats> per_length;
};

struct MetricsReport {
    std::string mode;        // "rop" or "dop"
    Confusion counts;        // summed over reps
    double fpr = 0.0;        // means of the per-rep metrics
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t repetitions = 0;
    std::vector<LengthStats> per_length;  // counts summed, distances averaged
    std::vector<RepMetrics> reps;
};

MetricsReport run_rop_grid(const HarnessConfig& cfg,
                           const std::vector<std::size_t>& lengths,
                           std::size_t per_length, std::size_t reps);

// DOP blocks are sized so inserts x (1 + repeats) ~= total_inserted.
MetricsReport run_dop_grid(const HarnessConfig& cfg, std::size_t n_attacks,
                           std::size_t total_inserted, std::size_t reps);

struct AblationRow {
    std::size_t n_val = 0;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// One training per rep; each n in n_values recalibrates the threshold with
// the first n validation traces and re-attests.
std::vector<AblationRow> run_threshold_ablation(
    const HarnessConfig& cfg, const std::vector<std::size_t>& n_values,
    std::size_t reps, std::size_t n_attacks = 20,
    std::size_t attack_inserts = 100);

// CSV: header, one row per rep, and an aggregate "mean" row (column order is
// documented in the README). JSON mirrors the full report.
std::string report_to_csv(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);
std::string ablation_to_csv(const std::vector<AblationRow>& rows);
void save_text(const std::string& text, const std::filesystem::path& path);

}  // namespace cfa
