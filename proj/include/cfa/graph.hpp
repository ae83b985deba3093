#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfa/linalg.hpp"
#include "cfa/trace.hpp"

namespace cfa {

inline constexpr std::size_t kBaseFeatureCount = 15;

struct FeatureOptions {
    // Appends a constant 1.0 column, widening the feature matrix to 16.
    bool constant_bias_column = false;

    std::size_t feature_count() const {
        return kBaseFeatureCount + (constant_bias_column ? 1 : 0);
    }
};

// Execution graph of one trace: nodes are the unique addresses in first
// occurrence order, edges the deduplicated consecutive step pairs (COO),
// plus one feature row per node, normalized by the trace length.
struct ExecutionGraph {
    std::vector<Address> node_ids;
    std::vector<std::uint32_t> edges_src;
    std::vector<std::uint32_t> edges_dst;
    Matrix features;  // n x F
    std::size_t trace_len = 0;

    std::size_t node_count() const { return node_ids.size(); }
    std::size_t edge_count() const { return edges_src.size(); }
};

// Feature columns, in fixed order.
enum FeatureColumn : std::size_t {
    kFeatDegree = 0,
    kFeatVisits = 1,
    kFeatFirstVisit = 2,
    kFeatLastVisit = 3,
    kFeatInEdges = 4,
    kFeatOutEdges = 5,
    kFeatFrequency = 6,
    kFeatTimeOfUse = 7,
    kFeatStdVisitSteps = 8,
    kFeatMeanVisitGap = 9,
    kFeatMeanVisitStep = 10,
    kFeatMeanVisitsInNeigh = 11,
    kFeatMeanVisitsOutNeigh = 12,
    kFeatMeanLastVisitInNeigh = 13,
    kFeatMeanLastVisitOutNeigh = 14,
};

// Nodes, dedup edge list and per-node visit index; the feature pass reuses it.
struct GraphTopology {
    std::vector<Address> node_ids;
    std::vector<std::uint32_t> edges_src;
    std::vector<std::uint32_t> edges_dst;
    std::vector<std::uint32_t> step_node;     // node index of every step
    std::vector<std::size_t> visit_offsets;   // CSR offsets into visit_steps
    std::vector<std::uint64_t> visit_steps;   // step indices grouped by node
};

GraphTopology build_topology(const Trace& trace);
Matrix extract_features(const GraphTopology& topo, std::size_t trace_len,
                        const FeatureOptions& opts = {});
ExecutionGraph build_graph(const Trace& trace, const FeatureOptions& opts = {});

std::string graph_to_json(const ExecutionGraph& g);
ExecutionGraph graph_from_json(const std::string& json_text);
std::string graph_to_binary(const ExecutionGraph& g);
ExecutionGraph graph_from_binary(const std::string& bytes);

// Extension picks the container: .json for JSON, anything else binary.
void save_graph(const ExecutionGraph& g, const std::filesystem::path& path);
ExecutionGraph load_graph(const std::filesystem::path& path);

}  // namespace cfa
