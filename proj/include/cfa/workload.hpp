#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cfa/trace.hpp"

namespace cfa {

// Synthetic benign workload: one random ground-truth control-flow graph and
// per-trace biased random walks over it. Stands in for hardware-traced
// corpora at desk scale.
struct WorkloadSpec {
    std::size_t n_blocks = 100;   // synthetic CFG size
    double branching = 1.2;       // mean out-degree
    std::size_t trace_len = 10000;
    std::size_t n_traces = 1;
    double input_entropy = 0.05;  // per-trace input-constant jitter
    std::uint64_t seed = 0;

    void validate() const;
};

struct Workload {
    std::vector<Trace> traces;
    // Ground-truth digraph edges as address pairs; every trace's edge set is
    // a subset of this.
    std::vector<std::pair<Address, Address>> graph_edges;
};

Workload gen_workload(const WorkloadSpec& spec);

}  // namespace cfa
