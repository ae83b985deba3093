#include "cfa/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cfa/errors.hpp"
#include "cfa/rng.hpp"

namespace cfa {

namespace {

constexpr Address kAddressBase = 0x401000;
constexpr Address kBlockSize = 0x10;

Address block_address(std::size_t i) {
    return kAddressBase + kBlockSize * static_cast<Address>(i);
}

// Program-shaped ground truth: a fallthrough chain of basic blocks with
// loop back-edges and branch skip-edges, plus an outer wrap so traces can
// run for any length. Loop hotness is heavy-tailed, which is what gives
// nodes the visit-count spread real traces show.
struct Layout {
    std::size_t n = 0;
    std::vector<std::int32_t> loop_header;   // per node: back-edge target
    std::vector<double> loop_hotness;        // mean extra iterations
    std::vector<std::int32_t> skip_target;   // per node: branch skip target
    std::vector<double> skip_prob;           // base take probability
};

Layout make_layout(std::size_t n, double branching, Rng& rng) {
    Layout lay;
    lay.n = n;
    lay.loop_header.assign(n, -1);
    lay.loop_hotness.assign(n, 0.0);
    lay.skip_target.assign(n, -1);
    lay.skip_prob.assign(n, 0.0);

    // branching is the target mean out-degree; the chain contributes 1 and
    // every loop tail or branch node contributes 1 more.
    double extra = std::clamp(branching - 1.0, 0.05, 1.0);
    auto n_special = static_cast<std::size_t>(
        std::max(2.0, extra * static_cast<double>(n)));
    std::size_t n_loops = n_special / 2;
    std::size_t n_branches = n_special - n_loops;

    for (std::size_t i = 0; i < n_loops; ++i) {
        std::size_t body = 2 + rng.uniform_index(10);
        if (body + 2 > n) continue;  // graph too small for this loop
        std::size_t header = rng.uniform_index(n - body - 1);
        std::size_t tail = header + body;
        if (lay.loop_header[tail] >= 0 || lay.skip_target[tail] >= 0) continue;
        lay.loop_header[tail] = static_cast<std::int32_t>(header);
        // lognormal hotness: a few hot loops, many lukewarm ones
        lay.loop_hotness[tail] =
            std::min(200.0, std::exp(0.8 + 1.2 * rng.normal()));
    }
    for (std::size_t i = 0; i < n_branches; ++i) {
        std::size_t skip = 2 + rng.uniform_index(5);
        if (skip + 2 > n) continue;
        std::size_t node = rng.uniform_index(n - skip - 1);
        if (lay.loop_header[node] >= 0 || lay.skip_target[node] >= 0) continue;
        lay.skip_target[node] = static_cast<std::int32_t>(node + skip);
        lay.skip_prob[node] = 0.1 + 0.8 * rng.uniform_real();
    }
    return lay;
}

}  // namespace

void WorkloadSpec::validate() const {
    if (n_blocks < 2) throw ConfigError("workload needs n_blocks >= 2");
    if (trace_len < n_blocks)
        throw ConfigError("workload needs trace_len >= n_blocks");
    if (branching < 1.0) throw ConfigError("workload needs branching >= 1");
    if (input_entropy < 0.0)
        throw ConfigError("input_entropy must be non-negative");
}

Workload gen_workload(const WorkloadSpec& spec) {
    spec.validate();
    Rng graph_rng(mix_seed(spec.seed, 11));
    const std::size_t n = spec.n_blocks;

    // Retry until at least one loop lands (tiny graphs may stay loop-free);
    // the chain plus wrap guarantees no absorbing sinks either way.
    Layout lay;
    const int graph_budget = 16;
    for (int attempt = 0;; ++attempt) {
        lay = make_layout(n, spec.branching, graph_rng);
        bool has_loop = false;
        for (std::size_t i = 0; i < n; ++i) has_loop |= lay.loop_header[i] >= 0;
        if (has_loop || n < 16) break;
        if (attempt + 1 >= graph_budget)
            throw ConfigError("workload graph regeneration budget exhausted");
    }

    Workload wl;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t fallthrough = i + 1 < n ? i + 1 : 0;  // outer wrap
        wl.graph_edges.emplace_back(block_address(i),
                                    block_address(fallthrough));
        if (lay.loop_header[i] >= 0)
            wl.graph_edges.emplace_back(
                block_address(i),
                block_address(static_cast<std::size_t>(lay.loop_header[i])));
        if (lay.skip_target[i] >= 0)
            wl.graph_edges.emplace_back(
                block_address(i),
                block_address(static_cast<std::size_t>(lay.skip_target[i])));
    }

    for (std::size_t t = 0; t < spec.n_traces; ++t) {
        Rng walk_rng(mix_seed(spec.seed, 1000 + t));

        // Input-dependent behavior is drawn once per trace and then replayed
        // deterministically: loops run a fixed iteration count and branches
        // fire on a fixed period, the way fixed-input executions of real
        // programs revisit their blocks. input_entropy jitters the constants
        // between traces.
        // Loop trip counts are continuous per-trace constants paced out
        // Bresenham-style (entries alternate floor/ceil), so visit counts
        // track the input smoothly instead of jumping at integer rounding.
        // Branch cadence is a property of the code, not the input.
        std::vector<double> loop_rate(n, 0.0);
        std::vector<double> loop_accum(n, 0.0);
        std::vector<std::size_t> skip_period(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (lay.loop_header[i] >= 0) {
                double iters = lay.loop_hotness[i] *
                               std::exp(spec.input_entropy * walk_rng.normal());
                loop_rate[i] = std::clamp(iters, 1.0, 500.0);
            }
            if (lay.skip_target[i] >= 0) {
                skip_period[i] = static_cast<std::size_t>(
                    std::clamp<long long>(std::llround(1.0 / lay.skip_prob[i]),
                                          2, 8));
            }
        }

        Trace trace;
        trace.source_id = "workload-" + std::to_string(spec.seed) + "-" +
                          std::to_string(t);
        trace.steps.reserve(spec.trace_len);
        std::vector<std::size_t> laps_left(n, 0);
        std::vector<char> in_loop(n, 0);
        std::vector<std::size_t> encounter(n, 0);
        std::size_t pc = 0;
        while (trace.steps.size() < spec.trace_len) {
            trace.steps.push_back(block_address(pc));
            if (lay.loop_header[pc] >= 0) {
                if (!in_loop[pc]) {
                    double next = loop_accum[pc] + loop_rate[pc];
                    laps_left[pc] = static_cast<std::size_t>(next) -
                                    static_cast<std::size_t>(loop_accum[pc]);
                    loop_accum[pc] = next;
                    in_loop[pc] = 1;
                }
                if (--laps_left[pc] > 0) {
                    pc = static_cast<std::size_t>(lay.loop_header[pc]);
                } else {
                    in_loop[pc] = 0;
                    pc = pc + 1 < n ? pc + 1 : 0;
                }
            } else if (lay.skip_target[pc] >= 0 &&
                       encounter[pc]++ % skip_period[pc] == 0) {
                pc = static_cast<std::size_t>(lay.skip_target[pc]);
            } else {
                pc = pc + 1 < n ? pc + 1 : 0;
            }
        }
        wl.traces.push_back(std::move(trace));
    }
    return wl;
}

}  // namespace cfa
