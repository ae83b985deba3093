#include "cfa/attack.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cfa/errors.hpp"
#include "cfa/rng.hpp"

namespace cfa {

namespace {

void validate_common(const Trace& trace, const AttackSpec& spec) {
    if (trace.steps.empty()) throw SpecError("attack input trace is empty");
    if (spec.inserts < 1) throw SpecError("inserts must be >= 1");
    if (spec.pos > trace.steps.size())
        throw SpecError("pos " + std::to_string(spec.pos) +
                        " exceeds trace length " +
                        std::to_string(trace.steps.size()));
}

using EdgeSet = std::unordered_set<std::uint64_t>;

std::uint64_t edge_key(std::uint32_t u, std::uint32_t v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Bounded DFS for a walk atk[0..inserts) through `succ` (successor ids
// restricted to the prefix node set) with the given start candidates and
// end predicate. Successor order is shuffled per node visit.
bool find_walk(const std::vector<std::vector<std::uint32_t>>& succ,
               const std::vector<std::uint32_t>& starts, std::size_t inserts,
               const auto& accepts_end, Rng& rng, std::size_t step_budget,
               std::vector<std::uint32_t>& out) {
    struct Frame {
        std::vector<std::uint32_t> options;
        std::size_t next = 0;
    };
    std::vector<Frame> stack;
    stack.push_back({starts, 0});
    std::size_t steps = 0;
    auto shuffle = [&rng](std::vector<std::uint32_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
    };
    shuffle(stack.back().options);
    out.clear();
    while (!stack.empty()) {
        Frame& top = stack.back();
        if (top.next >= top.options.size()) {
            stack.pop_back();
            if (!out.empty()) out.pop_back();
            continue;
        }
        std::uint32_t node = top.options[top.next++];
        if (++steps > step_budget) return false;
        out.push_back(node);
        if (out.size() == inserts) {
            if (accepts_end(out)) return true;
            out.pop_back();
            continue;
        }
        Frame next{succ[node], 0};
        shuffle(next.options);
        stack.push_back(std::move(next));
    }
    return false;
}

}  // namespace

Trace gen_rop(const Trace& trace, const AttackSpec& spec) {
    if (spec.kind != AttackKind::rop) throw SpecError("spec kind is not rop");
    validate_common(trace, spec);

    Rng rng(spec.seed);
    Trace out;
    out.source_id = trace.source_id;
    out.steps.reserve(trace.steps.size() + spec.inserts);
    out.steps.insert(out.steps.end(), trace.steps.begin(),
                     trace.steps.begin() + static_cast<std::ptrdiff_t>(spec.pos));
    for (std::size_t i = 0; i < spec.inserts; ++i)
        out.steps.push_back(trace.steps[rng.uniform_index(trace.steps.size())]);
    out.steps.insert(out.steps.end(),
                     trace.steps.begin() + static_cast<std::ptrdiff_t>(spec.pos),
                     trace.steps.end());
    return out;
}

Trace gen_dop(const Trace& trace, const AttackSpec& spec,
              std::size_t retry_budget) {
    if (spec.kind != AttackKind::dop) throw SpecError("spec kind is not dop");
    validate_common(trace, spec);
    const std::size_t len = trace.steps.size();
    if (spec.pos < 1) throw SpecError("dop needs pos >= 1 (a predecessor)");
    if (spec.pos >= len)
        throw SpecError("dop needs pos < trace length (a successor)");

    // Node ids and the benign edge relation over the whole trace.
    std::unordered_map<Address, std::uint32_t> index;
    std::vector<Address> addr_of;
    std::vector<std::uint32_t> step_node(len);
    for (std::size_t i = 0; i < len; ++i) {
        auto [it, inserted] = index.try_emplace(
            trace.steps[i], static_cast<std::uint32_t>(addr_of.size()));
        if (inserted) addr_of.push_back(trace.steps[i]);
        step_node[i] = it->second;
    }
    const std::size_t n = addr_of.size();
    EdgeSet benign_edges;
    std::vector<std::vector<std::uint32_t>> succ(n);
    for (std::size_t i = 0; i + 1 < len; ++i)
        if (benign_edges.insert(edge_key(step_node[i], step_node[i + 1])).second)
            succ[step_node[i]].push_back(step_node[i + 1]);

    Rng rng(spec.seed);
    std::size_t pos = spec.pos;
    for (std::size_t attempt = 0; attempt < retry_budget; ++attempt) {
        if (attempt > 0) pos = 1 + rng.uniform_index(len - 1);

        // Nodes visible from the prefix [0, pos) and successors inside it.
        std::vector<char> in_prefix(n, 0);
        for (std::size_t i = 0; i < pos; ++i) in_prefix[step_node[i]] = 1;
        std::vector<std::vector<std::uint32_t>> succ_pre(n);
        for (std::size_t u = 0; u < n; ++u) {
            if (!in_prefix[u]) continue;
            for (std::uint32_t v : succ[u])
                if (in_prefix[v]) succ_pre[u].push_back(v);
        }

        std::vector<std::uint32_t> starts;
        for (std::uint32_t v : succ[step_node[pos - 1]])
            if (in_prefix[v]) starts.push_back(v);
        if (starts.empty()) continue;

        const std::uint32_t rejoin = step_node[pos];
        auto accepts_end = [&](const std::vector<std::uint32_t>& atk) {
            if (!benign_edges.count(edge_key(atk.back(), rejoin))) return false;
            // Repeated blocks abut each other, so the wrap pair must be a
            // benign edge too or the repetition would mint a new one.
            if (spec.repeats > 0 &&
                !benign_edges.count(edge_key(atk.back(), atk.front())))
                return false;
            return true;
        };

        std::vector<std::uint32_t> atk;
        if (!find_walk(succ_pre, starts, spec.inserts, accepts_end, rng,
                       500 * spec.inserts + 2000, atk))
            continue;

        Trace out;
        out.source_id = trace.source_id;
        out.steps.reserve(len + spec.inserts * (1 + spec.repeats));
        out.steps.insert(out.steps.end(), trace.steps.begin(),
                         trace.steps.begin() + static_cast<std::ptrdiff_t>(pos));
        for (std::size_t r = 0; r < 1 + spec.repeats; ++r)
            for (std::uint32_t v : atk) out.steps.push_back(addr_of[v]);
        out.steps.insert(out.steps.end(),
                         trace.steps.begin() + static_cast<std::ptrdiff_t>(pos),
                         trace.steps.end());
        return out;
    }
    throw NoDopSpliceError("no dop splice found within " +
                           std::to_string(retry_budget) + " attempts");
}

AttackKind parse_attack_kind(const std::string& s) {
    if (s == "rop") return AttackKind::rop;
    if (s == "dop") return AttackKind::dop;
    throw SpecError("unknown attack kind '" + s + "'");
}

}  // namespace cfa
