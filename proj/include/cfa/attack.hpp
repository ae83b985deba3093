#pragma once

#include <cstdint>
#include <string>

#include "cfa/trace.hpp"

namespace cfa {

enum class AttackKind { rop, dop };

struct AttackSpec {
    AttackKind kind = AttackKind::rop;
    std::size_t pos = 0;      // insertion index into the trace
    std::size_t inserts = 1;  // malicious steps per block, >= 1
    std::size_t repeats = 0;  // extra copies of the block (DOP only)
    std::uint64_t seed = 0;
};

// Splices `inserts` addresses sampled uniformly (with replacement) from the
// input steps at position pos. The sampled block usually creates edges the
// benign trace never took.
Trace gen_rop(const Trace& trace, const AttackSpec& spec);

// Splices a block of `inserts` addresses drawn from the prefix [0, pos) such
// that every consecutive pair of the resulting trace is an edge the benign
// trace already contains; the block is inserted 1 + repeats times. The edge
// set of the output is therefore a subset of the input's. If no block exists
// at pos, other positions are retried up to `retry_budget` attempts.
Trace gen_dop(const Trace& trace, const AttackSpec& spec,
              std::size_t retry_budget = 1000);

AttackKind parse_attack_kind(const std::string& s);

}  // namespace cfa
