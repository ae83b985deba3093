#include <set>
#include <utility>

#include "cfa/attack.hpp"
#include "cfa/errors.hpp"
#include "cfa/rng.hpp"
#include "cfa/workload.hpp"
#include "doctest.h"

using namespace cfa;

namespace {

Trace make_trace(std::vector<Address> steps) {
    Trace t;
    t.steps = std::move(steps);
    return t;
}

std::set<std::pair<Address, Address>> trace_edges(const Trace& t) {
    std::set<std::pair<Address, Address>> out;
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
        out.insert({t.steps[i], t.steps[i + 1]});
    return out;
}

}  // namespace

TEST_CASE("rop keeps the prefix and suffix and inserts at pos") {
    Trace base = make_trace({0xa, 0xb, 0xc});
    AttackSpec spec{AttackKind::rop, 1, 2, 0, 99};
    Trace out = gen_rop(base, spec);
    REQUIRE(out.steps.size() == 5);
    CHECK(out.steps[0] == 0xa);
    CHECK(out.steps[3] == 0xb);
    CHECK(out.steps[4] == 0xc);
    for (std::size_t i = 1; i <= 2; ++i)
        CHECK((out.steps[i] == 0xa || out.steps[i] == 0xb ||
               out.steps[i] == 0xc));
}

TEST_CASE("attack spec validation") {
    Trace base = make_trace({1, 2, 3});
    CHECK_THROWS_AS(gen_rop(base, {AttackKind::rop, 0, 0, 0, 1}), SpecError);
    CHECK_THROWS_AS(gen_rop(base, {AttackKind::rop, 4, 1, 0, 1}), SpecError);
    CHECK_THROWS_AS(gen_rop(base, {AttackKind::dop, 0, 1, 0, 1}), SpecError);
    CHECK_THROWS_AS(gen_dop(base, {AttackKind::dop, 0, 1, 0, 1}), SpecError);
    CHECK_THROWS_AS(gen_dop(base, {AttackKind::rop, 1, 1, 0, 1}), SpecError);
    CHECK_THROWS_AS(gen_rop(Trace{}, {AttackKind::rop, 0, 1, 0, 1}), SpecError);
}

TEST_CASE("rop sampling is uniform over the input steps") {
    Trace base = make_trace({0xa, 0xb});
    std::size_t hits_a = 0;
    const std::size_t runs = 10000;
    for (std::size_t s = 0; s < runs; ++s) {
        AttackSpec spec{AttackKind::rop, 1, 1, 0, s};
        Trace out = gen_rop(base, spec);
        hits_a += out.steps[1] == 0xa;
    }
    double freq = static_cast<double>(hits_a) / static_cast<double>(runs);
    CHECK(freq > 0.48);
    CHECK(freq < 0.52);
}

TEST_CASE("rop eventually creates an edge the input never took") {
    Trace base = make_trace({0xa, 0xb, 0xa, 0xb, 0xa});
    auto benign = trace_edges(base);
    bool novel = false;
    for (std::uint64_t s = 0; s < 50 && !novel; ++s) {
        Trace out = gen_rop(base, {AttackKind::rop, 2, 3, 0, s});
        for (const auto& e : trace_edges(out)) novel |= !benign.count(e);
    }
    CHECK(novel);
}

TEST_CASE("rop and dop are deterministic under a fixed seed") {
    Trace base = make_trace({1, 2, 3, 1, 2, 3, 4, 1, 2});
    AttackSpec rop{AttackKind::rop, 4, 6, 0, 1234};
    CHECK(gen_rop(base, rop) == gen_rop(base, rop));
    Trace loopy = make_trace({1, 2, 3, 1, 2, 3, 1, 2, 3, 4});
    AttackSpec dop{AttackKind::dop, 6, 3, 1, 1234};
    CHECK(gen_dop(loopy, dop) == gen_dop(loopy, dop));
}

TEST_CASE("dop splices the forced walk on the worked example") {
    Trace base = make_trace({0xa, 0xb, 0xc, 0xa, 0xb, 0xc, 0xd});
    AttackSpec spec{AttackKind::dop, 3, 3, 0, 7};
    Trace out = gen_dop(base, spec);
    CHECK(out.steps == std::vector<Address>{0xa, 0xb, 0xc, 0xa, 0xb, 0xc, 0xa,
                                            0xb, 0xc, 0xd});
    CHECK(trace_edges(out) == trace_edges(base));

    AttackSpec repeated{AttackKind::dop, 3, 3, 1, 7};
    Trace out2 = gen_dop(base, repeated);
    CHECK(out2.steps.size() == 7 + 6);
    CHECK(trace_edges(out2) == trace_edges(base));
}

TEST_CASE("dop without any revisit exhausts the retry budget") {
    Trace base = make_trace({0xa, 0xb});
    CHECK_THROWS_AS(gen_dop(base, {AttackKind::dop, 1, 1, 0, 3}, 50),
                    NoDopSpliceError);
}

TEST_CASE("dop never introduces a new edge and obeys the length formula") {
    WorkloadSpec wspec;
    wspec.n_blocks = 25;
    wspec.trace_len = 800;
    wspec.branching = 1.5;
    wspec.n_traces = 3;
    wspec.seed = 5;
    Workload wl = gen_workload(wspec);

    Rng rng(99);
    std::size_t produced = 0;
    for (std::size_t round = 0; round < 200; ++round) {
        const Trace& base = wl.traces[round % wl.traces.size()];
        AttackSpec spec;
        spec.kind = AttackKind::dop;
        spec.pos = base.steps.size() / 2 +
                   rng.uniform_index(base.steps.size() / 2 - 1);
        spec.inserts = 5 + rng.uniform_index(26);
        spec.repeats = rng.uniform_index(4);
        spec.seed = rng.next_u64();
        Trace out;
        try {
            out = gen_dop(base, spec);
        } catch (const NoDopSpliceError&) {
            // some (pos, inserts) combinations admit no edge-exact splice
            continue;
        }
        ++produced;
        CHECK(out.steps.size() ==
              base.steps.size() + spec.inserts * (1 + spec.repeats));
        auto benign = trace_edges(base);
        for (const auto& e : trace_edges(out)) {
            REQUIRE_MESSAGE(benign.count(e) == 1,
                            "dop output minted a new edge");
        }
    }
    CHECK(produced >= 150);  // the vast majority must succeed
}

TEST_CASE("rop length formula holds for every seed") {
    Trace base = make_trace({1, 2, 1, 3, 1, 4});
    Rng rng(3);
    for (std::size_t round = 0; round < 100; ++round) {
        AttackSpec spec;
        spec.kind = AttackKind::rop;
        spec.pos = rng.uniform_index(base.steps.size() + 1);
        spec.inserts = 1 + rng.uniform_index(50);
        spec.seed = rng.next_u64();
        CHECK(gen_rop(base, spec).steps.size() ==
              base.steps.size() + spec.inserts);
    }
}
