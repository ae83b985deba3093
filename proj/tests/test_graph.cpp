#include <cmath>
#include <set>
#include <utility>

#include "cfa/errors.hpp"
#include "cfa/graph.hpp"
#include "cfa/rng.hpp"
#include "doctest.h"

using namespace cfa;

namespace {

Trace make_trace(std::vector<Address> steps) {
    Trace t;
    t.steps = std::move(steps);
    return t;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set(
    const ExecutionGraph& g) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::size_t e = 0; e < g.edge_count(); ++e)
        out.insert({g.edges_src[e], g.edges_dst[e]});
    return out;
}

// Quadratic re-scan oracle: for every node, walk the whole trace and compute
// every feature from first principles.
Matrix oracle_features(const Trace& trace, const ExecutionGraph& g) {
    const double len = static_cast<double>(trace.steps.size());
    const std::size_t n = g.node_count();
    Matrix x(n, kBaseFeatureCount);
    for (std::size_t v = 0; v < n; ++v) {
        Address addr = g.node_ids[v];
        std::vector<double> visits;
        for (std::size_t i = 0; i < trace.steps.size(); ++i)
            if (trace.steps[i] == addr) visits.push_back(static_cast<double>(i));

        double count = static_cast<double>(visits.size());
        double first = visits.front();
        double last = visits.back();
        double mean_step = 0.0;
        for (double s : visits) mean_step += s;
        mean_step /= count;
        double var = 0.0;
        for (double s : visits) var += (s - mean_step) * (s - mean_step);
        var /= count;
        double gap = 0.0;
        if (visits.size() >= 2) {
            for (std::size_t i = 1; i < visits.size(); ++i)
                gap += visits[i] - visits[i - 1];
            gap /= static_cast<double>(visits.size() - 1);
        }

        std::set<std::uint32_t> in, out;
        for (std::size_t e = 0; e < g.edge_count(); ++e) {
            if (g.edges_dst[e] == v) in.insert(g.edges_src[e]);
            if (g.edges_src[e] == v) out.insert(g.edges_dst[e]);
        }
        auto visits_of = [&](std::uint32_t u) {
            double c = 0.0;
            for (Address a : trace.steps) c += a == g.node_ids[u];
            return c;
        };
        auto last_of = [&](std::uint32_t u) {
            double l = 0.0;
            for (std::size_t i = 0; i < trace.steps.size(); ++i)
                if (trace.steps[i] == g.node_ids[u])
                    l = static_cast<double>(i);
            return l;
        };
        double in_vis = 0.0, in_last = 0.0, out_vis = 0.0, out_last = 0.0;
        for (std::uint32_t u : in) {
            in_vis += visits_of(u);
            in_last += last_of(u);
        }
        for (std::uint32_t u : out) {
            out_vis += visits_of(u);
            out_last += last_of(u);
        }

        x.at(v, kFeatDegree) = (static_cast<double>(in.size() + out.size())) / len;
        x.at(v, kFeatVisits) = count / len;
        x.at(v, kFeatFirstVisit) = first / len;
        x.at(v, kFeatLastVisit) = last / len;
        x.at(v, kFeatInEdges) = static_cast<double>(in.size()) / len;
        x.at(v, kFeatOutEdges) = static_cast<double>(out.size()) / len;
        x.at(v, kFeatFrequency) = count / len;
        x.at(v, kFeatTimeOfUse) = (last - first) / len;
        x.at(v, kFeatStdVisitSteps) = std::sqrt(var) / len;
        x.at(v, kFeatMeanVisitGap) = gap / len;
        x.at(v, kFeatMeanVisitStep) = mean_step / len;
        x.at(v, kFeatMeanVisitsInNeigh) =
            in.empty() ? 0.0 : in_vis / static_cast<double>(in.size()) / len;
        x.at(v, kFeatMeanVisitsOutNeigh) =
            out.empty() ? 0.0 : out_vis / static_cast<double>(out.size()) / len;
        x.at(v, kFeatMeanLastVisitInNeigh) =
            in.empty() ? 0.0 : in_last / static_cast<double>(in.size()) / len;
        x.at(v, kFeatMeanLastVisitOutNeigh) =
            out.empty() ? 0.0 : out_last / static_cast<double>(out.size()) / len;
    }
    return x;
}

Trace random_walk_trace(std::size_t len, std::size_t alphabet, Rng& rng) {
    Trace t;
    for (std::size_t i = 0; i < len; ++i)
        t.steps.push_back(0x1000 + rng.uniform_index(alphabet) * 0x10);
    return t;
}

}  // namespace

TEST_CASE("build_graph on a small trace") {
    ExecutionGraph g = build_graph(make_trace({0xa, 0xb, 0xa, 0xc}));
    REQUIRE(g.node_ids == std::vector<Address>{0xa, 0xb, 0xc});
    CHECK(edge_set(g) ==
          std::set<std::pair<std::uint32_t, std::uint32_t>>{
              {0, 1}, {1, 0}, {0, 2}});
    CHECK(g.trace_len == 4);
    CHECK(g.features.rows == 3);
    CHECK(g.features.cols == 15);
    CHECK(g.features.at(0, kFeatVisits) == doctest::Approx(2.0 / 4.0));
}

TEST_CASE("a single step is a valid one-node graph") {
    ExecutionGraph g = build_graph(make_trace({0xa}));
    CHECK(g.node_count() == 1);
    CHECK(g.edge_count() == 0);
    CHECK(g.features.at(0, kFeatFirstVisit) == 0.0);
    CHECK(g.features.at(0, kFeatLastVisit) == 0.0);
    CHECK(g.features.at(0, kFeatTimeOfUse) == 0.0);
    CHECK(g.features.at(0, kFeatStdVisitSteps) == 0.0);
    CHECK(g.features.at(0, kFeatMeanVisitGap) == 0.0);
}

TEST_CASE("empty trace is rejected") {
    CHECK_THROWS_AS(build_graph(Trace{}), EmptyTraceError);
}

TEST_CASE("hand-computed features of [a, b, a]") {
    ExecutionGraph g = build_graph(make_trace({0xa, 0xb, 0xa}));
    const double third = 1.0 / 3.0;
    // node a: visits at steps 0 and 2
    CHECK(g.features.at(0, kFeatVisits) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatFirstVisit) == 0.0);
    CHECK(g.features.at(0, kFeatLastVisit) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatTimeOfUse) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatMeanVisitGap) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatStdVisitSteps) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatMeanVisitStep) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatFrequency) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatDegree) == doctest::Approx(2 * third));
    CHECK(g.features.at(0, kFeatInEdges) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatOutEdges) == doctest::Approx(third));
    // a's only neighbor either way is b: one visit, last visit at step 1
    CHECK(g.features.at(0, kFeatMeanVisitsInNeigh) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatMeanVisitsOutNeigh) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatMeanLastVisitInNeigh) == doctest::Approx(third));
    CHECK(g.features.at(0, kFeatMeanLastVisitOutNeigh) ==
          doctest::Approx(third));
}

TEST_CASE("repeating one address saturates into a self-loop node") {
    const std::size_t k = 7;
    ExecutionGraph g =
        build_graph(make_trace(std::vector<Address>(k, 0xabc)));
    REQUIRE(g.node_count() == 1);
    REQUIRE(g.edge_count() == 1);
    CHECK(g.edges_src[0] == 0);
    CHECK(g.edges_dst[0] == 0);
    CHECK(g.features.at(0, kFeatFrequency) == 1.0);
    // the node is its own in- and out-neighbor
    CHECK(g.features.at(0, kFeatMeanVisitsInNeigh) == 1.0);
}

TEST_CASE("features match the quadratic re-scan oracle") {
    Rng rng(11);
    for (int round = 0; round < 4; ++round) {
        Trace t = random_walk_trace(600 + rng.uniform_index(400), 40, rng);
        ExecutionGraph g = build_graph(t);
        Matrix expect = oracle_features(t, g);
        REQUIRE(g.features.same_shape(expect));
        for (std::size_t i = 0; i < expect.data.size(); ++i)
            CHECK(g.features.data[i] ==
                  doctest::Approx(expect.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("every feature is finite and step-derived columns lie in [0,1]") {
    Rng rng(12);
    Trace t = random_walk_trace(2000, 25, rng);
    ExecutionGraph g = build_graph(t);
    for (double v : g.features.data) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("deterministic construction and exact edge semantics") {
    Rng rng(13);
    Trace t = random_walk_trace(1500, 30, rng);
    ExecutionGraph g1 = build_graph(t);
    ExecutionGraph g2 = build_graph(t);
    CHECK(g1.node_ids == g2.node_ids);
    CHECK(g1.edges_src == g2.edges_src);
    CHECK(g1.edges_dst == g2.edges_dst);
    CHECK(g1.features.data == g2.features.data);

    // Edge set == dedup consecutive pairs, via an independent reconstruction.
    std::set<std::pair<Address, Address>> expect;
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)
        expect.insert({t.steps[i], t.steps[i + 1]});
    std::set<std::pair<Address, Address>> got;
    for (std::size_t e = 0; e < g1.edge_count(); ++e)
        got.insert({g1.node_ids[g1.edges_src[e]], g1.node_ids[g1.edges_dst[e]]});
    CHECK(got == expect);
    CHECK(g1.edge_count() == expect.size());  // no duplicates
}

TEST_CASE("optional constant bias column") {
    FeatureOptions opts;
    opts.constant_bias_column = true;
    ExecutionGraph g = build_graph(make_trace({1, 2, 1, 3}), opts);
    REQUIRE(g.features.cols == 16);
    for (std::size_t i = 0; i < g.features.rows; ++i)
        CHECK(g.features.at(i, 15) == 1.0);
}

TEST_CASE("graph JSON and binary round trips preserve everything") {
    Rng rng(14);
    Trace t = random_walk_trace(800, 20, rng);
    ExecutionGraph g = build_graph(t);

    ExecutionGraph j = graph_from_json(graph_to_json(g));
    CHECK(j.node_ids == g.node_ids);
    CHECK(j.edges_src == g.edges_src);
    CHECK(j.edges_dst == g.edges_dst);
    CHECK(j.trace_len == g.trace_len);
    CHECK(j.features.data == g.features.data);

    ExecutionGraph b = graph_from_binary(graph_to_binary(g));
    CHECK(b.node_ids == g.node_ids);
    CHECK(b.edges_src == g.edges_src);
    CHECK(b.edges_dst == g.edges_dst);
    CHECK(b.trace_len == g.trace_len);
    CHECK(b.features.data == g.features.data);
}

TEST_CASE("graph containers reject corrupted input") {
    ExecutionGraph g = build_graph(make_trace({1, 2, 3, 1}));
    std::string bin = graph_to_binary(g);
    CHECK_THROWS_AS(graph_from_binary(bin.substr(0, bin.size() - 2)),
                    ParseError);
    CHECK_THROWS_AS(graph_from_binary(bin + "zz"), ParseError);
    std::string wrong_type = bin;
    wrong_type[6] = 3;
    CHECK_THROWS_AS(graph_from_binary(wrong_type), ParseError);
    CHECK_THROWS_AS(graph_from_json("{\"node_ids\": [1]}"), std::exception);
}
