#include "cfa/graph.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cfa/errors.hpp"
#include "json.hpp"

namespace cfa {

namespace {

constexpr char kMagic[4] = {'R', 'A', 'G', 'E'};
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::uint16_t kGraphRecordType = 2;

}  // namespace

GraphTopology build_topology(const Trace& trace) {
    if (trace.steps.empty())
        throw EmptyTraceError("cannot build a graph from an empty trace");

    GraphTopology topo;
    const std::size_t len = trace.steps.size();
    topo.step_node.resize(len);

    std::unordered_map<Address, std::uint32_t> index;
    index.reserve(len / 4 + 8);
    for (std::size_t i = 0; i < len; ++i) {
        auto [it, inserted] = index.try_emplace(
            trace.steps[i], static_cast<std::uint32_t>(topo.node_ids.size()));
        if (inserted) topo.node_ids.push_back(trace.steps[i]);
        topo.step_node[i] = it->second;
    }

    const std::size_t n = topo.node_ids.size();

    // Visit lists in CSR layout: count, prefix-sum, fill.
    std::vector<std::size_t> counts(n, 0);
    for (std::uint32_t v : topo.step_node) ++counts[v];
    topo.visit_offsets.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v)
        topo.visit_offsets[v + 1] = topo.visit_offsets[v] + counts[v];
    topo.visit_steps.resize(len);
    std::vector<std::size_t> cursor(topo.visit_offsets.begin(),
                                    topo.visit_offsets.end() - 1);
    for (std::size_t i = 0; i < len; ++i)
        topo.visit_steps[cursor[topo.step_node[i]]++] = i;

    // Deduplicated directed edges, in first-occurrence order.
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(len / 4 + 8);
    for (std::size_t i = 0; i + 1 < len; ++i) {
        std::uint32_t u = topo.step_node[i];
        std::uint32_t v = topo.step_node[i + 1];
        std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | v;
        if (seen.insert(key).second) {
            topo.edges_src.push_back(u);
            topo.edges_dst.push_back(v);
        }
    }
    return topo;
}

Matrix extract_features(const GraphTopology& topo, std::size_t trace_len,
                        const FeatureOptions& opts) {
    const std::size_t n = topo.node_ids.size();
    const std::size_t m = topo.edges_src.size();
    const double len = static_cast<double>(trace_len);

    // Dedup neighbor lists from the dedup edge list.
    std::vector<std::vector<std::uint32_t>> in_adj(n), out_adj(n);
    for (std::size_t e = 0; e < m; ++e) {
        out_adj[topo.edges_src[e]].push_back(topo.edges_dst[e]);
        in_adj[topo.edges_dst[e]].push_back(topo.edges_src[e]);
    }

    Matrix x(n, opts.feature_count());
#pragma omp parallel for schedule(static)
    for (long long vi = 0; vi < static_cast<long long>(n); ++vi) {
        const auto v = static_cast<std::size_t>(vi);
        const std::size_t begin = topo.visit_offsets[v];
        const std::size_t end = topo.visit_offsets[v + 1];
        const std::size_t count = end - begin;
        const double first = static_cast<double>(topo.visit_steps[begin]);
        const double last = static_cast<double>(topo.visit_steps[end - 1]);

        double mean_step = 0.0;
        for (std::size_t p = begin; p < end; ++p)
            mean_step += static_cast<double>(topo.visit_steps[p]);
        mean_step /= static_cast<double>(count);

        double var = 0.0;
        for (std::size_t p = begin; p < end; ++p) {
            double d = static_cast<double>(topo.visit_steps[p]) - mean_step;
            var += d * d;
        }
        var /= static_cast<double>(count);  // population variance

        // Consecutive visit gaps telescope to (last - first).
        double mean_gap =
            count >= 2 ? (last - first) / static_cast<double>(count - 1) : 0.0;

        const double in_deg = static_cast<double>(in_adj[v].size());
        const double out_deg = static_cast<double>(out_adj[v].size());

        double in_visits = 0.0, in_last = 0.0;
        for (std::uint32_t u : in_adj[v]) {
            in_visits += static_cast<double>(topo.visit_offsets[u + 1] -
                                             topo.visit_offsets[u]);
            in_last +=
                static_cast<double>(topo.visit_steps[topo.visit_offsets[u + 1] - 1]);
        }
        double out_visits = 0.0, out_last = 0.0;
        for (std::uint32_t u : out_adj[v]) {
            out_visits += static_cast<double>(topo.visit_offsets[u + 1] -
                                              topo.visit_offsets[u]);
            out_last +=
                static_cast<double>(topo.visit_steps[topo.visit_offsets[u + 1] - 1]);
        }

        double* f = x.row(v);
        f[kFeatDegree] = (in_deg + out_deg) / len;
        f[kFeatVisits] = static_cast<double>(count) / len;
        f[kFeatFirstVisit] = first / len;
        f[kFeatLastVisit] = last / len;
        f[kFeatInEdges] = in_deg / len;
        f[kFeatOutEdges] = out_deg / len;
        f[kFeatFrequency] = static_cast<double>(count) / len;
        f[kFeatTimeOfUse] = (last - first) / len;
        f[kFeatStdVisitSteps] = std::sqrt(var) / len;
        f[kFeatMeanVisitGap] = mean_gap / len;
        f[kFeatMeanVisitStep] = mean_step / len;
        f[kFeatMeanVisitsInNeigh] = in_deg > 0 ? in_visits / in_deg / len : 0.0;
        f[kFeatMeanVisitsOutNeigh] =
            out_deg > 0 ? out_visits / out_deg / len : 0.0;
        f[kFeatMeanLastVisitInNeigh] = in_deg > 0 ? in_last / in_deg / len : 0.0;
        f[kFeatMeanLastVisitOutNeigh] =
            out_deg > 0 ? out_last / out_deg / len : 0.0;
        if (opts.constant_bias_column) f[kBaseFeatureCount] = 1.0;
    }
    return x;
}

ExecutionGraph build_graph(const Trace& trace, const FeatureOptions& opts) {
    GraphTopology topo = build_topology(trace);
    ExecutionGraph g;
    g.trace_len = trace.steps.size();
    g.features = extract_features(topo, g.trace_len, opts);
    g.node_ids = std::move(topo.node_ids);
    g.edges_src = std::move(topo.edges_src);
    g.edges_dst = std::move(topo.edges_dst);
    return g;
}

std::string graph_to_json(const ExecutionGraph& g) {
    nlohmann::json doc;
    doc["node_ids"] = g.node_ids;
    doc["edges"] = {g.edges_src, g.edges_dst};
    auto features = nlohmann::json::array();
    for (std::size_t i = 0; i < g.features.rows; ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t j = 0; j < g.features.cols; ++j)
            row.push_back(g.features.at(i, j));
        features.push_back(std::move(row));
    }
    doc["features"] = std::move(features);
    doc["trace_len"] = g.trace_len;
    return doc.dump() + "\n";
}

ExecutionGraph graph_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("graph: ") + e.what(), e.byte);
    }
    ExecutionGraph g;
    g.node_ids = doc.at("node_ids").get<std::vector<Address>>();
    g.edges_src = doc.at("edges").at(0).get<std::vector<std::uint32_t>>();
    g.edges_dst = doc.at("edges").at(1).get<std::vector<std::uint32_t>>();
    g.trace_len = doc.at("trace_len").get<std::size_t>();
    const auto& rows = doc.at("features");
    g.features = Matrix(rows.size(), rows.empty() ? 0 : rows.at(0).size());
    for (std::size_t i = 0; i < g.features.rows; ++i)
        for (std::size_t j = 0; j < g.features.cols; ++j)
            g.features.at(i, j) = rows.at(i).at(j).get<double>();
    if (g.edges_src.size() != g.edges_dst.size())
        throw ParseError("graph: src/dst edge arrays differ in length", 0);
    if (g.features.rows != g.node_ids.size())
        throw ParseError("graph: feature row count != node count", 0);
    for (std::size_t e = 0; e < g.edges_src.size(); ++e)
        if (g.edges_src[e] >= g.node_count() || g.edges_dst[e] >= g.node_count())
            throw ParseError("graph: edge index out of range", 0);
    return g;
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;

    void need(std::size_t k) const {
        if (pos + k > bytes.size())
            throw ParseError("graph: truncated record", pos);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v =
            static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[pos])) |
            static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[pos + 1]))
                << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(bytes[pos + i]))
                 << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(bytes[pos + i]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
};

}  // namespace

std::string graph_to_binary(const ExecutionGraph& g) {
    std::string out;
    out.append(kMagic, 4);
    put_u16(out, kFormatVersion);
    put_u16(out, kGraphRecordType);
    put_u64(out, g.node_ids.size());
    put_u64(out, g.edges_src.size());
    put_u64(out, g.features.cols);
    put_u64(out, g.trace_len);
    for (Address a : g.node_ids) put_u64(out, a);
    for (std::uint32_t s : g.edges_src) put_u32(out, s);
    for (std::uint32_t d : g.edges_dst) put_u32(out, d);
    for (double v : g.features.data) put_f64(out, v);
    return out;
}

ExecutionGraph graph_from_binary(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("graph: bad magic", 0);
    Reader r{bytes, 4};
    if (r.u16() != kFormatVersion)
        throw ParseError("graph: unsupported container version", 4);
    if (r.u16() != kGraphRecordType)
        throw ParseError("graph: not a graph record", 6);
    ExecutionGraph g;
    std::uint64_t n = r.u64();
    std::uint64_t m = r.u64();
    std::uint64_t f = r.u64();
    g.trace_len = r.u64();
    g.node_ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) g.node_ids.push_back(r.u64());
    g.edges_src.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) g.edges_src.push_back(r.u32());
    g.edges_dst.reserve(m);
    for (std::uint64_t i = 0; i < m; ++i) g.edges_dst.push_back(r.u32());
    g.features = Matrix(n, f);
    for (std::size_t i = 0; i < g.features.data.size(); ++i)
        g.features.data[i] = r.f64();
    if (r.pos != bytes.size())
        throw ParseError("graph: trailing bytes", r.pos);
    return g;
}

void save_graph(const ExecutionGraph& g, const std::filesystem::path& path) {
    std::string bytes =
        path.extension() == ".json" ? graph_to_json(g) : graph_to_binary(g);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

ExecutionGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graph file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string& bytes = ss.str();
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0)
        return graph_from_binary(bytes);
    return graph_from_json(bytes);
}

}  // namespace cfa
