#include "cfa/trace.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cfa/errors.hpp"
#include "json.hpp"

namespace cfa {

namespace {

constexpr char kMagic[4] = {'R', 'A', 'G', 'E'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::string& in, std::size_t pos) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(in[pos])) |
           static_cast<std::uint16_t>(static_cast<unsigned char>(in[pos + 1]))
               << 8;
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i]))
             << (8 * i);
    return v;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Parses one address occupying [begin, end) of `bytes`.
Address parse_address(const std::string& bytes, std::size_t begin,
                      std::size_t end) {
    if (begin == end) throw ParseError("blank line", begin);
    std::size_t pos = begin;
    bool hex = false;
    if (end - pos >= 2 && bytes[pos] == '0' &&
        (bytes[pos + 1] == 'x' || bytes[pos + 1] == 'X')) {
        hex = true;
        pos += 2;
        if (pos == end) throw ParseError("empty hex literal", pos);
    }
    Address value = 0;
    for (; pos < end; ++pos) {
        int d = hex ? hex_digit(bytes[pos])
                    : (bytes[pos] >= '0' && bytes[pos] <= '9'
                           ? bytes[pos] - '0'
                           : -1);
        if (d < 0) throw ParseError("invalid character in address", pos);
        Address base = hex ? 16 : 10;
        if (value > (UINT64_MAX - static_cast<Address>(d)) / base)
            throw ParseError("address does not fit in 64 bits", pos);
        value = value * base + static_cast<Address>(d);
    }
    return value;
}

Trace parse_text(const std::string& bytes) {
    if (bytes.empty()) throw EmptyTraceError("empty trace file");
    Trace trace;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos)
            throw ParseError("missing trailing newline", bytes.size());
        trace.steps.push_back(parse_address(bytes, pos, eol));
        pos = eol + 1;
    }
    return trace;
}

Trace parse_binary(const std::string& bytes) {
    if (bytes.empty()) throw EmptyTraceError("empty trace file");
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("bad magic", 0);
    if (bytes.size() < 6) throw ParseError("truncated header", bytes.size());
    if (get_u16(bytes, 4) != kFormatVersion)
        throw ParseError("unsupported container version", 4);
    if (bytes.size() < 14) throw ParseError("truncated header", bytes.size());
    std::uint64_t count = get_u64(bytes, 6);
    if (count == 0) throw EmptyTraceError("binary trace has zero records");
    if (bytes.size() != 14 + 8 * count)
        throw ParseError("truncated or oversized record section",
                         std::min<std::size_t>(bytes.size(), 14 + 8 * count));
    Trace trace;
    trace.steps.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
        trace.steps.push_back(get_u64(bytes, 14 + 8 * i));
    return trace;
}

std::string role_key(TraceRole r) { return to_string(r); }

TraceRole parse_role(const std::string& s, std::size_t offset) {
    if (s == "train") return TraceRole::train;
    if (s == "validation") return TraceRole::validation;
    if (s == "attest") return TraceRole::attest;
    if (s == "attack") return TraceRole::attack;
    throw ParseError("unknown manifest role '" + s + "'", offset);
}

TraceLabel parse_label(const std::string& s, std::size_t offset) {
    if (s == "benign") return TraceLabel::benign;
    if (s == "rop") return TraceLabel::rop;
    if (s == "dop") return TraceLabel::dop;
    if (s == "unknown") return TraceLabel::unknown;
    throw ParseError("unknown manifest label '" + s + "'", offset);
}

}  // namespace

Trace parse_trace(const std::string& bytes, TraceFormat format) {
    return format == TraceFormat::text ? parse_text(bytes)
                                       : parse_binary(bytes);
}

std::string write_trace(const Trace& trace, TraceFormat format) {
    if (trace.steps.empty())
        throw EmptyTraceError("refusing to serialize an empty trace");
    std::string out;
    if (format == TraceFormat::text) {
        char buf[32];
        for (Address a : trace.steps) {
            int n = std::snprintf(buf, sizeof(buf), "0x%llx\n",
                                  static_cast<unsigned long long>(a));
            out.append(buf, static_cast<std::size_t>(n));
        }
    } else {
        out.append(kMagic, 4);
        put_u16(out, kFormatVersion);
        put_u64(out, trace.steps.size());
        for (Address a : trace.steps) put_u64(out, a);
    }
    return out;
}

Trace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string bytes = ss.str();
    TraceFormat fmt =
        bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0
            ? TraceFormat::binary
            : TraceFormat::text;
    Trace t = parse_trace(bytes, fmt);
    t.source_id = path.string();
    return t;
}

void save_trace(const Trace& trace, const std::filesystem::path& path,
                TraceFormat format) {
    std::string bytes = write_trace(trace, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

TraceStats trace_stats(const Trace& trace) {
    TraceStats s;
    s.length = trace.steps.size();
    std::unordered_set<Address> uniq(trace.steps.begin(), trace.steps.end());
    s.unique_addresses = uniq.size();
    char buf[32];
    for (Address a : trace.steps)
        s.byte_size_text += static_cast<std::size_t>(std::snprintf(
            buf, sizeof(buf), "0x%llx\n", static_cast<unsigned long long>(a)));
    s.byte_size_binary = 14 + 8 * trace.steps.size();
    return s;
}

const ManifestEntry& CorpusManifest::train_entry() const {
    for (const auto& e : entries)
        if (e.role == TraceRole::train) return e;
    throw ConfigError("manifest has no train entry");
}

std::vector<const ManifestEntry*> CorpusManifest::with_role(
    TraceRole role) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.role == role) out.push_back(&e);
    return out;
}

CorpusManifest parse_manifest(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what(), e.byte);
    }
    if (!doc.is_array()) throw ParseError("manifest must be a JSON array", 0);
    CorpusManifest m;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("path") ||
            !item.contains("role") || !item.contains("label"))
            throw ParseError("manifest entry needs path/role/label", 0);
        for (const auto& [key, _] : item.items())
            if (key != "path" && key != "role" && key != "label")
                throw ParseError("unknown manifest key '" + key + "'", 0);
        ManifestEntry e;
        e.path = item.at("path").get<std::string>();
        e.role = parse_role(item.at("role").get<std::string>(), 0);
        e.label = parse_label(item.at("label").get<std::string>(), 0);
        m.entries.push_back(std::move(e));
    }
    std::size_t trains = 0, validations = 0;
    for (const auto& e : m.entries) {
        trains += e.role == TraceRole::train;
        validations += e.role == TraceRole::validation;
    }
    if (trains != 1)
        throw ConfigError("manifest must contain exactly one train entry, got " +
                          std::to_string(trains));
    if (validations < 1)
        throw ConfigError("manifest needs at least one validation entry");
    return m;
}

std::string write_manifest(const CorpusManifest& manifest) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& e : manifest.entries)
        doc.push_back({{"path", e.path},
                       {"role", role_key(e.role)},
                       {"label", to_string(e.label)}});
    return doc.dump(2) + "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

std::string to_string(TraceRole role) {
    switch (role) {
        case TraceRole::train: return "train";
        case TraceRole::validation: return "validation";
        case TraceRole::attest: return "attest";
        case TraceRole::attack: return "attack";
    }
    return "?";
}

std::string to_string(TraceLabel label) {
    switch (label) {
        case TraceLabel::benign: return "benign";
        case TraceLabel::rop: return "rop";
        case TraceLabel::dop: return "dop";
        case TraceLabel::unknown: return "unknown";
    }
    return "?";
}

}  // namespace cfa
