#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfa {

using Address = std::uint64_t;

// One program execution: the ordered basic-block start addresses the
// program counter traversed. Addresses are opaque 64-bit identifiers.
struct Trace {
    std::vector<Address> steps;
    std::string source_id;

    bool operator==(const Trace& other) const { return steps == other.steps; }
    std::size_t size() const { return steps.size(); }
};

enum class TraceFormat { text, binary };

struct TraceStats {
    std::size_t length = 0;
    std::size_t unique_addresses = 0;
    std::size_t byte_size_text = 0;
    std::size_t byte_size_binary = 0;
};

// Text container: one address per line, 0x-prefixed hex or decimal, each
// line '\n'-terminated, no blank lines.
// Binary container: magic "RAGE", version u16 LE (=1), count u64 LE, then
// count x u64 LE addresses.
Trace parse_trace(const std::string& bytes, TraceFormat format);
std::string write_trace(const Trace& trace, TraceFormat format);

Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path,
                TraceFormat format);

TraceStats trace_stats(const Trace& trace);

enum class TraceRole { train, validation, attest, attack };
enum class TraceLabel { benign, rop, dop, unknown };

struct ManifestEntry {
    std::string path;
    TraceRole role;
    TraceLabel label;
};

// Corpus manifest: JSON array of {path, role, label}. Exactly one entry has
// role "train" and at least one has role "validation".
struct CorpusManifest {
    std::vector<ManifestEntry> entries;

    const ManifestEntry& train_entry() const;
    std::vector<const ManifestEntry*> with_role(TraceRole role) const;
};

CorpusManifest parse_manifest(const std::string& json_text);
std::string write_manifest(const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& path);

std::string to_string(TraceRole role);
std::string to_string(TraceLabel label);

}  // namespace cfa
