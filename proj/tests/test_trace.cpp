#include <string>

#include "cfa/errors.hpp"
#include "cfa/rng.hpp"
#include "cfa/trace.hpp"
#include "doctest.h"

using namespace cfa;

TEST_CASE("text parse transcribes addresses in order") {
    Trace t = parse_trace("0x400a\n0x400b\n0x400a\n", TraceFormat::text);
    REQUIRE(t.steps == std::vector<Address>{0x400a, 0x400b, 0x400a});
}

TEST_CASE("text parse accepts decimal an keeps order") {
    Trace t = parse_trace("2\n1\n2\n", TraceFormat::text);
    REQUIRE(t.steps == std::vector<Address>{2, 1, 2});
}

TEST_CASE("text writer emits lowercase hex lines") {
    Trace t;
    t.steps = {0x1};
    CHECK(write_trace(t, TraceFormat::text) == "0x1\n");
}

TEST_CASE("binary layout is magic, version, count, records") {
    Trace t;
    t.steps = {1, 2, 3};
    std::string bytes = write_trace(t, TraceFormat::binary);
    REQUIRE(bytes.size() == 14 + 3 * 8);
    CHECK(bytes.substr(0, 4) == "RAGE");
    CHECK(bytes[4] == 1);  // version u16 LE
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 3);  // count u64 LE
    for (int i = 7; i < 14; ++i) CHECK(bytes[i] == 0);
    CHECK(bytes[14] == 1);
    CHECK(bytes[22] == 2);
    CHECK(bytes[30] == 3);
}

TEST_CASE("binary header with count zero reports an empty trace") {
    std::string bytes = "RAGE";
    bytes += std::string("\x01\x00", 2);
    bytes += std::string(8, '\x00');
    CHECK_THROWS_AS(parse_trace(bytes, TraceFormat::binary), EmptyTraceError);
}

TEST_CASE("malformed inputs carry byte offsets") {
    CHECK_THROWS_AS(parse_trace("", TraceFormat::text), EmptyTraceError);
    CHECK_THROWS_AS(parse_trace("", TraceFormat::binary), EmptyTraceError);

    try {
        parse_trace("0x1\n0xzz\n", TraceFormat::text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 6);
    }

    CHECK_THROWS_AS(parse_trace("0x1\n\n0x2\n", TraceFormat::text), ParseError);
    CHECK_THROWS_AS(parse_trace("0x1", TraceFormat::text), ParseError);
    CHECK_THROWS_AS(parse_trace("0x10000000000000000\n", TraceFormat::text),
                    ParseError);
    CHECK_THROWS_AS(parse_trace("18446744073709551616\n", TraceFormat::text),
                    ParseError);

    CHECK_THROWS_AS(parse_trace("BOGUS bytes", TraceFormat::binary), ParseError);
    Trace t;
    t.steps = {1, 2, 3};
    std::string bytes = write_trace(t, TraceFormat::binary);
    CHECK_THROWS_AS(parse_trace(bytes.substr(0, bytes.size() - 3),
                                TraceFormat::binary),
                    ParseError);
    CHECK_THROWS_AS(parse_trace(bytes + "x", TraceFormat::binary), ParseError);
}

TEST_CASE("write rejects empty traces") {
    Trace t;
    CHECK_THROWS_AS(write_trace(t, TraceFormat::text), EmptyTraceError);
    CHECK_THROWS_AS(write_trace(t, TraceFormat::binary), EmptyTraceError);
}

TEST_CASE("round trip over a large random trace, both formats") {
    Rng rng(42);
    Trace t;
    t.steps.reserve(1000000);
    for (std::size_t i = 0; i < 1000000; ++i) t.steps.push_back(rng.next_u64());
    CHECK(parse_trace(write_trace(t, TraceFormat::text), TraceFormat::text) ==
          t);

    Trace small;
    for (std::size_t i = 0; i < 100000; ++i) small.steps.push_back(rng.next_u64());
    CHECK(parse_trace(write_trace(small, TraceFormat::binary),
                      TraceFormat::binary) == small);
}

TEST_CASE("trace stats") {
    Trace t;
    t.steps = {10, 20, 10};
    TraceStats s = trace_stats(t);
    CHECK(s.length == 3);
    CHECK(s.unique_addresses == 2);
    CHECK(s.byte_size_text == std::string("0xa\n0x14\n0xa\n").size());
    CHECK(s.byte_size_binary == 14 + 3 * 8);

    CHECK(trace_stats(Trace{}).length == 0);
    CHECK(trace_stats(Trace{}).unique_addresses == 0);
}

TEST_CASE("trace stats at key-exchange scale counts unique nodes") {
    // 1921 distinct blocks revisited many times.
    Rng rng(7);
    Trace t;
    for (std::size_t i = 0; i < 1921; ++i) t.steps.push_back(0x1000 + i);
    for (std::size_t i = 0; i < 20000; ++i)
        t.steps.push_back(0x1000 + rng.uniform_index(1921));
    CHECK(trace_stats(t).unique_addresses == 1921);
}

TEST_CASE("manifest parses, validates and round-trips") {
    std::string text = R"([
      {"path": "t0.trace", "role": "train", "label": "benign"},
      {"path": "v1.trace", "role": "validation", "label": "benign"},
      {"path": "a1.trace", "role": "attack", "label": "rop"}
    ])";
    CorpusManifest m = parse_manifest(text);
    REQUIRE(m.entries.size() == 3);
    CHECK(m.train_entry().path == "t0.trace");
    CHECK(m.with_role(TraceRole::validation).size() == 1);
    CHECK(m.entries[2].label == TraceLabel::rop);

    CorpusManifest again = parse_manifest(write_manifest(m));
    CHECK(again.entries.size() == 3);
    CHECK(again.entries[1].path == "v1.trace");
}

TEST_CASE("manifest invariants") {
    CHECK_THROWS_AS(
        parse_manifest(
            R"([{"path":"a","role":"validation","label":"benign"}])"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_manifest(
            R"([{"path":"a","role":"train","label":"benign"},
                {"path":"b","role":"train","label":"benign"},
                {"path":"c","role":"validation","label":"benign"}])"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_manifest(R"([{"path":"a","role":"train","label":"benign"}])"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_manifest(
            R"([{"path":"a","role":"pilot","label":"benign"}])"),
        ParseError);
    CHECK_THROWS_AS(
        parse_manifest(
            R"([{"path":"a","role":"train","label":"benign","x":1}])"),
        ParseError);
    CHECK_THROWS_AS(parse_manifest("{not json"), ParseError);
}
