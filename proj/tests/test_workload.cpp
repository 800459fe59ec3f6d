#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "tiersim/workload.hpp"

using namespace tiersim;

namespace {

WorkloadSpec basic_spec() {
    WorkloadSpec spec;
    spec.objects = {
        {"t1", ObjectKind::table, 0, 100},
        {"t1_idx", ObjectKind::index, 100, 20},
        {"tmp1", ObjectKind::temp, 120, 10},
    };
    QuerySpec q;
    q.query_id = "q1";
    q.phases.push_back(ScanPhase{"t1", 32});
    q.phases.push_back(RandomPhase{"t1", ObjectId("t1_idx"), 50, 0.99});
    q.phases.push_back(TempPhase{"tmp1", 10, 2, false});
    q.phases.push_back(UpdatePhase{"t1", 25});
    spec.queries.push_back(std::move(q));
    spec.interleave.mode = Interleave::Mode::serial;
    return spec;
}

std::string temp_path(const char* name) {
    return std::string("/tmp/tiersim_test_") + name;
}

} // namespace

TEST_CASE("scan phases cover the extent in ascending chunks") {
    WorkloadSpec spec;
    spec.objects = {{"t1", ObjectKind::table, 0, 100}};
    QuerySpec q;
    q.query_id = "q";
    q.phases.push_back(ScanPhase{"t1", 32});
    spec.queries.push_back(q);
    auto trace = generate_trace(spec, 1);
    REQUIRE(trace.size() == 4);
    std::uint64_t next = 0;
    for (const auto& r : trace) {
        CHECK(r.cls == RequestClass::sequential_read);
        CHECK(r.lbn == next);
        next += r.blocks;
    }
    CHECK(next == 100);
}

TEST_CASE("temp lifecycle counts: writes, reads per pass, one delete") {
    auto spec = basic_spec();
    auto trace = generate_trace(spec, 7);
    auto totals = class_record_totals(trace);
    CHECK(totals[RequestClass::temp_write] == 10);
    CHECK(totals[RequestClass::temp_read] == 20);
    CHECK(totals[RequestClass::temp_delete] == 1);
    // The delete command spans exactly the temp extent.
    for (const auto& r : trace)
        if (r.cls == RequestClass::temp_delete) {
            CHECK(r.lbn == 120);
            CHECK(r.blocks == 10);
            CHECK(r.direction == Direction::write);
        }
}

TEST_CASE("class record totals follow declared volumes") {
    auto spec = basic_spec();
    auto trace = generate_trace(spec, 3);
    auto totals = class_record_totals(trace);
    CHECK(totals[RequestClass::sequential_read] == 4); // ceil(100/32)
    CHECK(totals[RequestClass::random_read] == 100);   // 50 ops, index + table
    CHECK(totals[RequestClass::update] == 25);
}

TEST_CASE("legacy eviction scan replaces the delete command with tagged reads") {
    WorkloadSpec spec;
    spec.objects = {{"tmp1", ObjectKind::temp, 0, 80}};
    QuerySpec q;
    q.query_id = "q";
    q.phases.push_back(TempPhase{"tmp1", 80, 1, true});
    spec.queries.push_back(q);
    auto trace = generate_trace(spec, 1);
    std::uint64_t scan_blocks = 0;
    std::uint64_t scan_records = 0;
    for (const auto& r : trace)
        if (r.cls == RequestClass::temp_delete) {
            CHECK(r.direction == Direction::read);
            scan_records++;
            scan_blocks += r.blocks;
        }
    CHECK(scan_records == 3); // 80 blocks in chunks of 32
    CHECK(scan_blocks == 80);
}

TEST_CASE("zipf sampling matches the analytic top-rank mass") {
    WorkloadSpec spec;
    spec.objects = {{"t1", ObjectKind::table, 0, 1000}};
    QuerySpec q;
    q.query_id = "q";
    q.phases.push_back(RandomPhase{"t1", std::nullopt, 100000, 0.99});
    spec.queries.push_back(q);
    auto trace = generate_trace(spec, 20120827);

    std::map<std::uint64_t, std::uint64_t> freq;
    for (const auto& r : trace)
        freq[r.lbn]++;
    double top = static_cast<double>(freq[0]) / 100000.0;

    // Independent normalization: mass(rank 1) = 1 / sum_k k^-s.
    double norm = 0.0;
    for (int k = 1; k <= 1000; ++k)
        norm += std::pow(k, -0.99);
    double expected = 1.0 / norm;
    CHECK(std::abs(top - expected) <= 0.1 * expected);
}

TEST_CASE("generation is deterministic per (spec, seed)") {
    auto spec = basic_spec();
    auto a = generate_trace(spec, 99);
    auto b = generate_trace(spec, 99);
    CHECK(a == b);
    auto c = generate_trace(spec, 100);
    CHECK(a != c);
}

TEST_CASE("round-robin interleave permutes streams but keeps their order") {
    WorkloadSpec spec;
    spec.objects = {{"t1", ObjectKind::table, 0, 64}, {"t2", ObjectKind::table, 64, 64}};
    QuerySpec q1;
    q1.query_id = "a";
    q1.phases.push_back(ScanPhase{"t1", 8});
    QuerySpec q2;
    q2.query_id = "b";
    q2.phases.push_back(ScanPhase{"t2", 4});
    spec.queries = {q1, q2};
    spec.interleave = {Interleave::Mode::round_robin, 3};

    auto serial = generate_streams(spec, 5);
    auto mixed = generate_trace(spec, 5);

    REQUIRE(mixed.size() == serial[0].size() + serial[1].size());
    std::vector<TraceRecord> got_a, got_b;
    for (auto r : mixed) {
        r.seq = 0;
        (r.stream_id == "a" ? got_a : got_b).push_back(r);
    }
    for (auto& r : serial[0])
        r.seq = 0;
    for (auto& r : serial[1])
        r.seq = 0;
    CHECK(got_a == serial[0]);
    CHECK(got_b == serial[1]);
    // Chunked: the first three records come from stream a, then three from b.
    CHECK(mixed[0].stream_id == "a");
    CHECK(mixed[2].stream_id == "a");
    CHECK(mixed[3].stream_id == "b");
}

TEST_CASE("traces round-trip through the file format") {
    auto spec = basic_spec();
    auto trace = generate_trace(spec, 11);
    auto path = temp_path("roundtrip.jsonl");
    save_trace(trace, path);
    auto back = load_trace(path);
    CHECK(back == trace);
    std::remove(path.c_str());
}

TEST_CASE("empty trace file loads as an empty trace") {
    auto path = temp_path("empty.jsonl");
    { std::ofstream out(path); }
    CHECK(load_trace(path).empty());
    std::remove(path.c_str());
}

TEST_CASE("malformed lines are reported with their line number") {
    auto path = temp_path("bad.jsonl");
    {
        std::ofstream out(path);
        out << json{{"format_version", 1}}.dump() << "\n";
        out << "{ not json\n";
    }
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("trace line 2"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("unknown record fields are rejected") {
    auto path = temp_path("unknown.jsonl");
    {
        std::ofstream out(path);
        out << json{{"format_version", 1}}.dump() << "\n";
        json rec = {{"seq", 0},    {"stream_id", "q"}, {"class", "sequential_read"},
                    {"lbn", 0},    {"blocks", 1},      {"direction", "read"},
                    {"color", 7}};
        out << rec.dump() << "\n";
    }
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("unknown field"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("records outside their object's extent fail validation") {
    auto spec = basic_spec();
    auto trace = generate_trace(spec, 2);
    CHECK_NOTHROW(validate_trace_extents(trace, spec.objects));
    TraceRecord bad;
    bad.seq = trace.size();
    bad.stream_id = "q1";
    bad.cls = RequestClass::random_read;
    bad.oid = "t1";
    bad.lbn = 99;
    bad.blocks = 4; // crosses the extent end at 100
    trace.push_back(bad);
    CHECK_THROWS(validate_trace_extents(trace, spec.objects));
    trace.back().oid = "nonexistent";
    CHECK_THROWS(validate_trace_extents(trace, spec.objects));
}

TEST_CASE("spec validation: overlaps, dangling oids, misuse of kinds") {
    WorkloadSpec overlap;
    overlap.objects = {{"a", ObjectKind::table, 0, 100}, {"b", ObjectKind::table, 50, 100}};
    QuerySpec q;
    q.query_id = "q";
    q.phases.push_back(ScanPhase{"a", 32});
    overlap.queries.push_back(q);
    CHECK_THROWS(generate_trace(overlap, 1));

    WorkloadSpec dangling;
    dangling.objects = {{"a", ObjectKind::table, 0, 100}};
    QuerySpec q2;
    q2.query_id = "q";
    q2.phases.push_back(ScanPhase{"ghost", 32});
    dangling.queries.push_back(q2);
    CHECK_THROWS(generate_trace(dangling, 1));

    WorkloadSpec misuse;
    misuse.objects = {{"a", ObjectKind::table, 0, 100}};
    QuerySpec q3;
    q3.query_id = "q";
    q3.phases.push_back(TempPhase{"a", 10, 1, false});
    misuse.queries.push_back(q3);
    CHECK_THROWS(generate_trace(misuse, 1));
}

TEST_CASE("workload specs parse from json and reject unknown keys") {
    json j = {
        {"format_version", 1},
        {"objects",
         json::array({{{"oid", "t1"}, {"kind", "table"}, {"start_lbn", 0}, {"length_blocks", 64}}})},
        {"queries", json::array({{{"query_id", "q"},
                                  {"phases", json::array({{{"type", "scan"}, {"object", "t1"}}})}}})},
        {"interleave", {{"mode", "serial"}}},
    };
    auto spec = workload_spec_from_json(j);
    CHECK(spec.objects.size() == 1);
    CHECK(spec.queries.size() == 1);
    CHECK(spec.interleave.mode == Interleave::Mode::serial);

    json bad = j;
    bad["warmup"] = true;
    CHECK_THROWS(workload_spec_from_json(bad));
}
