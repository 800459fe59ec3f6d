#pragma once

// Trace generation and (de)serialization. A workload spec declares object
// extents, per-query plans and access phases; generation expands the phases
// into a replayable block-I/O trace, optionally interleaving the per-query
// streams round-robin. Identical (spec, seed) inputs yield byte-identical
// traces, so the sampler below avoids std::*_distribution (whose output is
// implementation-defined) and maps raw mt19937_64 bits itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tiersim/classify.hpp"
#include "tiersim/device.hpp"
#include "tiersim/json_util.hpp"
#include "tiersim/plan.hpp"

namespace tiersim {

inline constexpr int kTraceFormatVersion = 1;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    std::uint64_t below(std::uint64_t n) {
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)),
                                       n - 1);
    }

private:
    std::mt19937_64 eng_;
};

// Inverse-CDF Zipf sampler over ranks 0..n-1, P(rank r) proportional to
// 1/(r+1)^s. Rank 0 is the hottest.
class ZipfSampler {
public:
    ZipfSampler(std::uint64_t n, double skew) {
        if (n == 0)
            throw std::invalid_argument("zipf: empty universe");
        cdf_.reserve(n);
        double acc = 0.0;
        for (std::uint64_t r = 0; r < n; ++r) {
            acc += std::pow(static_cast<double>(r + 1), -skew);
            cdf_.push_back(acc);
        }
        total_ = acc;
    }

    std::uint64_t sample(Rng& rng) const {
        double u = rng.uniform01() * total_;
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end())
            --it;
        return static_cast<std::uint64_t>(it - cdf_.begin());
    }

    // Probability mass of a single rank; used by tests as an oracle.
    double mass(std::uint64_t rank) const {
        double w = rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
        return w / total_;
    }

private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

// ---------------------------------------------------------------------------
// Objects and trace records

enum class ObjectKind { table, index, temp };

inline const char* to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::table: return "table";
        case ObjectKind::index: return "index";
        case ObjectKind::temp: return "temp";
    }
    return "?";
}

inline ObjectKind object_kind_from_string(const std::string& s) {
    if (s == "table") return ObjectKind::table;
    if (s == "index") return ObjectKind::index;
    if (s == "temp") return ObjectKind::temp;
    throw std::runtime_error("unknown object kind \"" + s + "\"");
}

struct ObjectExtent {
    ObjectId oid;
    ObjectKind kind = ObjectKind::table;
    std::uint64_t start_lbn = 0;
    std::uint64_t length_blocks = 0;

    std::uint64_t end_lbn() const { return start_lbn + length_blocks; }
    bool covers(std::uint64_t lbn, std::uint32_t blocks) const {
        return lbn >= start_lbn && lbn + blocks <= end_lbn();
    }
};

struct TraceRecord {
    std::uint64_t seq = 0;
    std::optional<double> time_hint;
    std::string stream_id;
    RequestClass cls = RequestClass::sequential_read;
    std::optional<ObjectId> oid;
    std::uint64_t lbn = 0;
    std::uint32_t blocks = 1;
    Direction direction = Direction::read;
    // Present only in classified traces exported by the simulator.
    std::optional<std::string> priority;

    bool operator==(const TraceRecord&) const = default;
};

inline json trace_record_to_json(const TraceRecord& r) {
    json j;
    j["seq"] = r.seq;
    if (r.time_hint)
        j["time_hint"] = *r.time_hint;
    j["stream_id"] = r.stream_id;
    j["class"] = to_string(r.cls);
    if (r.oid)
        j["oid"] = *r.oid;
    j["lbn"] = r.lbn;
    j["blocks"] = r.blocks;
    j["direction"] = to_string(r.direction);
    if (r.priority)
        j["priority"] = *r.priority;
    return j;
}

inline TraceRecord trace_record_from_json(const json& j) {
    detail::expect_keys(
        j, {"seq", "time_hint", "stream_id", "class", "oid", "lbn", "blocks", "direction", "priority"},
        "trace record");
    TraceRecord r;
    r.seq = detail::require(j, "seq", "trace record").get<std::uint64_t>();
    if (j.contains("time_hint"))
        r.time_hint = j.at("time_hint").get<double>();
    r.stream_id = detail::require(j, "stream_id", "trace record").get<std::string>();
    r.cls = request_class_from_string(detail::require(j, "class", "trace record").get<std::string>());
    if (j.contains("oid"))
        r.oid = j.at("oid").get<std::string>();
    r.lbn = detail::require(j, "lbn", "trace record").get<std::uint64_t>();
    r.blocks = detail::require(j, "blocks", "trace record").get<std::uint32_t>();
    if (r.blocks == 0)
        throw std::runtime_error("trace record: blocks must be >= 1");
    std::string dir = detail::require(j, "direction", "trace record").get<std::string>();
    if (dir == "read")
        r.direction = Direction::read;
    else if (dir == "write")
        r.direction = Direction::write;
    else
        throw std::runtime_error("trace record: bad direction \"" + dir + "\"");
    if (j.contains("priority"))
        r.priority = j.at("priority").get<std::string>();
    return r;
}

// ---------------------------------------------------------------------------
// Workload spec

struct ScanPhase {
    ObjectId object;
    std::uint32_t chunk_blocks = 32;
};

struct RandomPhase {
    ObjectId object;                      // table; draws are Zipf over its extent
    std::optional<ObjectId> index_object; // when set, an index probe precedes each table read
    std::uint64_t ops = 0;
    double skew = 0.99;
};

struct TempPhase {
    ObjectId object; // temp extent
    std::uint64_t generate_blocks = 0;
    std::uint32_t consume_passes = 1;
    // Legacy mode: instead of one TRIM-style delete command, scan the extent
    // with eviction-priority reads (real transfers with the same cache effect).
    bool eviction_scan = false;
};

struct UpdatePhase {
    ObjectId object;
    std::uint64_t ops = 0;
};

using Phase = std::variant<ScanPhase, RandomPhase, TempPhase, UpdatePhase>;

struct QuerySpec {
    std::string query_id;
    std::optional<QueryPlanTree> plan; // optional for streams with no random phase
    std::vector<Phase> phases;
};

struct Interleave {
    enum class Mode { serial, round_robin };
    Mode mode = Mode::round_robin;
    std::uint32_t chunk = 8;
};

struct WorkloadSpec {
    std::vector<ObjectExtent> objects;
    std::vector<QuerySpec> queries;
    Interleave interleave;

    const ObjectExtent& extent(const ObjectId& oid) const {
        for (const auto& o : objects)
            if (o.oid == oid)
                return o;
        throw std::invalid_argument("unknown object \"" + oid + "\"");
    }
};

namespace detail {

inline void validate_spec(const WorkloadSpec& spec) {
    std::vector<ObjectExtent> sorted = spec.objects;
    std::sort(sorted.begin(), sorted.end(),
              [](const ObjectExtent& a, const ObjectExtent& b) { return a.start_lbn < b.start_lbn; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].length_blocks == 0)
            throw std::invalid_argument("object \"" + sorted[i].oid + "\": empty extent");
        if (i > 0 && sorted[i].start_lbn < sorted[i - 1].end_lbn())
            throw std::invalid_argument("extents of \"" + sorted[i - 1].oid + "\" and \"" +
                                        sorted[i].oid + "\" overlap");
        for (std::size_t k = i + 1; k < sorted.size(); ++k)
            if (sorted[k].oid == sorted[i].oid)
                throw std::invalid_argument("duplicate object \"" + sorted[i].oid + "\"");
    }

    std::vector<std::string> qids;
    std::vector<ObjectId> temp_owners;
    for (const auto& q : spec.queries) {
        if (std::find(qids.begin(), qids.end(), q.query_id) != qids.end())
            throw std::invalid_argument("duplicate query id \"" + q.query_id + "\"");
        qids.push_back(q.query_id);
        for (const auto& phase : q.phases) {
            if (const auto* p = std::get_if<ScanPhase>(&phase)) {
                if (spec.extent(p->object).kind == ObjectKind::temp)
                    throw std::invalid_argument("scan phase on temp object \"" + p->object + "\"");
                if (p->chunk_blocks == 0)
                    throw std::invalid_argument("scan phase: zero chunk size");
            } else if (const auto* p = std::get_if<RandomPhase>(&phase)) {
                if (spec.extent(p->object).kind != ObjectKind::table)
                    throw std::invalid_argument("random phase requires a table object");
                if (p->index_object && spec.extent(*p->index_object).kind != ObjectKind::index)
                    throw std::invalid_argument("random phase: \"" + *p->index_object +
                                                "\" is not an index");
                if (p->skew < 0.0)
                    throw std::invalid_argument("random phase: negative skew");
            } else if (const auto* p = std::get_if<TempPhase>(&phase)) {
                const auto& ext = spec.extent(p->object);
                if (ext.kind != ObjectKind::temp)
                    throw std::invalid_argument("temp phase requires a temp object");
                if (p->generate_blocks == 0 || p->generate_blocks > ext.length_blocks)
                    throw std::invalid_argument("temp phase: generated volume exceeds extent");
                if (std::find(temp_owners.begin(), temp_owners.end(), p->object) !=
                    temp_owners.end())
                    throw std::invalid_argument("temp object \"" + p->object +
                                                "\" used by more than one lifecycle");
                temp_owners.push_back(p->object);
            } else if (const auto* p = std::get_if<UpdatePhase>(&phase)) {
                if (spec.extent(p->object).kind == ObjectKind::temp)
                    throw std::invalid_argument("update phase on temp object");
            }
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Generation

namespace detail {

inline void emit_scan(const WorkloadSpec& spec, const ScanPhase& p, const std::string& qid,
                      std::vector<TraceRecord>& out) {
    const auto& ext = spec.extent(p.object);
    std::uint64_t lbn = ext.start_lbn;
    while (lbn < ext.end_lbn()) {
        TraceRecord r;
        r.stream_id = qid;
        r.cls = RequestClass::sequential_read;
        r.oid = p.object;
        r.lbn = lbn;
        r.blocks = static_cast<std::uint32_t>(
            std::min<std::uint64_t>(p.chunk_blocks, ext.end_lbn() - lbn));
        r.direction = Direction::read;
        out.push_back(std::move(r));
        lbn += p.chunk_blocks;
    }
}

inline void emit_random(const WorkloadSpec& spec, const RandomPhase& p, const std::string& qid,
                        Rng& rng, std::vector<TraceRecord>& out) {
    const auto& table = spec.extent(p.object);
    const ObjectExtent* index = p.index_object ? &spec.extent(*p.index_object) : nullptr;
    ZipfSampler zipf(table.length_blocks, p.skew);
    for (std::uint64_t op = 0; op < p.ops; ++op) {
        std::uint64_t rank = zipf.sample(rng);
        if (index) {
            // Probe the index block covering this key range first.
            std::uint64_t ib = rank * index->length_blocks / table.length_blocks;
            TraceRecord ir;
            ir.stream_id = qid;
            ir.cls = RequestClass::random_read;
            ir.oid = *p.index_object;
            ir.lbn = index->start_lbn + ib;
            ir.direction = Direction::read;
            out.push_back(std::move(ir));
        }
        TraceRecord tr;
        tr.stream_id = qid;
        tr.cls = RequestClass::random_read;
        tr.oid = p.object;
        tr.lbn = table.start_lbn + rank;
        tr.direction = Direction::read;
        out.push_back(std::move(tr));
    }
}

inline void emit_temp(const WorkloadSpec& spec, const TempPhase& p, const std::string& qid,
                      std::vector<TraceRecord>& out) {
    const auto& ext = spec.extent(p.object);
    for (std::uint64_t b = 0; b < p.generate_blocks; ++b) {
        TraceRecord r;
        r.stream_id = qid;
        r.cls = RequestClass::temp_write;
        r.oid = p.object;
        r.lbn = ext.start_lbn + b;
        r.direction = Direction::write;
        out.push_back(std::move(r));
    }
    for (std::uint32_t pass = 0; pass < p.consume_passes; ++pass) {
        for (std::uint64_t b = 0; b < p.generate_blocks; ++b) {
            TraceRecord r;
            r.stream_id = qid;
            r.cls = RequestClass::temp_read;
            r.oid = p.object;
            r.lbn = ext.start_lbn + b;
            r.direction = Direction::read;
            out.push_back(std::move(r));
        }
    }
    if (!p.eviction_scan) {
        TraceRecord r;
        r.stream_id = qid;
        r.cls = RequestClass::temp_delete;
        r.oid = p.object;
        r.lbn = ext.start_lbn;
        r.blocks = static_cast<std::uint32_t>(ext.length_blocks);
        r.direction = Direction::write; // pure command, no transfer
        out.push_back(std::move(r));
    } else {
        std::uint64_t lbn = ext.start_lbn;
        while (lbn < ext.end_lbn()) {
            TraceRecord r;
            r.stream_id = qid;
            r.cls = RequestClass::temp_delete;
            r.oid = p.object;
            r.lbn = lbn;
            r.blocks = static_cast<std::uint32_t>(std::min<std::uint64_t>(32, ext.end_lbn() - lbn));
            r.direction = Direction::read; // legacy scan: a real sequential read
            out.push_back(std::move(r));
            lbn += r.blocks;
        }
    }
}

inline void emit_update(const WorkloadSpec& spec, const UpdatePhase& p, const std::string& qid,
                        Rng& rng, std::vector<TraceRecord>& out) {
    const auto& ext = spec.extent(p.object);
    for (std::uint64_t op = 0; op < p.ops; ++op) {
        TraceRecord r;
        r.stream_id = qid;
        r.cls = RequestClass::update;
        r.oid = p.object;
        r.lbn = ext.start_lbn + rng.below(ext.length_blocks);
        r.direction = Direction::write;
        out.push_back(std::move(r));
    }
}

} // namespace detail

// Serial per-query streams; phase order as declared. Each query draws from
// its own seed so interleaving changes never alter stream contents.
inline std::vector<std::vector<TraceRecord>> generate_streams(const WorkloadSpec& spec,
                                                              std::uint64_t seed) {
    detail::validate_spec(spec);
    std::vector<std::vector<TraceRecord>> streams;
    for (std::size_t qi = 0; qi < spec.queries.size(); ++qi) {
        const auto& q = spec.queries[qi];
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (qi + 1)));
        std::vector<TraceRecord> records;
        for (const auto& phase : q.phases) {
            if (const auto* p = std::get_if<ScanPhase>(&phase))
                detail::emit_scan(spec, *p, q.query_id, records);
            else if (const auto* p = std::get_if<RandomPhase>(&phase))
                detail::emit_random(spec, *p, q.query_id, rng, records);
            else if (const auto* p = std::get_if<TempPhase>(&phase))
                detail::emit_temp(spec, *p, q.query_id, records);
            else if (const auto* p = std::get_if<UpdatePhase>(&phase))
                detail::emit_update(spec, *p, q.query_id, rng, records);
        }
        streams.push_back(std::move(records));
    }
    return streams;
}

inline std::vector<TraceRecord> interleave_streams(std::vector<std::vector<TraceRecord>> streams,
                                                   const Interleave& il) {
    std::vector<TraceRecord> out;
    std::size_t total = 0;
    for (const auto& s : streams)
        total += s.size();
    out.reserve(total);

    if (il.mode == Interleave::Mode::serial) {
        for (auto& s : streams)
            for (auto& r : s)
                out.push_back(std::move(r));
    } else {
        std::vector<std::size_t> cursor(streams.size(), 0);
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t si = 0; si < streams.size(); ++si) {
                for (std::uint32_t k = 0; k < il.chunk && cursor[si] < streams[si].size(); ++k) {
                    out.push_back(std::move(streams[si][cursor[si]++]));
                    progress = true;
                }
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].seq = i;
    return out;
}

inline std::vector<TraceRecord> generate_trace(const WorkloadSpec& spec, std::uint64_t seed) {
    return interleave_streams(generate_streams(spec, seed), spec.interleave);
}

// Every record must fall inside its named object's extent.
inline void validate_trace_extents(const std::vector<TraceRecord>& trace,
                                   const std::vector<ObjectExtent>& objects) {
    for (const auto& r : trace) {
        if (!r.oid)
            continue;
        const ObjectExtent* ext = nullptr;
        for (const auto& o : objects)
            if (o.oid == *r.oid) { ext = &o; break; }
        if (!ext)
            throw std::runtime_error("trace record " + std::to_string(r.seq) +
                                     ": unknown object \"" + *r.oid + "\"");
        if (!ext->covers(r.lbn, r.blocks))
            throw std::runtime_error("trace record " + std::to_string(r.seq) +
                                     ": range outside extent of \"" + *r.oid + "\"");
    }
}

inline std::map<RequestClass, std::uint64_t> class_record_totals(
    const std::vector<TraceRecord>& trace) {
    std::map<RequestClass, std::uint64_t> totals;
    for (const auto& r : trace)
        totals[r.cls]++;
    return totals;
}

// ---------------------------------------------------------------------------
// Trace files: one header line {"format_version":1}, then one record per line.

inline void save_trace(const std::vector<TraceRecord>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open \"" + path + "\" for writing");
    out << json{{"format_version", kTraceFormatVersion}}.dump() << '\n';
    for (const auto& r : trace)
        out << trace_record_to_json(r).dump() << '\n';
    if (!out)
        throw std::runtime_error("write to \"" + path + "\" failed");
}

inline std::vector<TraceRecord> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open trace \"" + path + "\"");
    std::vector<TraceRecord> trace;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!header_seen) {
                detail::expect_keys(j, {"format_version"}, "trace header");
                if (detail::require(j, "format_version", "trace header").get<int>() !=
                    kTraceFormatVersion)
                    throw std::runtime_error("unsupported trace format version");
                header_seen = true;
                continue;
            }
            trace.push_back(trace_record_from_json(j));
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!header_seen && line_no > 0)
        throw std::runtime_error("trace file missing format_version header");
    return trace;
}

// ---------------------------------------------------------------------------
// Workload spec JSON

inline Phase phase_from_json(const json& j) {
    std::string type = detail::require(j, "type", "phase").get<std::string>();
    if (type == "scan") {
        detail::expect_keys(j, {"type", "object", "chunk_blocks"}, "scan phase");
        ScanPhase p;
        p.object = detail::require(j, "object", "scan phase").get<std::string>();
        if (j.contains("chunk_blocks"))
            p.chunk_blocks = j.at("chunk_blocks").get<std::uint32_t>();
        return p;
    }
    if (type == "random") {
        detail::expect_keys(j, {"type", "object", "index_object", "ops", "skew"}, "random phase");
        RandomPhase p;
        p.object = detail::require(j, "object", "random phase").get<std::string>();
        if (j.contains("index_object"))
            p.index_object = j.at("index_object").get<std::string>();
        p.ops = detail::require(j, "ops", "random phase").get<std::uint64_t>();
        if (j.contains("skew"))
            p.skew = j.at("skew").get<double>();
        return p;
    }
    if (type == "temp") {
        detail::expect_keys(j, {"type", "object", "generate_blocks", "consume_passes", "eviction_scan"},
                            "temp phase");
        TempPhase p;
        p.object = detail::require(j, "object", "temp phase").get<std::string>();
        p.generate_blocks = detail::require(j, "generate_blocks", "temp phase").get<std::uint64_t>();
        if (j.contains("consume_passes"))
            p.consume_passes = j.at("consume_passes").get<std::uint32_t>();
        if (j.contains("eviction_scan"))
            p.eviction_scan = j.at("eviction_scan").get<bool>();
        return p;
    }
    if (type == "update") {
        detail::expect_keys(j, {"type", "object", "ops"}, "update phase");
        UpdatePhase p;
        p.object = detail::require(j, "object", "update phase").get<std::string>();
        p.ops = detail::require(j, "ops", "update phase").get<std::uint64_t>();
        return p;
    }
    throw std::runtime_error("unknown phase type \"" + type + "\"");
}

inline WorkloadSpec workload_spec_from_json(const json& j) {
    detail::expect_keys(j, {"format_version", "objects", "queries", "interleave"}, "workload spec");
    if (detail::require(j, "format_version", "workload spec").get<int>() != kTraceFormatVersion)
        throw std::runtime_error("unsupported workload spec format version");
    WorkloadSpec spec;
    for (const auto& jo : detail::require(j, "objects", "workload spec")) {
        detail::expect_keys(jo, {"oid", "kind", "start_lbn", "length_blocks"}, "object");
        ObjectExtent o;
        o.oid = detail::require(jo, "oid", "object").get<std::string>();
        o.kind = object_kind_from_string(detail::require(jo, "kind", "object").get<std::string>());
        o.start_lbn = detail::require(jo, "start_lbn", "object").get<std::uint64_t>();
        o.length_blocks = detail::require(jo, "length_blocks", "object").get<std::uint64_t>();
        spec.objects.push_back(std::move(o));
    }
    for (const auto& jq : detail::require(j, "queries", "workload spec")) {
        detail::expect_keys(jq, {"query_id", "plan", "phases"}, "query");
        QuerySpec q;
        q.query_id = detail::require(jq, "query_id", "query").get<std::string>();
        if (jq.contains("plan"))
            q.plan = plan_from_json(jq.at("plan"), q.query_id);
        for (const auto& jp : detail::require(jq, "phases", "query"))
            q.phases.push_back(phase_from_json(jp));
        spec.queries.push_back(std::move(q));
    }
    if (j.contains("interleave")) {
        const auto& ji = j.at("interleave");
        detail::expect_keys(ji, {"mode", "chunk"}, "interleave");
        std::string mode = detail::require(ji, "mode", "interleave").get<std::string>();
        if (mode == "serial")
            spec.interleave.mode = Interleave::Mode::serial;
        else if (mode == "round_robin")
            spec.interleave.mode = Interleave::Mode::round_robin;
        else
            throw std::runtime_error("unknown interleave mode \"" + mode + "\"");
        if (ji.contains("chunk"))
            spec.interleave.chunk = ji.at("chunk").get<std::uint32_t>();
        if (spec.interleave.chunk == 0)
            throw std::runtime_error("interleave chunk must be >= 1");
    }
    detail::validate_spec(spec);
    return spec;
}

inline WorkloadSpec load_workload_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open workload spec \"" + path + "\"");
    json j;
    in >> j;
    return workload_spec_from_json(j);
}

} // namespace tiersim
