#pragma once

// Trace replay against one of four storage configurations:
//
//   hdd_only  - every request served by the lower-level device
//   ssd_only  - every request served at cache-device rates
//   lru       - one undifferentiated LRU pool admitting all reads and writes
//   hstorage  - requests classified per query-plan semantics, then applied
//               through the priority-group cache engine
//
// Replay is a deterministic event loop over the trace order. Streams are
// closed-loop: a stream's next request starts only after its previous one
// completed; the two devices are FCFS servers shared by all streams. Time is
// charged per the first-order model: portions served by the cache device at
// SSD rates, lower-level fetches, bypasses and writebacks at HDD rates,
// metadata-only commands free.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiersim/cache.hpp"
#include "tiersim/classify.hpp"
#include "tiersim/device.hpp"
#include "tiersim/json_util.hpp"
#include "tiersim/plan.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

enum class StorageMode { hdd_only, ssd_only, lru, hstorage };

inline const char* to_string(StorageMode m) {
    switch (m) {
        case StorageMode::hdd_only: return "hdd_only";
        case StorageMode::ssd_only: return "ssd_only";
        case StorageMode::lru: return "lru";
        case StorageMode::hstorage: return "hstorage";
    }
    return "?";
}

inline StorageMode storage_mode_from_string(const std::string& s) {
    if (s == "hdd_only") return StorageMode::hdd_only;
    if (s == "ssd_only") return StorageMode::ssd_only;
    if (s == "lru") return StorageMode::lru;
    if (s == "hstorage") return StorageMode::hstorage;
    throw std::runtime_error("unknown storage mode \"" + s + "\"");
}

struct StorageConfig {
    StorageMode mode = StorageMode::hstorage;
    std::uint64_t cache_capacity_blocks = 0; // used by lru/hstorage only
    PriorityPolicy policy;
    DeviceProfile ssd = DeviceProfile::default_ssd();
    DeviceProfile hdd = DeviceProfile::default_hdd();

    void validate() const {
        policy.validate();
        ssd.validate();
        hdd.validate();
        if ((mode == StorageMode::lru || mode == StorageMode::hstorage) &&
            cache_capacity_blocks == 0)
            throw std::invalid_argument("cache mode requires cache_capacity_blocks > 0");
    }
};

inline StorageConfig storage_config_from_json(const json& j) {
    detail::expect_keys(j, {"mode", "cache_capacity_blocks", "policy", "devices"}, "config");
    StorageConfig c;
    c.mode = storage_mode_from_string(detail::require(j, "mode", "config").get<std::string>());
    if (j.contains("cache_capacity_blocks"))
        c.cache_capacity_blocks = j.at("cache_capacity_blocks").get<std::uint64_t>();
    if (j.contains("policy"))
        c.policy = policy_from_json(j.at("policy"));
    if (j.contains("devices")) {
        detail::expect_keys(j.at("devices"), {"ssd", "hdd"}, "devices");
        if (j.at("devices").contains("ssd"))
            c.ssd = device_profile_from_json(j.at("devices").at("ssd"));
        if (j.at("devices").contains("hdd"))
            c.hdd = device_profile_from_json(j.at("devices").at("hdd"));
    }
    c.validate();
    return c;
}

inline json storage_config_to_json(const StorageConfig& c) {
    return json{{"mode", to_string(c.mode)},
                {"cache_capacity_blocks", c.cache_capacity_blocks},
                {"policy", policy_to_json(c.policy)},
                {"devices",
                 json{{"ssd", device_profile_to_json(c.ssd)},
                      {"hdd", device_profile_to_json(c.hdd)}}}};
}

inline StorageConfig load_storage_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config \"" + path + "\"");
    json j;
    in >> j;
    return storage_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports

struct CategoryStats {
    std::uint64_t accessed_blocks = 0;
    std::uint64_t cache_hits = 0;
    double hit_ratio() const {
        return accessed_blocks == 0 ? 0.0
                                    : static_cast<double>(cache_hits) /
                                          static_cast<double>(accessed_blocks);
    }
};

struct StreamStats {
    std::uint64_t accessed_blocks = 0;
    std::uint64_t cache_hits = 0;
    double simulated_time_us = 0.0;
    double hit_ratio() const {
        return accessed_blocks == 0 ? 0.0
                                    : static_cast<double>(cache_hits) /
                                          static_cast<double>(accessed_blocks);
    }
};

struct SimCounters {
    std::uint64_t read_allocations = 0;
    std::uint64_t write_allocations = 0;
    std::uint64_t bypassed_reads = 0;
    std::uint64_t bypassed_writes = 0;
    std::uint64_t reallocations = 0;
    std::uint64_t evictions = 0;
    std::uint64_t writebacks = 0;
    std::uint64_t flushes = 0;
    std::uint64_t trims = 0;

    std::uint64_t bypasses() const { return bypassed_reads + bypassed_writes; }
};

struct SimReport {
    StorageMode mode = StorageMode::hdd_only;
    std::map<std::string, CategoryStats> per_class;
    std::map<std::string, CategoryStats> per_priority; // classified modes only
    std::map<std::string, StreamStats> per_stream;
    CategoryStats reads;
    CategoryStats writes;
    SimCounters counters;
    double total_simulated_time_us = 0.0;

    CategoryStats totals() const {
        return CategoryStats{reads.accessed_blocks + writes.accessed_blocks,
                             reads.cache_hits + writes.cache_hits};
    }
};

inline json category_to_json(const CategoryStats& s) {
    return json{{"accessed_blocks", s.accessed_blocks},
                {"cache_hits", s.cache_hits},
                {"hit_ratio", s.hit_ratio()}};
}

inline json report_to_json(const SimReport& r) {
    json per_class = json::object();
    for (const auto& [k, v] : r.per_class)
        per_class[k] = category_to_json(v);
    json per_priority = json::object();
    for (const auto& [k, v] : r.per_priority)
        per_priority[k] = category_to_json(v);
    json per_stream = json::object();
    for (const auto& [k, v] : r.per_stream)
        per_stream[k] = json{{"accessed_blocks", v.accessed_blocks},
                             {"cache_hits", v.cache_hits},
                             {"hit_ratio", v.hit_ratio()},
                             {"simulated_time_us", v.simulated_time_us}};
    return json{{"mode", to_string(r.mode)},
                {"total_simulated_time_us", r.total_simulated_time_us},
                {"totals", category_to_json(r.totals())},
                {"reads", category_to_json(r.reads)},
                {"writes", category_to_json(r.writes)},
                {"per_class", per_class},
                {"per_priority", per_priority},
                {"per_stream", per_stream},
                {"counters",
                 json{{"read_allocations", r.counters.read_allocations},
                      {"write_allocations", r.counters.write_allocations},
                      {"bypassed_reads", r.counters.bypassed_reads},
                      {"bypassed_writes", r.counters.bypassed_writes},
                      {"reallocations", r.counters.reallocations},
                      {"evictions", r.counters.evictions},
                      {"writebacks", r.counters.writebacks},
                      {"flushes", r.counters.flushes},
                      {"trims", r.counters.trims}}}};
}

// ---------------------------------------------------------------------------
// Replay

namespace detail {

inline bool sequential_class(RequestClass c) {
    switch (c) {
        case RequestClass::sequential_read:
        case RequestClass::sequential_write:
        case RequestClass::temp_read:
        case RequestClass::temp_write:
        case RequestClass::temp_delete:
            return true;
        case RequestClass::random_read:
        case RequestClass::random_write:
        case RequestClass::update:
            return false;
    }
    return false;
}

struct DeviceQueue {
    const DeviceProfile* profile;
    double free_at_us = 0.0;

    // FCFS: the op starts when both the stream and the device are ready.
    double serve(double stream_clock, const DeviceOp& op) {
        double start = std::max(stream_clock, free_at_us);
        double end = start + service_time_us(*profile, op);
        free_at_us = end;
        return end;
    }
};

struct StreamState {
    double clock_us = 0.0;
    std::uint64_t remaining = 0;
    bool registered = false;
};

} // namespace detail

inline std::map<std::string, RandomAccessSummary> plan_summaries(const WorkloadSpec& spec) {
    std::map<std::string, RandomAccessSummary> out;
    for (const auto& q : spec.queries) {
        if (q.plan)
            out.emplace(q.query_id, random_access_summary(*q.plan));
        else
            out.emplace(q.query_id, RandomAccessSummary{});
    }
    return out;
}

namespace detail {

// Replay position order: trace order, or time_hint order when every record
// carries a hint.
inline std::vector<std::size_t> replay_order(const std::vector<TraceRecord>& trace) {
    std::vector<std::size_t> order(trace.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    bool all_hinted = !trace.empty();
    for (const auto& r : trace)
        if (!r.time_hint)
            all_hinted = false;
    if (all_hinted)
        std::stable_sort(order.begin(), order.end(), [&trace](std::size_t a, std::size_t b) {
            return *trace[a].time_hint < *trace[b].time_hint;
        });
    return order;
}

} // namespace detail

// Annotates every record with the priority the live registry assigns at its
// replay position; stream plans register at each stream's first record and
// leave after its last, exactly as during a run.
inline std::vector<TraceRecord> classify_trace(std::vector<TraceRecord> trace,
                                               const std::map<std::string, RandomAccessSummary>& plans,
                                               const PriorityPolicy& policy) {
    policy.validate();
    auto order = detail::replay_order(trace);
    std::map<std::string, std::uint64_t> remaining;
    for (const auto& r : trace)
        remaining[r.stream_id]++;
    ConcurrencyRegistry registry;
    std::set<std::string> registered;
    for (std::size_t pos : order) {
        TraceRecord& rec = trace[pos];
        if (!registered.count(rec.stream_id)) {
            auto it = plans.find(rec.stream_id);
            registry.register_query(rec.stream_id,
                                    it == plans.end() ? RandomAccessSummary{} : it->second);
            registered.insert(rec.stream_id);
        }
        rec.priority = classify_request(rec.cls, rec.oid, registry, policy).label();
        if (--remaining.at(rec.stream_id) == 0)
            registry.unregister_query(rec.stream_id);
    }
    return trace;
}

inline SimReport run(const StorageConfig& config, const std::vector<TraceRecord>& trace,
                     const std::map<std::string, RandomAccessSummary>& plans = {},
                     std::vector<ActionRecord>* action_log = nullptr) {
    config.validate();
    SimReport report;
    report.mode = config.mode;

    auto order = detail::replay_order(trace);

    std::map<std::string, detail::StreamState> streams;
    for (const auto& r : trace)
        streams[r.stream_id].remaining++;

    detail::DeviceQueue ssd{&config.ssd};
    detail::DeviceQueue hdd{&config.hdd};

    const bool cached_mode = config.mode == StorageMode::lru || config.mode == StorageMode::hstorage;
    std::optional<CacheEngine> engine;
    if (config.mode == StorageMode::lru)
        engine.emplace(config.cache_capacity_blocks, 2, 2, 0);
    else if (config.mode == StorageMode::hstorage)
        engine.emplace(CacheEngine::from_policy(config.cache_capacity_blocks, config.policy));
    if (engine && action_log)
        engine->enable_action_log(true);

    ConcurrencyRegistry registry;

    auto class_stats = [&report](RequestClass c) -> CategoryStats& {
        return report.per_class[to_string(c)];
    };

    for (std::size_t pos : order) {
        const TraceRecord& rec = trace[pos];
        auto& stream = streams.at(rec.stream_id);
        auto& sstat = report.per_stream[rec.stream_id];
        const bool seq = detail::sequential_class(rec.cls);
        CategoryStats& dir_stats = rec.direction == Direction::read ? report.reads : report.writes;

        if (config.mode == StorageMode::hstorage && !stream.registered) {
            auto it = plans.find(rec.stream_id);
            registry.register_query(rec.stream_id,
                                    it == plans.end() ? RandomAccessSummary{} : it->second);
            stream.registered = true;
        }

        const bool pure_trim =
            rec.cls == RequestClass::temp_delete && rec.direction == Direction::write;

        if (!cached_mode) {
            // Single device; delete commands carry no transfer unless issued
            // as legacy eviction-scan reads.
            if (!pure_trim) {
                detail::DeviceQueue& dev = config.mode == StorageMode::hdd_only ? hdd : ssd;
                stream.clock_us =
                    dev.serve(stream.clock_us, DeviceOp{rec.direction, seq, rec.blocks});
                class_stats(rec.cls).accessed_blocks += rec.blocks;
                dir_stats.accessed_blocks += rec.blocks;
                sstat.accessed_blocks += rec.blocks;
            }
        } else if (pure_trim && config.mode == StorageMode::lru) {
            // A legacy pool never learns about deletions.
        } else if (pure_trim) {
            engine->trim(rec.lbn, rec.blocks);
            report.counters.trims++;
        } else {
            Priority prio = Priority::caching(1);
            if (config.mode == StorageMode::hstorage) {
                try {
                    prio = classify_request(rec.cls, rec.oid, registry, config.policy);
                } catch (const std::exception& e) {
                    throw std::runtime_error("trace record " + std::to_string(rec.seq) +
                                             " (stream \"" + rec.stream_id + "\"): " + e.what());
                }
            }
            auto outcomes = engine->access(rec.lbn, rec.blocks, rec.direction, prio);

            CategoryStats& cstat = class_stats(rec.cls);
            CategoryStats* pstat = nullptr;
            if (config.mode == StorageMode::hstorage)
                pstat = &report.per_priority[prio.label()];

            // Charge consecutive same-service blocks as one device op.
            enum class Kind { hit, fetch, write_alloc, bypass };
            Kind run_kind = Kind::hit;
            unsigned run_len = 0;
            auto charge = [&](Kind k, unsigned n) {
                if (n == 0)
                    return;
                switch (k) {
                    case Kind::hit:
                    case Kind::write_alloc:
                        stream.clock_us =
                            ssd.serve(stream.clock_us, DeviceOp{rec.direction, seq, n});
                        break;
                    case Kind::fetch:
                        stream.clock_us =
                            hdd.serve(stream.clock_us, DeviceOp{Direction::read, seq, n});
                        break;
                    case Kind::bypass:
                        stream.clock_us =
                            hdd.serve(stream.clock_us, DeviceOp{rec.direction, seq, n});
                        break;
                }
            };

            unsigned writebacks = 0;
            for (const auto& out : outcomes) {
                Kind k = Kind::hit;
                bool hit = false;
                for (CacheAction a : out.actions) {
                    switch (a) {
                        case CacheAction::hit:
                            hit = true;
                            k = Kind::hit;
                            break;
                        case CacheAction::read_allocation:
                            k = Kind::fetch;
                            report.counters.read_allocations++;
                            break;
                        case CacheAction::write_allocation:
                            k = Kind::write_alloc;
                            report.counters.write_allocations++;
                            break;
                        case CacheAction::bypass:
                            k = Kind::bypass;
                            if (rec.direction == Direction::read)
                                report.counters.bypassed_reads++;
                            else
                                report.counters.bypassed_writes++;
                            break;
                        case CacheAction::reallocation:
                            report.counters.reallocations++;
                            break;
                        case CacheAction::eviction:
                            report.counters.evictions++;
                            break;
                        case CacheAction::writeback:
                            report.counters.writebacks++;
                            writebacks++;
                            break;
                        case CacheAction::flush:
                            report.counters.flushes++;
                            break;
                    }
                }
                cstat.accessed_blocks++;
                dir_stats.accessed_blocks++;
                sstat.accessed_blocks++;
                if (pstat)
                    pstat->accessed_blocks++;
                if (hit) {
                    cstat.cache_hits++;
                    dir_stats.cache_hits++;
                    sstat.cache_hits++;
                    if (pstat)
                        pstat->cache_hits++;
                }
                if (run_len > 0 && k != run_kind) {
                    charge(run_kind, run_len);
                    run_len = 0;
                }
                run_kind = k;
                run_len++;
            }
            charge(run_kind, run_len);
            if (writebacks > 0)
                stream.clock_us =
                    hdd.serve(stream.clock_us, DeviceOp{Direction::write, false, writebacks});
        }

        sstat.simulated_time_us = stream.clock_us;
        stream.remaining--;
        if (config.mode == StorageMode::hstorage && stream.remaining == 0) {
            registry.unregister_query(rec.stream_id);
            stream.registered = false;
        }
    }

    for (const auto& [sid, st] : report.per_stream)
        report.total_simulated_time_us = std::max(report.total_simulated_time_us, st.simulated_time_us);

    if (engine && action_log)
        *action_log = engine->action_log();
    return report;
}

// ---------------------------------------------------------------------------
// Side-by-side comparison

struct ComparisonReport {
    std::vector<SimReport> runs;
};

inline ComparisonReport compare(const std::vector<StorageConfig>& configs,
                                const std::vector<TraceRecord>& trace,
                                const std::map<std::string, RandomAccessSummary>& plans = {}) {
    ComparisonReport cr;
    for (const auto& c : configs)
        cr.runs.push_back(run(c, trace, plans));
    return cr;
}

inline json comparison_to_json(const ComparisonReport& cr) {
    json runs = json::array();
    for (const auto& r : cr.runs)
        runs.push_back(report_to_json(r));
    return json{{"runs", runs}};
}

// Plot-ready long format: one (config, metric, value) row per line.
inline std::string comparison_to_csv(const ComparisonReport& cr) {
    std::ostringstream out;
    out << "config,metric,value\n";
    for (const auto& r : cr.runs) {
        const std::string m = to_string(r.mode);
        auto row = [&](const std::string& metric, double value) {
            out << m << ',' << metric << ',' << json(value).dump() << '\n';
        };
        row("total_simulated_time_us", r.total_simulated_time_us);
        row("accessed_blocks", static_cast<double>(r.totals().accessed_blocks));
        row("cache_hits", static_cast<double>(r.totals().cache_hits));
        row("hit_ratio", r.totals().hit_ratio());
        row("evictions", static_cast<double>(r.counters.evictions));
        row("writebacks", static_cast<double>(r.counters.writebacks));
        row("flushes", static_cast<double>(r.counters.flushes));
        row("bypasses", static_cast<double>(r.counters.bypasses()));
    }
    return out.str();
}

} // namespace tiersim
