#pragma once

// Request-to-priority mapping. Priorities are integers 1..N where smaller
// means more cache-worthy; N-1 is "non-caching and non-eviction", N is
// "non-caching and eviction", and update requests get the distinguished
// write-buffer priority. Random requests are mapped into [n1, n2] from their
// operator's plan-tree level; concurrent queries are reconciled through a
// shared registry of (object, level, count) entries.

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tiersim/json_util.hpp"
#include "tiersim/plan.hpp"

namespace tiersim {

struct PriorityPolicy {
    int n_priorities = 8;       // N
    int non_caching_threshold = 7; // t: priorities >= t are never cached
    double write_buffer_percent = 10.0; // b: share of cache usable as write buffer
    int random_lowest = 2;      // n1: highest (best) priority for random requests
    int random_highest = 6;     // n2: lowest (worst) priority for random requests

    void validate() const {
        if (n_priorities <= 0)
            throw std::invalid_argument("policy: N must be > 0");
        if (non_caching_threshold < 0 || non_caching_threshold > n_priorities)
            throw std::invalid_argument("policy: t must be in [0, N]");
        if (write_buffer_percent < 0.0 || write_buffer_percent > 100.0)
            throw std::invalid_argument("policy: b must be in [0%, 100%]");
        if (random_lowest <= 1 || random_lowest > random_highest ||
            random_highest > n_priorities - 2)
            throw std::invalid_argument("policy: require 1 < n1 <= n2 <= N-2");
    }
};

inline PriorityPolicy policy_from_json(const json& j) {
    detail::expect_keys(j, {"N", "t", "b_percent", "n1", "n2"}, "policy");
    PriorityPolicy p;
    p.n_priorities = detail::require(j, "N", "policy").get<int>();
    p.non_caching_threshold =
        j.contains("t") ? j.at("t").get<int>() : p.n_priorities - 1;
    if (j.contains("b_percent"))
        p.write_buffer_percent = j.at("b_percent").get<double>();
    p.random_lowest = detail::require(j, "n1", "policy").get<int>();
    p.random_highest = detail::require(j, "n2", "policy").get<int>();
    p.validate();
    return p;
}

inline json policy_to_json(const PriorityPolicy& p) {
    return json{{"N", p.n_priorities},
                {"t", p.non_caching_threshold},
                {"b_percent", p.write_buffer_percent},
                {"n1", p.random_lowest},
                {"n2", p.random_highest}};
}

// A caching priority in [1, N], or the write-buffer marker.
class Priority {
public:
    Priority() = default;
    static Priority caching(int value) {
        if (value < 1)
            throw std::invalid_argument("priority value must be >= 1");
        Priority p;
        p.value_ = value;
        return p;
    }
    static Priority write_buffer() { return Priority{}; }

    bool is_write_buffer() const { return value_ == 0; }
    int value() const {
        if (is_write_buffer())
            throw std::logic_error("write-buffer priority has no numeric value");
        return value_;
    }

    bool operator==(const Priority&) const = default;

    std::string label() const {
        return is_write_buffer() ? "wb" : std::to_string(value_);
    }

private:
    int value_ = 0; // 0 encodes the write-buffer marker
};

enum class RequestClass {
    sequential_read,
    sequential_write,
    random_read,
    random_write,
    temp_read,
    temp_write,
    temp_delete, // range command; carries no payload unless issued as a legacy scan read
    update
};

inline const char* to_string(RequestClass c) {
    switch (c) {
        case RequestClass::sequential_read: return "sequential_read";
        case RequestClass::sequential_write: return "sequential_write";
        case RequestClass::random_read: return "random_read";
        case RequestClass::random_write: return "random_write";
        case RequestClass::temp_read: return "temp_read";
        case RequestClass::temp_write: return "temp_write";
        case RequestClass::temp_delete: return "temp_delete";
        case RequestClass::update: return "update";
    }
    return "?";
}

inline RequestClass request_class_from_string(const std::string& s) {
    if (s == "sequential_read") return RequestClass::sequential_read;
    if (s == "sequential_write") return RequestClass::sequential_write;
    if (s == "random_read") return RequestClass::random_read;
    if (s == "random_write") return RequestClass::random_write;
    if (s == "temp_read") return RequestClass::temp_read;
    if (s == "temp_write") return RequestClass::temp_write;
    if (s == "temp_delete") return RequestClass::temp_delete;
    if (s == "update") return RequestClass::update;
    throw std::runtime_error("unknown request class \"" + s + "\"");
}

inline bool is_read_class(RequestClass c) {
    return c == RequestClass::sequential_read || c == RequestClass::random_read ||
           c == RequestClass::temp_read;
}

inline bool is_random_class(RequestClass c) {
    return c == RequestClass::random_read || c == RequestClass::random_write;
}

// Level-to-priority mapping for random requests. Tree levels [l_low, l_high]
// are spread over the priority range [n1, n2]; when the tree has more levels
// than priorities, neighboring levels share one.
inline int priority_for_level(int i, int l_low, int l_high, int n1, int n2) {
    if (l_low > l_high || n1 > n2)
        throw std::invalid_argument("priority_for_level: invalid span");
    if (i < l_low || i > l_high)
        throw std::invalid_argument("level out of span");
    const int c_prio = n2 - n1;
    const int l_gap = l_high - l_low;
    if (c_prio == 0 || l_gap == 0)
        return n1;
    if (c_prio >= l_gap)
        return n1 + (i - l_low);
    return n1 + (c_prio * (i - l_low)) / l_gap;
}

inline Priority priority_for_level(int i, int l_low, int l_high, const PriorityPolicy& policy) {
    return Priority::caching(
        priority_for_level(i, l_low, l_high, policy.random_lowest, policy.random_highest));
}

// Shared state for concurrent queries: per-object lists of (level, count)
// plus the global level span. Queries register their random-access summary at
// start and remove exactly the same contributions at end. All operations are
// serialized internally, so the registry can be shared across threads.
class ConcurrencyRegistry {
public:
    struct LevelEntry {
        int level;
        int count;
        bool operator==(const LevelEntry&) const = default;
    };

    struct Snapshot {
        std::map<ObjectId, std::vector<LevelEntry>> objects;
        int g_low = 0;
        int g_high = 0;
        bool empty = true;
        bool operator==(const Snapshot&) const = default;
    };

    void register_query(const std::string& query_id, const RandomAccessSummary& summary) {
        std::lock_guard<std::mutex> lock(mu_);
        if (active_.count(query_id))
            throw std::invalid_argument("query \"" + query_id + "\" already registered");
        std::vector<std::pair<ObjectId, int>> contributions;
        for (const auto& [oid, level] : summary.per_object_min_level)
            contributions.emplace_back(oid, level);
        for (const auto& [oid, level] : contributions)
            add_entry(oid, level);
        active_.emplace(query_id, std::move(contributions));
    }

    void unregister_query(const std::string& query_id) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = active_.find(query_id);
        if (it == active_.end())
            throw std::invalid_argument("query \"" + query_id + "\" not registered");
        for (const auto& [oid, level] : it->second)
            remove_entry(oid, level);
        active_.erase(it);
    }

    bool object_registered(const ObjectId& oid) const {
        std::lock_guard<std::mutex> lock(mu_);
        return table_.count(oid) > 0;
    }

    // Lowest level any live query accesses this object at.
    int min_level(const ObjectId& oid) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = table_.find(oid);
        if (it == table_.end())
            throw std::invalid_argument("object not registered");
        return it->second.front().level; // entries kept sorted by level
    }

    int g_low() const {
        std::lock_guard<std::mutex> lock(mu_);
        if (levels_.empty())
            throw std::logic_error("registry is empty");
        return *levels_.begin();
    }

    int g_high() const {
        std::lock_guard<std::mutex> lock(mu_);
        if (levels_.empty())
            throw std::logic_error("registry is empty");
        return *levels_.rbegin();
    }

    bool empty() const {
        std::lock_guard<std::mutex> lock(mu_);
        return table_.empty() && active_.empty();
    }

    std::size_t active_queries() const {
        std::lock_guard<std::mutex> lock(mu_);
        return active_.size();
    }

    Snapshot snapshot() const {
        std::lock_guard<std::mutex> lock(mu_);
        Snapshot s;
        s.objects = table_;
        s.empty = levels_.empty();
        if (!s.empty) {
            s.g_low = *levels_.begin();
            s.g_high = *levels_.rbegin();
        }
        return s;
    }

    // Table-1 rule dispatch. Random classes resolve the object's lowest live
    // level, then map it through the priority function over the global span.
    Priority classify(RequestClass cls, const std::optional<ObjectId>& oid,
                      const PriorityPolicy& policy) const {
        switch (cls) {
            case RequestClass::temp_read:
            case RequestClass::temp_write:
                return Priority::caching(1);
            case RequestClass::temp_delete:
                return Priority::caching(policy.n_priorities);
            case RequestClass::sequential_read:
            case RequestClass::sequential_write:
                return Priority::caching(policy.n_priorities - 1);
            case RequestClass::update:
                return Priority::write_buffer();
            case RequestClass::random_read:
            case RequestClass::random_write:
                break;
        }
        std::lock_guard<std::mutex> lock(mu_);
        if (!oid)
            throw std::invalid_argument("random request without object id");
        auto it = table_.find(*oid);
        if (it == table_.end())
            throw std::invalid_argument("object not registered");
        int level = it->second.front().level;
        return priority_for_level(level, *levels_.begin(), *levels_.rbegin(), policy);
    }

private:
    void add_entry(const ObjectId& oid, int level) {
        auto& list = table_[oid];
        auto pos = std::lower_bound(list.begin(), list.end(), level,
                                    [](const LevelEntry& e, int l) { return e.level < l; });
        if (pos != list.end() && pos->level == level)
            pos->count++;
        else
            list.insert(pos, LevelEntry{level, 1});
        levels_.insert(level);
    }

    void remove_entry(const ObjectId& oid, int level) {
        auto tit = table_.find(oid);
        auto pos = std::lower_bound(tit->second.begin(), tit->second.end(), level,
                                    [](const LevelEntry& e, int l) { return e.level < l; });
        pos->count--;
        if (pos->count == 0)
            tit->second.erase(pos);
        if (tit->second.empty())
            table_.erase(tit);
        levels_.erase(levels_.find(level));
    }

    mutable std::mutex mu_;
    std::map<ObjectId, std::vector<LevelEntry>> table_;
    std::multiset<int> levels_;
    std::map<std::string, std::vector<std::pair<ObjectId, int>>> active_;
};

inline Priority classify_request(RequestClass cls, const std::optional<ObjectId>& oid,
                                 const ConcurrencyRegistry& registry,
                                 const PriorityPolicy& policy) {
    return registry.classify(cls, oid, policy);
}

} // namespace tiersim
