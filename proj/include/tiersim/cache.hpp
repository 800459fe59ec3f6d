#pragma once

// Two-level cache engine. Cached blocks live in one of N priority groups
// (group k holds priority-k blocks, each group LRU-ordered) plus a write
// buffer group. Admission and eviction are priority-driven:
//
//   - allocation only for priorities below the non-caching threshold t, and
//     on a full cache only if some resident block has an equal-or-worse
//     (numerically >=) priority to give way;
//   - the victim is always the LRU tail of the worst-priority non-empty
//     group, never a write-buffer block;
//   - priority N-1 requests leave resident blocks untouched, priority N
//     requests demote them into the pending-eviction group N;
//   - update requests stage in the write buffer, which is bulk-flushed to
//     the lower level the moment it outgrows its share of the cache.
//
// The engine is a single-owner state machine: one mutator at a time.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tiersim/classify.hpp"
#include "tiersim/device.hpp"
#include "tiersim/json_util.hpp"

namespace tiersim {

enum class CacheAction {
    hit,
    read_allocation,
    write_allocation,
    bypass,
    reallocation,
    eviction,
    writeback,
    flush
};

inline const char* to_string(CacheAction a) {
    switch (a) {
        case CacheAction::hit: return "hit";
        case CacheAction::read_allocation: return "read_allocation";
        case CacheAction::write_allocation: return "write_allocation";
        case CacheAction::bypass: return "bypass";
        case CacheAction::reallocation: return "reallocation";
        case CacheAction::eviction: return "eviction";
        case CacheAction::writeback: return "writeback";
        case CacheAction::flush: return "flush";
    }
    return "?";
}

struct ActionRecord {
    std::uint64_t seq = 0;
    std::uint64_t lbn = 0;
    CacheAction action = CacheAction::hit;
    Priority prio;
    bool dirty = false;
    std::vector<std::uint32_t> group_sizes_after; // [write buffer, group 1 .. group N]
};

inline json action_record_to_json(const ActionRecord& r) {
    return json{{"seq", r.seq},
                {"lbn", r.lbn},
                {"action", to_string(r.action)},
                {"prio", r.prio.label()},
                {"dirty", r.dirty},
                {"group_sizes_after", r.group_sizes_after}};
}

struct BlockOutcome {
    std::uint64_t lbn = 0;
    bool served_from_cache = false;
    std::vector<CacheAction> actions;
};

struct CacheSnapshot {
    // groups[0] is the write buffer, groups[k] holds priority k; each vector
    // is ordered most- to least-recently used.
    std::vector<std::vector<std::uint64_t>> groups;
    std::map<std::uint64_t, std::pair<int, bool>> blocks; // lbn -> (group, dirty)
    bool operator==(const CacheSnapshot&) const = default;
};

class CacheEngine {
public:
    CacheEngine(std::uint64_t capacity_blocks, int n_priorities, int non_caching_threshold,
                std::uint64_t write_buffer_limit_blocks)
        : capacity_(capacity_blocks),
          n_priorities_(n_priorities),
          threshold_(non_caching_threshold),
          wb_limit_(write_buffer_limit_blocks),
          groups_(static_cast<std::size_t>(n_priorities) + 1) {
        if (capacity_blocks == 0)
            throw std::invalid_argument("cache capacity must be > 0");
        if (n_priorities <= 0 || non_caching_threshold < 0 || non_caching_threshold > n_priorities)
            throw std::invalid_argument("bad cache priority configuration");
        for (std::uint64_t pbn = 0; pbn < capacity_blocks; ++pbn)
            free_pbns_.push(pbn);
    }

    static CacheEngine from_policy(std::uint64_t capacity_blocks, const PriorityPolicy& policy) {
        policy.validate();
        auto wb_limit = static_cast<std::uint64_t>(
            static_cast<double>(capacity_blocks) * policy.write_buffer_percent / 100.0);
        return CacheEngine(capacity_blocks, policy.n_priorities, policy.non_caching_threshold,
                           wb_limit);
    }

    // --- main entry point -------------------------------------------------

    std::vector<BlockOutcome> access(std::uint64_t lbn, unsigned blocks, Direction dir,
                                     Priority prio) {
        if (blocks == 0)
            throw std::invalid_argument("access: empty block range");
        if (prio.is_write_buffer() && dir == Direction::read)
            throw std::invalid_argument("write-buffer priority on read");
        if (!prio.is_write_buffer() && (prio.value() < 1 || prio.value() > n_priorities_))
            throw std::invalid_argument("priority outside [1, N]");

        std::vector<BlockOutcome> outcomes;
        outcomes.reserve(blocks);
        for (unsigned i = 0; i < blocks; ++i)
            outcomes.push_back(access_block(lbn + i, dir, prio));
        return outcomes;
    }

    // --- individual decisions (also exposed for tests) ---------------------

    // LRU tail of the worst-priority non-empty group; the write buffer is
    // never a victim.
    std::uint64_t select_victim() const {
        for (int g = n_priorities_; g >= 1; --g)
            if (!groups_[g].empty())
                return groups_[g].back();
        throw std::runtime_error("cache saturated by write buffer");
    }

    bool admit_or_bypass(Priority incoming) const {
        if (!free_pbns_.empty())
            return true;
        if (incoming.is_write_buffer()) {
            // Update requests win space over any other priority.
            for (int g = 1; g <= n_priorities_; ++g)
                if (!groups_[g].empty())
                    return true;
            return false;
        }
        for (int g = incoming.value(); g <= n_priorities_; ++g)
            if (!groups_[g].empty())
                return true;
        return false;
    }

    std::vector<CacheAction> evict(std::uint64_t lbn) {
        auto it = index_.find(lbn);
        if (it == index_.end())
            throw std::invalid_argument("evict: block not cached");
        std::vector<CacheAction> actions;
        evict_resident(it, &actions);
        return actions;
    }

    std::vector<CacheAction> flush_write_buffer() {
        std::vector<CacheAction> actions;
        if (groups_[0].empty())
            return actions;
        while (!groups_[0].empty()) {
            std::uint64_t lbn = groups_[0].back(); // oldest first
            auto it = index_.find(lbn);
            bool was_dirty = it->second.dirty;
            remove_block(it);
            emit(CacheAction::writeback, lbn, Priority::write_buffer(), was_dirty, &actions);
        }
        emit(CacheAction::flush, 0, Priority::write_buffer(), false, &actions);
        return actions;
    }

    // TRIM: resident blocks in the range become pending-eviction (group N)
    // and drop their dirty state, so they die without a writeback. Nothing is
    // sent to the lower level and absent blocks are ignored.
    std::vector<CacheAction> trim(std::uint64_t lbn, unsigned blocks) {
        std::vector<CacheAction> actions;
        for (unsigned i = 0; i < blocks; ++i) {
            auto it = index_.find(lbn + i);
            if (it == index_.end())
                continue;
            if (it->second.group != n_priorities_) {
                move_to_group(it, n_priorities_);
                it->second.dirty = false;
                emit(CacheAction::reallocation, it->first, Priority::caching(n_priorities_),
                     false, &actions);
            } else {
                it->second.dirty = false;
            }
        }
        return actions;
    }

    // --- inspection ---------------------------------------------------------

    std::uint64_t capacity() const { return capacity_; }
    std::uint64_t size() const { return index_.size(); }
    std::uint64_t free_blocks() const { return free_pbns_.size(); }
    int n_priorities() const { return n_priorities_; }
    std::uint64_t write_buffer_limit() const { return wb_limit_; }
    std::size_t write_buffer_size() const { return groups_[0].size(); }
    std::size_t group_size(int g) const { return groups_.at(g).size(); }

    bool contains(std::uint64_t lbn) const { return index_.count(lbn) > 0; }
    bool dirty(std::uint64_t lbn) const { return meta(lbn).dirty; }
    Priority priority_of(std::uint64_t lbn) const {
        int g = meta(lbn).group;
        return g == 0 ? Priority::write_buffer() : Priority::caching(g);
    }
    std::uint64_t pbn_of(std::uint64_t lbn) const { return meta(lbn).pbn; }

    CacheSnapshot snapshot() const {
        CacheSnapshot s;
        s.groups.resize(groups_.size());
        for (std::size_t g = 0; g < groups_.size(); ++g)
            s.groups[g].assign(groups_[g].begin(), groups_[g].end());
        for (const auto& [lbn, m] : index_)
            s.blocks.emplace(lbn, std::make_pair(m.group, m.dirty));
        return s;
    }

    void enable_action_log(bool on) { log_enabled_ = on; }
    const std::vector<ActionRecord>& action_log() const { return log_; }
    void clear_action_log() { log_.clear(); }

    void check_invariants() const {
        std::size_t total = 0;
        for (const auto& g : groups_)
            total += g.size();
        if (total != index_.size())
            throw std::logic_error("invariant: group sizes != index size");
        if (total + free_pbns_.size() != capacity_)
            throw std::logic_error("invariant: blocks + free slots != capacity");
        if (groups_[0].size() > wb_limit_)
            throw std::logic_error("invariant: write buffer above limit at rest");
        for (int g = std::max(threshold_, 1); g < n_priorities_; ++g)
            if (!groups_[g].empty())
                throw std::logic_error("invariant: non-caching group occupied");
        std::vector<bool> pbn_seen(capacity_, false);
        for (int g = 0; g <= n_priorities_; ++g) {
            for (std::uint64_t lbn : groups_[g]) {
                auto it = index_.find(lbn);
                if (it == index_.end() || it->second.group != g)
                    throw std::logic_error("invariant: index/group mismatch");
                if (it->second.pbn >= capacity_ || pbn_seen[it->second.pbn])
                    throw std::logic_error("invariant: bad or duplicate pbn");
                pbn_seen[it->second.pbn] = true;
            }
        }
    }

private:
    struct BlockMeta {
        std::uint64_t pbn = 0;
        int group = 0; // 0 = write buffer, 1..N = priority groups
        bool dirty = false;
        std::list<std::uint64_t>::iterator pos;
    };

    const BlockMeta& meta(std::uint64_t lbn) const {
        auto it = index_.find(lbn);
        if (it == index_.end())
            throw std::invalid_argument("block not cached");
        return it->second;
    }

    bool is_caching(Priority p) const {
        return p.is_write_buffer() || p.value() < threshold_;
    }

    static int group_of(Priority p) { return p.is_write_buffer() ? 0 : p.value(); }

    void emit(CacheAction a, std::uint64_t lbn, Priority prio, bool dirty,
              std::vector<CacheAction>* sink) {
        if (sink)
            sink->push_back(a);
        if (!log_enabled_)
            return;
        ActionRecord r;
        r.seq = log_seq_++;
        r.lbn = lbn;
        r.action = a;
        r.prio = prio;
        r.dirty = dirty;
        r.group_sizes_after.reserve(groups_.size());
        for (const auto& g : groups_)
            r.group_sizes_after.push_back(static_cast<std::uint32_t>(g.size()));
        log_.push_back(std::move(r));
    }

    void move_to_group(std::unordered_map<std::uint64_t, BlockMeta>::iterator it, int g) {
        groups_[it->second.group].erase(it->second.pos);
        groups_[g].push_front(it->first);
        it->second.group = g;
        it->second.pos = groups_[g].begin();
    }

    void refresh(std::unordered_map<std::uint64_t, BlockMeta>::iterator it) {
        auto& list = groups_[it->second.group];
        list.erase(it->second.pos);
        list.push_front(it->first);
        it->second.pos = list.begin();
    }

    void remove_block(std::unordered_map<std::uint64_t, BlockMeta>::iterator it) {
        groups_[it->second.group].erase(it->second.pos);
        free_pbns_.push(it->second.pbn);
        index_.erase(it);
    }

    void evict_resident(std::unordered_map<std::uint64_t, BlockMeta>::iterator it,
                        std::vector<CacheAction>* sink) {
        Priority p = it->second.group == 0 ? Priority::write_buffer()
                                           : Priority::caching(it->second.group);
        if (it->second.dirty)
            emit(CacheAction::writeback, it->first, p, true, sink);
        std::uint64_t lbn = it->first;
        bool was_dirty = it->second.dirty;
        remove_block(it);
        emit(CacheAction::eviction, lbn, p, was_dirty, sink);
    }

    void insert_block(std::uint64_t lbn, int group, bool dirty) {
        std::uint64_t pbn = free_pbns_.top();
        free_pbns_.pop();
        groups_[group].push_front(lbn);
        BlockMeta m;
        m.pbn = pbn;
        m.group = group;
        m.dirty = dirty;
        m.pos = groups_[group].begin();
        index_.emplace(lbn, m);
    }

    void flush_if_over_limit(std::vector<CacheAction>* sink) {
        if (groups_[0].size() <= wb_limit_)
            return;
        auto actions = flush_write_buffer();
        if (sink)
            sink->insert(sink->end(), actions.begin(), actions.end());
    }

    BlockOutcome access_block(std::uint64_t lbn, Direction dir, Priority prio) {
        BlockOutcome out;
        out.lbn = lbn;
        auto it = index_.find(lbn);

        if (it != index_.end()) {
            out.served_from_cache = true;
            if (is_caching(prio)) {
                int target = group_of(prio);
                emit(CacheAction::hit, lbn, prio, it->second.dirty, &out.actions);
                if (it->second.group != target) {
                    move_to_group(it, target);
                    emit(CacheAction::reallocation, lbn, prio, it->second.dirty, &out.actions);
                } else {
                    refresh(it);
                }
                if (dir == Direction::write)
                    it->second.dirty = true;
                flush_if_over_limit(&out.actions);
            } else if (prio.value() == n_priorities_) {
                // Eviction priority: hand the data over, then mark the block
                // dead. Dead blocks never need a writeback and stay coldest.
                emit(CacheAction::hit, lbn, prio, it->second.dirty, &out.actions);
                if (it->second.group != n_priorities_) {
                    move_to_group(it, n_priorities_);
                    it->second.dirty = false;
                    emit(CacheAction::reallocation, lbn, prio, false, &out.actions);
                }
            } else {
                // Non-caching, non-eviction: serve without touching priority.
                emit(CacheAction::hit, lbn, prio, it->second.dirty, &out.actions);
                refresh(it);
            }
            return out;
        }

        // Miss.
        if (!is_caching(prio)) {
            emit(CacheAction::bypass, lbn, prio, false, &out.actions);
            return out;
        }
        if (!admit_or_bypass(prio)) {
            emit(CacheAction::bypass, lbn, prio, false, &out.actions);
            return out;
        }
        if (free_pbns_.empty())
            evict_resident(index_.find(select_victim()), &out.actions);
        bool dirty = dir == Direction::write;
        insert_block(lbn, group_of(prio), dirty);
        if (dir == Direction::read) {
            emit(CacheAction::read_allocation, lbn, prio, dirty, &out.actions);
            out.served_from_cache = false; // data came up from the lower level
        } else {
            emit(CacheAction::write_allocation, lbn, prio, dirty, &out.actions);
            out.served_from_cache = true;
        }
        flush_if_over_limit(&out.actions);
        return out;
    }

    std::uint64_t capacity_;
    int n_priorities_;
    int threshold_;
    std::uint64_t wb_limit_;
    std::vector<std::list<std::uint64_t>> groups_; // [0] = write buffer
    std::unordered_map<std::uint64_t, BlockMeta> index_;
    std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> free_pbns_;

    bool log_enabled_ = false;
    std::uint64_t log_seq_ = 0;
    std::vector<ActionRecord> log_;
};

} // namespace tiersim
