#pragma once

// Query plan trees and the level arithmetic that drives caching-priority
// assignment for random requests: raw levels (deepest leaf = 0, root highest),
// re-leveling around blocking operators, and the per-object random-access
// summary that feeds the classifier.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiersim/json_util.hpp"

namespace tiersim {

using ObjectId = std::string;

enum class OperatorKind { seq_scan, index_scan, hash, sort, aggregate, join, other };
enum class AccessPattern { sequential, random, none };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::seq_scan: return "seq_scan";
        case OperatorKind::index_scan: return "index_scan";
        case OperatorKind::hash: return "hash";
        case OperatorKind::sort: return "sort";
        case OperatorKind::aggregate: return "aggregate";
        case OperatorKind::join: return "join";
        case OperatorKind::other: return "other";
    }
    return "other";
}

inline const char* to_string(AccessPattern p) {
    switch (p) {
        case AccessPattern::sequential: return "sequential";
        case AccessPattern::random: return "random";
        case AccessPattern::none: return "none";
    }
    return "none";
}

struct PlanOperator {
    std::string id;
    OperatorKind kind = OperatorKind::other;
    std::optional<ObjectId> accessed_object;
    // Index scans touch a table and its index with the same pattern; when the
    // index is materialized as its own object, name it here.
    std::optional<ObjectId> index_object;
    AccessPattern access_pattern = AccessPattern::none;
    bool blocking = false;
    std::vector<PlanOperator> children;
};

struct QueryPlanTree {
    std::string query_id;
    PlanOperator root;
};

struct LevelAssignment {
    std::map<std::string, int> raw_level;       // operator id -> level
    std::map<std::string, int> effective_level; // operator id -> level after re-leveling
    int l_low = 0;
    int l_high = 0;
    bool has_random_operators = false;
};

struct RandomAccessSummary {
    std::map<ObjectId, int> per_object_min_level;
    int l_low = 0;
    int l_high = 0;
    bool has_random_operators = false;
};

namespace detail {

inline void validate_operator(const PlanOperator& op, std::vector<std::string>& seen_ids) {
    if (op.id.empty())
        throw std::invalid_argument("plan operator with empty id");
    if (std::find(seen_ids.begin(), seen_ids.end(), op.id) != seen_ids.end())
        throw std::invalid_argument("duplicate operator id \"" + op.id + "\"");
    seen_ids.push_back(op.id);

    if ((op.kind == OperatorKind::hash || op.kind == OperatorKind::sort) && !op.blocking)
        throw std::invalid_argument("operator \"" + op.id + "\": hash/sort must be blocking");
    if (op.access_pattern == AccessPattern::sequential && op.kind != OperatorKind::seq_scan)
        throw std::invalid_argument("operator \"" + op.id + "\": sequential pattern requires seq_scan");
    if (op.access_pattern == AccessPattern::random && op.kind != OperatorKind::index_scan)
        throw std::invalid_argument("operator \"" + op.id + "\": random pattern requires index_scan");
    if ((op.access_pattern != AccessPattern::none) != op.accessed_object.has_value())
        throw std::invalid_argument("operator \"" + op.id +
                                    "\": accessed_object must be present iff pattern != none");
    if (op.index_object && op.access_pattern != AccessPattern::random)
        throw std::invalid_argument("operator \"" + op.id +
                                    "\": index_object only valid on random operators");
    for (const auto& c : op.children)
        validate_operator(c, seen_ids);
}

template <typename Fn>
void for_each_operator(const PlanOperator& op, Fn&& fn) {
    fn(op);
    for (const auto& c : op.children)
        for_each_operator(c, fn);
}

inline int max_depth(const PlanOperator& op, int depth) {
    int m = depth;
    for (const auto& c : op.children)
        m = std::max(m, max_depth(c, depth + 1));
    return m;
}

inline void assign_raw(const PlanOperator& op, int depth, int height,
                       std::map<std::string, int>& out) {
    out[op.id] = height - depth;
    for (const auto& c : op.children)
        assign_raw(c, depth + 1, height, out);
}

inline void collect_subtree_ids(const PlanOperator& op, std::vector<std::string>& out) {
    out.push_back(op.id);
    for (const auto& c : op.children)
        collect_subtree_ids(c, out);
}

// A blocking operator gates every operator outside its own subtree (its
// ancestors and their other branches all wait for it); each gated operator
// drops by the largest raw level among the blockers gating it, clamped at 0.
// Operators inside a blocker's subtree keep their levels relative to it.
inline void assign_effective(const PlanOperator& root,
                             const std::map<std::string, int>& raw,
                             std::map<std::string, int>& out) {
    struct Blocker {
        int raw_level;
        std::vector<std::string> subtree;
    };
    std::vector<Blocker> blockers;
    for_each_operator(root, [&](const PlanOperator& op) {
        if (!op.blocking)
            return;
        Blocker b;
        b.raw_level = raw.at(op.id);
        collect_subtree_ids(op, b.subtree);
        blockers.push_back(std::move(b));
    });
    for_each_operator(root, [&](const PlanOperator& op) {
        int gate = 0;
        for (const auto& b : blockers) {
            bool inside = std::find(b.subtree.begin(), b.subtree.end(), op.id) != b.subtree.end();
            if (!inside)
                gate = std::max(gate, b.raw_level);
        }
        out[op.id] = std::max(0, raw.at(op.id) - gate);
    });
}

} // namespace detail

inline void validate(const QueryPlanTree& tree) {
    std::vector<std::string> ids;
    detail::validate_operator(tree.root, ids);
}

inline LevelAssignment compute_raw_levels(const QueryPlanTree& tree) {
    if (tree.root.id.empty())
        throw std::invalid_argument("empty plan");
    validate(tree);
    LevelAssignment la;
    int height = detail::max_depth(tree.root, 0);
    detail::assign_raw(tree.root, 0, height, la.raw_level);
    return la;
}

inline LevelAssignment compute_effective_levels(const QueryPlanTree& tree, LevelAssignment la) {
    if (la.raw_level.empty())
        throw std::invalid_argument("raw levels not computed");
    la.effective_level.clear();
    detail::assign_effective(tree.root, la.raw_level, la.effective_level);

    la.has_random_operators = false;
    la.l_low = 0;
    la.l_high = 0;
    detail::for_each_operator(tree.root, [&](const PlanOperator& op) {
        if (op.access_pattern != AccessPattern::random)
            return;
        int lvl = la.effective_level.at(op.id);
        if (!la.has_random_operators) {
            la.l_low = la.l_high = lvl;
            la.has_random_operators = true;
        } else {
            la.l_low = std::min(la.l_low, lvl);
            la.l_high = std::max(la.l_high, lvl);
        }
    });
    return la;
}

inline LevelAssignment compute_levels(const QueryPlanTree& tree) {
    return compute_effective_levels(tree, compute_raw_levels(tree));
}

// Collapses the plan to the map the concurrency registry consumes: for every
// randomly accessed object, the lowest effective level of any operator that
// touches it. An index scan contributes its level to the table and, when
// declared, to the index object as well. Sequential operators never appear.
inline RandomAccessSummary random_access_summary(const QueryPlanTree& tree,
                                                 const LevelAssignment& levels) {
    if (levels.effective_level.empty())
        throw std::invalid_argument("effective levels not computed");
    RandomAccessSummary s;
    auto contribute = [&s](const ObjectId& oid, int lvl) {
        auto it = s.per_object_min_level.find(oid);
        if (it == s.per_object_min_level.end())
            s.per_object_min_level.emplace(oid, lvl);
        else
            it->second = std::min(it->second, lvl);
    };
    detail::for_each_operator(tree.root, [&](const PlanOperator& op) {
        if (op.access_pattern != AccessPattern::random)
            return;
        int lvl = levels.effective_level.at(op.id);
        contribute(*op.accessed_object, lvl);
        if (op.index_object)
            contribute(*op.index_object, lvl);
    });
    s.l_low = levels.l_low;
    s.l_high = levels.l_high;
    s.has_random_operators = levels.has_random_operators;
    return s;
}

inline RandomAccessSummary random_access_summary(const QueryPlanTree& tree) {
    return random_access_summary(tree, compute_levels(tree));
}

// ---------------------------------------------------------------------------
// JSON ingestion. Node schema:
//   {"id": "...", "kind": "...", "object": "...", "index_object": "...",
//    "pattern": "sequential|random|none", "blocking": bool, "children": [...]}
// "object"/"index_object" are optional; unknown kinds map to "other".

inline OperatorKind operator_kind_from_string(const std::string& s) {
    if (s == "seq_scan") return OperatorKind::seq_scan;
    if (s == "index_scan") return OperatorKind::index_scan;
    if (s == "hash") return OperatorKind::hash;
    if (s == "sort") return OperatorKind::sort;
    if (s == "aggregate") return OperatorKind::aggregate;
    if (s == "join") return OperatorKind::join;
    return OperatorKind::other;
}

inline AccessPattern access_pattern_from_string(const std::string& s) {
    if (s == "sequential") return AccessPattern::sequential;
    if (s == "random") return AccessPattern::random;
    if (s == "none") return AccessPattern::none;
    throw std::runtime_error("unknown access pattern \"" + s + "\"");
}

inline PlanOperator plan_operator_from_json(const json& j) {
    detail::expect_keys(j, {"id", "kind", "object", "index_object", "pattern", "blocking", "children"},
                        "plan node");
    PlanOperator op;
    op.id = detail::require(j, "id", "plan node").get<std::string>();
    op.kind = operator_kind_from_string(detail::require(j, "kind", "plan node").get<std::string>());
    if (j.contains("object"))
        op.accessed_object = j.at("object").get<std::string>();
    if (j.contains("index_object"))
        op.index_object = j.at("index_object").get<std::string>();
    if (j.contains("pattern"))
        op.access_pattern = access_pattern_from_string(j.at("pattern").get<std::string>());
    if (j.contains("blocking"))
        op.blocking = j.at("blocking").get<bool>();
    if (j.contains("children"))
        for (const auto& c : j.at("children"))
            op.children.push_back(plan_operator_from_json(c));
    return op;
}

inline json plan_operator_to_json(const PlanOperator& op) {
    json j;
    j["id"] = op.id;
    j["kind"] = to_string(op.kind);
    if (op.accessed_object)
        j["object"] = *op.accessed_object;
    if (op.index_object)
        j["index_object"] = *op.index_object;
    j["pattern"] = to_string(op.access_pattern);
    j["blocking"] = op.blocking;
    if (!op.children.empty()) {
        json kids = json::array();
        for (const auto& c : op.children)
            kids.push_back(plan_operator_to_json(c));
        j["children"] = kids;
    }
    return j;
}

inline QueryPlanTree plan_from_json(const json& j, const std::string& query_id) {
    QueryPlanTree tree;
    tree.query_id = query_id;
    tree.root = plan_operator_from_json(j);
    validate(tree);
    return tree;
}

inline json plan_to_json(const QueryPlanTree& tree) {
    return plan_operator_to_json(tree.root);
}

} // namespace tiersim
