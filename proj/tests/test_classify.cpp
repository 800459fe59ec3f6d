#include <doctest.h>

#include <random>

#include "tiersim/classify.hpp"

using namespace tiersim;

namespace {

PriorityPolicy default_policy() {
    return PriorityPolicy{}; // N=8, t=7, b=10%, n1=2, n2=6
}

RandomAccessSummary summary_of(std::initializer_list<std::pair<const ObjectId, int>> entries,
                               int l_low, int l_high) {
    RandomAccessSummary s;
    s.per_object_min_level = entries;
    s.l_low = l_low;
    s.l_high = l_high;
    s.has_random_operators = !s.per_object_min_level.empty();
    return s;
}

// The worked-example query: t.a and t.c (and indexes) at level 0, t.b at 2.
RandomAccessSummary demo_summary() {
    return summary_of({{"t.a", 0}, {"t.a_idx", 0}, {"t.b", 2}, {"t.b_idx", 2}, {"t.c", 0}, {"t.c_idx", 0}},
                      0, 2);
}

} // namespace

TEST_CASE("priority function: worked example values") {
    CHECK(priority_for_level(2, 0, 2, 2, 5) == 4);
    CHECK(priority_for_level(0, 0, 2, 2, 5) == 2);
    CHECK(priority_for_level(1, 0, 2, 2, 5) == 3);
}

TEST_CASE("priority function: degenerate ranges collapse to n1") {
    CHECK(priority_for_level(3, 0, 7, 4, 4) == 4); // single priority
    CHECK(priority_for_level(5, 5, 5, 2, 6) == 2); // single level
}

TEST_CASE("priority function: more levels than priorities share slots") {
    // span 0..3 into [2,3]: floor(1 * i / 3).
    CHECK(priority_for_level(0, 0, 3, 2, 3) == 2);
    CHECK(priority_for_level(1, 0, 3, 2, 3) == 2);
    CHECK(priority_for_level(2, 0, 3, 2, 3) == 2);
    CHECK(priority_for_level(3, 0, 3, 2, 3) == 3);
}

TEST_CASE("priority function: out-of-span level is an error") {
    CHECK_THROWS_WITH(priority_for_level(4, 0, 2, 2, 5), "level out of span");
    CHECK_THROWS_WITH(priority_for_level(-1, 0, 2, 2, 5), "level out of span");
}

TEST_CASE("policy validation") {
    PriorityPolicy p = default_policy();
    CHECK_NOTHROW(p.validate());
    p.random_lowest = 1; // priority 1 is reserved for temporary data
    CHECK_THROWS(p.validate());
    p = default_policy();
    p.random_highest = 7; // collides with the non-caching range
    CHECK_THROWS(p.validate());
    p = default_policy();
    p.write_buffer_percent = 101.0;
    CHECK_THROWS(p.validate());
    p = default_policy();
    p.n_priorities = 0;
    CHECK_THROWS(p.validate());
}

TEST_CASE("registry: registering the demo query") {
    ConcurrencyRegistry reg;
    reg.register_query("q1", demo_summary());
    auto s = reg.snapshot();
    CHECK(s.objects.at("t.a") == std::vector<ConcurrencyRegistry::LevelEntry>{{0, 1}});
    CHECK(s.objects.at("t.b") == std::vector<ConcurrencyRegistry::LevelEntry>{{2, 1}});
    CHECK(s.objects.at("t.c") == std::vector<ConcurrencyRegistry::LevelEntry>{{0, 1}});
    CHECK(s.objects.at("t.a_idx") == std::vector<ConcurrencyRegistry::LevelEntry>{{0, 1}});
    CHECK(s.objects.count("t.b_idx") == 1);
    CHECK(s.objects.count("t.c_idx") == 1);
    CHECK(reg.g_low() == 0);
    CHECK(reg.g_high() == 2);
}

TEST_CASE("registry: same plan under two query ids doubles the counts") {
    ConcurrencyRegistry reg;
    reg.register_query("q1", demo_summary());
    reg.register_query("q2", demo_summary());
    auto s = reg.snapshot();
    CHECK(s.objects.at("t.a") == std::vector<ConcurrencyRegistry::LevelEntry>{{0, 2}});
    CHECK(reg.g_low() == 0);
    CHECK(reg.g_high() == 2);
    reg.unregister_query("q1");
    CHECK(reg.snapshot().objects.at("t.a") ==
          std::vector<ConcurrencyRegistry::LevelEntry>{{0, 1}});
}

TEST_CASE("registry: two queries on one table at different levels") {
    ConcurrencyRegistry reg;
    reg.register_query("q1", summary_of({{"t.x", 1}}, 1, 1));
    reg.register_query("q2", summary_of({{"t.x", 3}}, 3, 3));
    auto s = reg.snapshot();
    CHECK(s.objects.at("t.x") ==
          std::vector<ConcurrencyRegistry::LevelEntry>{{1, 1}, {3, 1}});
    CHECK(reg.min_level("t.x") == 1);
}

TEST_CASE("registry: duplicate and unknown ids are errors") {
    ConcurrencyRegistry reg;
    reg.register_query("q1", demo_summary());
    CHECK_THROWS(reg.register_query("q1", demo_summary()));
    CHECK_THROWS(reg.unregister_query("nope"));
}

TEST_CASE("registry: register then unregister restores the empty registry") {
    ConcurrencyRegistry reg;
    auto before = reg.snapshot();
    reg.register_query("q1", demo_summary());
    reg.unregister_query("q1");
    CHECK(reg.snapshot() == before);
    CHECK(reg.empty());
}

TEST_CASE("classification: rule table") {
    ConcurrencyRegistry reg;
    PriorityPolicy policy = default_policy();
    reg.register_query("q1", demo_summary());

    CHECK(classify_request(RequestClass::temp_read, std::nullopt, reg, policy) ==
          Priority::caching(1));
    CHECK(classify_request(RequestClass::temp_write, std::nullopt, reg, policy) ==
          Priority::caching(1));
    CHECK(classify_request(RequestClass::temp_delete, std::nullopt, reg, policy) ==
          Priority::caching(8));
    CHECK(classify_request(RequestClass::sequential_read, std::nullopt, reg, policy) ==
          Priority::caching(7));
    CHECK(classify_request(RequestClass::sequential_write, std::nullopt, reg, policy) ==
          Priority::caching(7));
    CHECK(classify_request(RequestClass::update, std::nullopt, reg, policy) ==
          Priority::write_buffer());

    // Range [2,6] over levels 0..2: c_prio >= l_gap, so priority = n1 + level.
    CHECK(classify_request(RequestClass::random_read, ObjectId("t.a"), reg, policy) ==
          Priority::caching(2));
    CHECK(classify_request(RequestClass::random_read, ObjectId("t.b"), reg, policy) ==
          Priority::caching(4));
    CHECK(classify_request(RequestClass::random_write, ObjectId("t.c"), reg, policy) ==
          Priority::caching(2));
}

TEST_CASE("classification: concurrent queries pick the best level per object") {
    ConcurrencyRegistry reg;
    PriorityPolicy policy = default_policy();
    policy.random_highest = 5; // range [2,5] as in the worked example
    reg.register_query("q1", summary_of({{"t.o", 0}}, 0, 0));
    reg.register_query("q2", summary_of({{"t.o", 2}}, 2, 2));
    CHECK(reg.g_low() == 0);
    CHECK(reg.g_high() == 2);
    CHECK(classify_request(RequestClass::random_read, ObjectId("t.o"), reg, policy) ==
          Priority::caching(2));
}

TEST_CASE("classification: unregistered object is an error") {
    ConcurrencyRegistry reg;
    reg.register_query("q1", demo_summary());
    CHECK_THROWS_WITH(
        classify_request(RequestClass::random_read, ObjectId("ghost"), reg, default_policy()),
        "object not registered");
}

TEST_CASE("property: random priorities stay inside [n1, n2] and are monotone") {
    PriorityPolicy policy = default_policy();
    for (int l_high = 0; l_high <= 9; ++l_high) {
        int prev = policy.random_lowest;
        for (int i = 0; i <= l_high; ++i) {
            int p = priority_for_level(i, 0, l_high, policy.random_lowest, policy.random_highest);
            CHECK(p >= policy.random_lowest);
            CHECK(p <= policy.random_highest);
            CHECK(p >= prev);
            prev = p;
        }
    }
}

TEST_CASE("property: concurrency never worsens a request's priority") {
    // With the global span fixed, the merged level for an object is the
    // minimum over queries, and the mapping is monotone in the level.
    std::mt19937 rng(99);
    PriorityPolicy policy = default_policy();
    for (int iter = 0; iter < 200; ++iter) {
        int l_high = static_cast<int>(rng() % 8);
        int la = static_cast<int>(rng() % (l_high + 1));
        int lb = static_cast<int>(rng() % (l_high + 1));
        ConcurrencyRegistry reg;
        reg.register_query("qa", summary_of({{"t.o", la}}, 0, l_high));
        reg.register_query("qb", summary_of({{"t.o", lb}}, 0, l_high));
        int merged =
            classify_request(RequestClass::random_read, ObjectId("t.o"), reg, policy).value();
        int alone_a = priority_for_level(la, 0, l_high, policy.random_lowest, policy.random_highest);
        int alone_b = priority_for_level(lb, 0, l_high, policy.random_lowest, policy.random_highest);
        CHECK(merged <= alone_a);
        CHECK(merged <= alone_b);
    }
}

TEST_CASE("property: any register/unregister history ending empty leaves no state") {
    std::mt19937 rng(4242);
    ConcurrencyRegistry reg;
    auto empty = reg.snapshot();
    std::vector<std::string> live;
    int next_q = 0;
    for (int step = 0; step < 2000; ++step) {
        bool do_register = live.empty() || (rng() % 2 == 0);
        if (do_register) {
            std::string qid = "q" + std::to_string(next_q++);
            RandomAccessSummary s;
            int objects = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < objects; ++i)
                s.per_object_min_level["t" + std::to_string(rng() % 10)] =
                    static_cast<int>(rng() % 6);
            s.has_random_operators = true;
            reg.register_query(qid, s);
            live.push_back(qid);
        } else {
            std::size_t pick = rng() % live.size();
            reg.unregister_query(live[pick]);
            live.erase(live.begin() + pick);
        }
        if (!live.empty()) {
            auto snap = reg.snapshot();
            int lo = 99, hi = -1;
            for (const auto& [oid, entries] : snap.objects)
                for (const auto& e : entries) {
                    lo = std::min(lo, e.level);
                    hi = std::max(hi, e.level);
                    CHECK(e.count >= 1);
                }
            CHECK(snap.g_low == lo);
            CHECK(snap.g_high == hi);
        }
    }
    for (const auto& qid : live)
        reg.unregister_query(qid);
    CHECK(reg.snapshot() == empty);
}
