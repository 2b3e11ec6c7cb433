#include <doctest.h>

#include <set>

#include "fedtest/common.hpp"
#include "fedtest/scheduler.hpp"
#include "support/properties.hpp"

using namespace fedtest;
using ids = std::vector<std::size_t>;

TEST_CASE("round robin rotation") {
    CHECK(select_testers(0, 6, 2, TesterPolicy::round_robin, 1) == ids{0, 1});
    CHECK(select_testers(1, 6, 2, TesterPolicy::round_robin, 1) == ids{2, 3});
    CHECK(select_testers(2, 6, 2, TesterPolicy::round_robin, 1) == ids{4, 5});
    CHECK(select_testers(3, 6, 2, TesterPolicy::round_robin, 1) == ids{0, 1});
    // wraps when K does not divide N
    CHECK(select_testers(1, 5, 3, TesterPolicy::round_robin, 1) == ids{0, 3, 4});

    CHECK_THROWS_AS(select_testers(0, 4, 4, TesterPolicy::round_robin, 1), InvalidArgument);
    CHECK_THROWS_AS(select_testers(0, 4, 0, TesterPolicy::round_robin, 1), InvalidArgument);
}

TEST_CASE("random selection") {
    for (std::size_t r = 0; r < 20; ++r) {
        const auto t = select_testers(r, 8, 3, TesterPolicy::random, 42);
        CHECK(t.size() == 3);
        CHECK(std::set<std::size_t>(t.begin(), t.end()).size() == 3);
        CHECK(t.back() < 8);
        CHECK(select_testers(r, 8, 3, TesterPolicy::random, 42) == t);
        if (r > 0) CHECK(t != select_testers(r - 1, 8, 3, TesterPolicy::random, 42));
    }
}

TEST_CASE("schedule layout and byte accounting") {
    const auto s = build_schedule(0, 3, ids{2}, 1000);
    CHECK(s.slot_of == ids{0, 1, 2});
    CHECK(s.client_in_slot(2) == 2);
    CHECK(s.is_tester(2));
    CHECK_FALSE(s.is_tester(0));
    CHECK(s.uplink_transmissions() == 4);

    const auto t = build_schedule(0, 5, ids{0, 3}, 1000);
    // non-testers 1,2,4 first, testers 0,3 last
    CHECK(t.client_in_slot(0) == 1);
    CHECK(t.client_in_slot(1) == 2);
    CHECK(t.client_in_slot(2) == 4);
    CHECK(t.client_in_slot(3) == 0);
    CHECK(t.client_in_slot(4) == 3);
    CHECK(t.uplink_transmissions() == 7);
    CHECK(t.tester_uplink_bytes() == 1000 + 3 * 8);
    CHECK(t.uplink_bytes(1) == 1000);
    CHECK(t.total_uplink_bytes() == 5 * 1000 + 2 * 3 * 8);
    CHECK(t.total_downlink_bytes() == 5 * 1000);

    const auto u = build_schedule(0, 6, ids{0, 1}, 1000);
    CHECK(u.tester_uplink_bytes() == 1000 + 4 * 8);

    const auto v = build_schedule(4, 6, 2, TesterPolicy::round_robin, 1, 1000);
    CHECK(v.testers == ids{2, 3});

    CHECK_THROWS_AS(build_schedule(0, 3, ids{0, 1, 2}, 1000), InvalidArgument);
    CHECK_THROWS_AS(build_schedule(0, 3, ids{5}, 1000), InvalidArgument);
}

TEST_CASE("every client tests within ceil(N/K) rounds") {
    const auto r = fedtest::testing::rotation_coverage(31, 200);
    INFO(r.first_failure);
    CHECK(r.cases >= 100);
    CHECK(r.ok());
}
