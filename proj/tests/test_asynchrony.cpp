#include "afo/asynchrony.hpp"
#include "afo/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <stdexcept>

using namespace afo;

namespace {

bool has_violation(const ScheduleVerdict& v, ScheduleViolation::Kind kind, int agent = -1) {
    return std::any_of(v.violations.begin(), v.violations.end(),
                       [&](const auto& x) { return x.kind == kind && (agent < 0 || x.agent == agent); });
}

}  // namespace

TEST_CASE("certain events fill every tick") {
    const BlockLayout layout = BlockLayout::uniform(3, 1, 1);
    const EventSchedule s = generate_schedule(AsyncConfig::uniform(3, 4, 1.0, 1.0, 1.0, 3, 1), layout, 20);
    for (int i = 0; i < 3; ++i) {
        CHECK(s.compute_ticks(i).size() == 20);
        CHECK(s.measure_ticks(i).size() == 20);
    }
    CHECK(verify_schedule(s).ok());
}

TEST_CASE("forced computes land on the last tick of each uncovered window") {
    const BlockLayout layout = BlockLayout::uniform(1, 1, 1);
    const EventSchedule s = generate_schedule(AsyncConfig::uniform(1, 3, 0.0, 1.0, 1.0, 0, 5), layout, 9);
    CHECK(s.compute_ticks(0) == std::vector<long>{2, 5, 8});
    CHECK(verify_schedule(s).ok());
}

TEST_CASE("silent links get a fresh delivery every other tick") {
    const BlockLayout layout = BlockLayout::uniform(3, 1, 1);
    const EventSchedule s = generate_schedule(AsyncConfig::uniform(3, 2, 1.0, 1.0, 0.0, 1, 8), layout, 30);
    CHECK(verify_schedule(s).ok());
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
            if (i == j) continue;
            const auto& d = s.deliveries(j, i);
            REQUIRE(d.size() >= 14);
            for (std::size_t t = 1; t < d.size(); ++t) CHECK(d[t].receive - d[t - 1].receive == 2);
            for (const auto& x : d) CHECK(x.receive == x.origin);
        }
}

TEST_CASE("generated schedules verify across random configurations") {
    Rng rng(77);
    for (int t = 0; t < 100; ++t) {
        const int N = static_cast<int>(rng.uniform_int(1, 5));
        const int B = static_cast<int>(rng.uniform_int(1, 6));
        AsyncConfig cfg = AsyncConfig::uniform(N, B, rng.uniform(), rng.uniform(), rng.uniform(),
                                               static_cast<int>(rng.uniform_int(0, B - 1)),
                                               static_cast<std::uint64_t>(t));
        const BlockLayout layout = BlockLayout::uniform(N, 1, 1);
        const EventSchedule s = generate_schedule(cfg, layout, B + rng.uniform_int(0, 60));
        const ScheduleVerdict v = verify_schedule(s);
        CHECK_MESSAGE(v.ok(), "config ", t, ": ", v.violations.empty() ? "" : v.violations.front().detail);
    }
}

TEST_CASE("generation is deterministic and validates its input") {
    const BlockLayout layout = BlockLayout::uniform(4, 2, 1);
    const AsyncConfig cfg = AsyncConfig::uniform(4, 5, 0.3, 0.2, 0.4, 4, 123);
    CHECK(generate_schedule(cfg, layout, 200) == generate_schedule(cfg, layout, 200));
    CHECK_THROWS_AS(generate_schedule(cfg, layout, 4), std::invalid_argument);
    CHECK_THROWS_AS(generate_schedule(AsyncConfig::uniform(4, 5, 1.2, 0.2, 0.4, 4, 1), layout, 20),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_schedule(AsyncConfig::uniform(4, 5, 0.2, 0.2, 0.4, 5, 1), layout, 20),
                    std::invalid_argument);
}

TEST_CASE("verify_schedule reports coverage and causality violations") {
    const long B = 3;
    std::vector<std::vector<Delivery>> fresh(4);
    for (long k = 0; k < B; ++k) {
        fresh[1].push_back({k, k});
        fresh[2].push_back({k, k});
    }
    const EventSchedule empty_agent(B, static_cast<int>(B), {{0, 1, 2}, {}}, {{0, 1, 2}, {0, 1, 2}}, fresh);
    const ScheduleVerdict v = verify_schedule(empty_agent);
    CHECK(has_violation(v, ScheduleViolation::Kind::compute_window, 1));
    CHECK_FALSE(has_violation(v, ScheduleViolation::Kind::compute_window, 0));

    auto late = fresh;
    late[1] = {{0, 0}, {1, 1}, {3, 5}};
    const EventSchedule acausal(6, static_cast<int>(B), {{0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 5}},
                                {{0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4, 5}}, late);
    CHECK(has_violation(verify_schedule(acausal), ScheduleViolation::Kind::causality));
}

TEST_CASE("held-value staleness") {
    std::vector<std::vector<Delivery>> d(4);
    d[0 * 2 + 1] = {{4, 2}};
    const EventSchedule s(8, 8, {{0}, {0}}, {{0, 3}, {1, 5}}, d);
    CHECK(staleness_at(s, 1, 1, 6) == 6);
    CHECK(staleness_at(s, 1, 0, 6) == 2);
    CHECK(staleness_at(s, 1, 0, 3) == 0);
    CHECK(staleness_at(s, 1, 0, 0) == 0);
    CHECK(measurement_staleness_at(s, 1, 1, 6) == 5);
    CHECK(measurement_staleness_at(s, 1, 0, 6) == 0);
    CHECK(s.latest_measurement(0, 2) == 0);
    CHECK(s.latest_measurement(0, 7) == 3);
    CHECK_THROWS(staleness_at(s, 2, 0, 1));
}

TEST_CASE("schedule text round trip") {
    const BlockLayout layout = BlockLayout::uniform(3, 1, 1);
    const EventSchedule s = generate_schedule(AsyncConfig::uniform(3, 4, 0.3, 0.6, 0.2, 3, 42), layout, 50);
    std::stringstream text;
    write_schedule(text, s);
    CHECK(read_schedule(text) == s);
}
