#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdint>
#include <map>
#include <random>

#include "bat/events.hpp"
#include "bat/synth.hpp"
#include "doctest.h"

using namespace bat;

namespace {

EventStream random_stream(uint64_t seed, size_t count, Geometry geom = {640, 480},
                          uint64_t t_max = 1000000) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<uint64_t> dt(0, t_max);
    std::uniform_int_distribution<int> dx(0, geom.width - 1), dy(0, geom.height - 1);
    EventStream s;
    s.geom = geom;
    for (size_t i = 0; i < count; ++i) {
        Event e;
        e.t = dt(rng);
        e.x = static_cast<uint16_t>(dx(rng));
        e.y = static_cast<uint16_t>(dy(rng));
        e.p = (rng() & 1) ? 1 : -1;
        s.events.push_back(e);
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    return s;
}

}  // namespace

TEST_CASE("csv parse maps fields directly") {
    const EventStream s = parse_events("100,3,4,1\n", EventFormat::Csv, {640, 480});
    REQUIRE(s.events.size() == 1);
    CHECK(s.events[0] == Event{100, 3, 4, 1});
    CHECK(s.geom == Geometry{640, 480});
}

TEST_CASE("empty input parses to empty stream") {
    CHECK(parse_events("", EventFormat::Csv, {8, 8}).events.empty());
}

TEST_CASE("csv rejects out-of-bounds coordinates") {
    CHECK_THROWS_AS(parse_events("100,640,4,1\n", EventFormat::Csv, {640, 480}), OutOfBounds);
    CHECK_THROWS_AS(parse_events("100,3,480,1\n", EventFormat::Csv, {640, 480}), OutOfBounds);
}

TEST_CASE("csv rejects malformed records") {
    CHECK_THROWS_AS(parse_events("100,3,4\n", EventFormat::Csv, {8, 8}), MalformedRecord);
    CHECK_THROWS_AS(parse_events("100,3,4,1,9\n", EventFormat::Csv, {8, 8}), MalformedRecord);
    CHECK_THROWS_AS(parse_events("abc,3,4,1\n", EventFormat::Csv, {8, 8}), MalformedRecord);
    CHECK_THROWS_AS(parse_events("100,3,4,0\n", EventFormat::Csv, {8, 8}), MalformedRecord);
    CHECK_THROWS_AS(parse_events("100,3,4,2\n", EventFormat::Csv, {8, 8}), MalformedRecord);
}

TEST_CASE("strict flag rejects unsorted input, default sorts it") {
    const std::string bytes = "200,1,1,1\n100,2,2,-1\n";
    CHECK_THROWS_AS(parse_events(bytes, EventFormat::Csv, {8, 8}, true), NonMonotonicTime);
    const EventStream s = parse_events(bytes, EventFormat::Csv, {8, 8});
    REQUIRE(s.events.size() == 2);
    CHECK(s.events[0].t == 100);
    CHECK(s.events[1].t == 200);
}

TEST_CASE("evt1 empty stream writes header-only payload") {
    EventStream s;
    s.geom = {32, 24};
    const std::string bytes = write_events(s, EventFormat::Evt1);
    CHECK(bytes.size() == 16);  // magic + geometry + count
    CHECK(parse_events(bytes, EventFormat::Evt1) == s);
}

TEST_CASE("single event round-trips through both formats") {
    EventStream s;
    s.geom = {100, 50};
    s.events.push_back({12345678901ULL, 99, 49, -1});
    CHECK(parse_events(write_events(s, EventFormat::Evt1), EventFormat::Evt1) == s);
    CHECK(parse_events(write_events(s, EventFormat::Csv), EventFormat::Csv, s.geom) == s);
}

TEST_CASE("10k random events round-trip bit-exact") {
    const EventStream s = random_stream(7, 10000);
    CHECK(parse_events(write_events(s, EventFormat::Evt1), EventFormat::Evt1) == s);
    CHECK(parse_events(write_events(s, EventFormat::Csv), EventFormat::Csv, s.geom) == s);
}

TEST_CASE("evt1 rejects truncation and bad polarity") {
    const EventStream s = random_stream(8, 10);
    std::string bytes = write_events(s, EventFormat::Evt1);
    CHECK_THROWS_AS(parse_events(bytes.substr(0, bytes.size() - 1), EventFormat::Evt1),
                    MalformedRecord);
    bytes[16 + 12] = 3;  // first event's polarity byte
    CHECK_THROWS_AS(parse_events(bytes, EventFormat::Evt1), MalformedRecord);
}

TEST_CASE("slice keeps the closed interval and preserves order") {
    const EventStream s = random_stream(9, 500, {64, 64}, 1000);
    CHECK(slice(s, 0, UINT64_MAX) == s);

    const EventStream at = slice(s, 300, 300);
    for (const Event& e : at.events) CHECK(e.t == 300);
    const size_t expect =
        std::count_if(s.events.begin(), s.events.end(), [](const Event& e) { return e.t == 300; });
    CHECK(at.events.size() == expect);

    CHECK_THROWS_AS(slice(s, 10, 9), InvalidInterval);
}

TEST_CASE("two disjoint slices cover the stream") {
    const EventStream s = random_stream(10, 1000, {64, 64}, 999);
    const EventStream a = slice(s, 0, 499);
    const EventStream b = slice(s, 500, 999);
    CHECK(a.events.size() + b.events.size() == s.events.size());
}

TEST_CASE("untextured or static scenes emit no events") {
    SyntheticSceneSpec spec;
    spec.width = spec.height = 16;
    spec.vx = 3.0;
    spec.amplitude = 0.0;
    CHECK(synthesize_events(spec).events.events.empty());

    spec.amplitude = 1.0;
    spec.vx = 0.0;
    CHECK(synthesize_events(spec).events.events.empty());
}

TEST_CASE("0.65 brightness rise against C=0.2 gives exactly 3 events") {
    // A bar sweeping by one pixel: every pixel's log intensity moves by the
    // full 0.65 amplitude or not at all, so positive counts are 0 or 3.
    SyntheticSceneSpec spec;
    spec.texture = TextureKind::Bar;
    spec.width = spec.height = 16;
    spec.vx = 1.0;
    spec.duration_us = spec.dt_us = 50000;
    spec.threshold = 0.2;
    spec.amplitude = 0.65;
    spec.tile = 4;
    const SyntheticScene scene = synthesize_events(spec);
    REQUIRE(!scene.events.events.empty());
    std::map<std::pair<int, int>, int> pos;
    for (const Event& e : scene.events.events)
        if (e.p > 0) ++pos[{e.x, e.y}];
    bool saw_three = false;
    for (const auto& [pixel, n] : pos) {
        CHECK(n == 3);
        saw_three = true;
    }
    CHECK(saw_three);
}

TEST_CASE("doubling velocity doubles ground truth and keeps events plentiful") {
    SyntheticSceneSpec spec;
    spec.texture = TextureKind::RandomBandlimited;
    spec.width = spec.height = 32;
    spec.vx = 1.5;
    spec.vy = -0.5;
    spec.seed = 3;
    const SyntheticScene base = synthesize_events(spec);
    spec.vx *= 2.0;
    spec.vy *= 2.0;
    const SyntheticScene fast = synthesize_events(spec);
    REQUIRE(base.gt_flows.size() == fast.gt_flows.size());
    for (size_t i = 0; i < base.gt_flows.size(); ++i)
        for (size_t k = 0; k < base.gt_flows[i].uv.size(); ++k)
            CHECK(fast.gt_flows[i].uv[k] == doctest::Approx(2.0 * base.gt_flows[i].uv[k]).epsilon(1e-12));
    CHECK(fast.events.events.size() >= base.events.events.size());
}

TEST_CASE("synthetic events stay inside geometry and duration") {
    SyntheticSceneSpec spec;
    spec.texture = TextureKind::RandomBandlimited;
    spec.width = 24;
    spec.height = 18;
    spec.vx = 2.5;
    spec.vy = 1.25;
    spec.duration_us = 80000;
    spec.dt_us = 40000;
    spec.seed = 11;
    const SyntheticScene scene = synthesize_events(spec);
    REQUIRE(!scene.events.events.empty());
    for (const Event& e : scene.events.events) {
        CHECK(e.x < spec.width);
        CHECK(e.y < spec.height);
        CHECK(e.t <= spec.duration_us);
    }
    CHECK(std::is_sorted(scene.events.events.begin(), scene.events.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; }));
}

TEST_CASE("synthesis is deterministic for identical specs") {
    SyntheticSceneSpec spec;
    spec.texture = TextureKind::RandomBandlimited;
    spec.width = spec.height = 20;
    spec.vx = 1.0;
    spec.vy = 2.0;
    spec.seed = 5;
    CHECK(synthesize_events(spec).events == synthesize_events(spec).events);
}

TEST_CASE("scene spec validation") {
    SyntheticSceneSpec spec;
    spec.threshold = 0.0;
    CHECK_THROWS_AS(synthesize_events(spec), BadConfig);
    spec.threshold = 0.2;
    spec.duration_us = 0;
    CHECK_THROWS_AS(synthesize_events(spec), BadConfig);
}
