#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cachefresh/analytics.hpp"
#include "cachefresh/optimizer.hpp"
#include "cachefresh/scenario.hpp"
#include "cachefresh/simulator.hpp"
#include "oracles.hpp"

using namespace cachefresh;

namespace {

bool covers(const Interval& iv, double value) { return std::abs(iv.mean - value) <= iv.half_width; }

SimConfig config(double horizon, std::uint64_t seed = 1, std::size_t reps = 20) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("one cache with no user matches c/(c+lambda)") {
    const std::vector<double> chain{2.0};
    const auto est = simulate_file(1.0, chain, {}, config(1e5));
    REQUIRE(est.caches.size() == 1);
    CHECK(covers(est.caches[0], 2.0 / 3.0));
    CHECK(est.caches[0].half_width < 0.01);
    CHECK(est.monotonicity_violations == 0);
}

TEST_CASE("two-stage chain with a user") {
    const std::vector<double> chain{1.0, 1.0};
    const std::vector<double> users{1.0};
    const auto est = simulate_file(1.0, chain, users, config(1e5, 2));
    CHECK(covers(est.caches[0], 0.5));
    CHECK(covers(est.caches[1], 0.25));
    CHECK(covers(est.users[0], 0.125));
}

TEST_CASE("a node with zero rate is never fresh downstream") {
    const std::vector<double> chain{0.0};
    const std::vector<double> users{5.0};
    SimConfig cfg = config(1e4);
    cfg.warmup = 10.0;  // every node starts fresh
    const auto est = simulate_file(1.0, chain, users, cfg);
    CHECK(est.caches[0].mean == 0.0);
    CHECK(est.users[0].mean == 0.0);
}

TEST_CASE("lossy links behave like thinned request rates") {
    const std::vector<double> chain{2.0};
    const std::vector<double> users{3.0};
    const LinkSuccess losses{{0.5}, {0.8}};
    const double user_exact = two_hop_user_freshness(3.0, 2.0, 1.0, 0.5, 0.8);
    const double cache_exact = oracle::ctmc_freshness(1.0, {2.0}, {3.0}, 0.5, 0.8)[0];
    // Ten independent 99% intervals: eight or more must cover.
    int user_hits = 0, cache_hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto est = simulate_file(1.0, chain, users, config(2e4, seed), losses);
        user_hits += covers(est.users[0], user_exact);
        cache_hits += covers(est.caches[0], cache_exact);
    }
    CHECK(user_hits >= 8);
    CHECK(cache_hits >= 8);
}

TEST_CASE("star of users") {
    const std::vector<double> chain{1.5};
    const std::vector<double> users{0.5, 2.0, 4.0};
    const auto est = simulate_file(0.7, chain, users, config(1e5, 4));
    const auto exact = multi_user_freshness(1.5, users, 0.7);
    for (std::size_t k = 0; k < users.size(); ++k) CHECK(covers(est.users[k], exact[k]));
}

TEST_CASE("identical inputs and seed reproduce bit for bit") {
    const std::vector<double> chain{1.0, 2.0};
    const std::vector<double> users{3.0};
    const auto a = simulate_file(0.9, chain, users, config(5e3, 42, 5), {}, 3);
    const auto b = simulate_file(0.9, chain, users, config(5e3, 42, 5), {}, 3);
    CHECK(a.samples == b.samples);
    CHECK(a.events == b.events);
    const auto c = simulate_file(0.9, chain, users, config(5e3, 43, 5), {}, 3);
    CHECK(a.samples != c.samples);
}

TEST_CASE("interval summary") {
    const std::vector<double> one{0.3};
    CHECK(summarize(one).mean == 0.3);
    CHECK(std::isinf(summarize(one).half_width));
    const std::vector<double> two{0.2, 0.4};
    const auto iv = summarize(two);
    CHECK(iv.mean == doctest::Approx(0.3));
    CHECK(iv.half_width == doctest::Approx(kZ99 * std::sqrt(0.02) / std::sqrt(2.0)));
}

TEST_CASE("invalid simulation inputs") {
    const std::vector<double> chain{1.0};
    CHECK_THROWS_AS(simulate_file(1.0, chain, {}, config(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_file(0.0, chain, {}, config(10.0)), std::invalid_argument);
    CHECK_THROWS_AS(simulate_file(1.0, chain, {}, config(10.0, 1, 0)), std::invalid_argument);
    SimConfig late = config(10.0);
    late.warmup = 10.0;
    CHECK_THROWS_AS(simulate_file(1.0, chain, {}, late), std::invalid_argument);
    CHECK_THROWS_AS(simulate_file(1.0, chain, {}, config(10.0), LinkSuccess{{0.0}, {}}), std::invalid_argument);
}

TEST_CASE("proportional baseline: every user copy is fresh one sixth of the time") {
    const SourceProfile p{geometric_lambdas(10.0, 0.7, 15)};
    const auto topo = Topology::single_cache(15, 5.0, 10.0);
    const auto alloc = baseline_allocation(BaselinePolicy::lambda_proportional, topo, p);
    const auto est = simulate_system(p, topo, alloc, config(1e6, 9));
    std::size_t covered = 0;
    for (const auto& iv : est.users[0]) covered += covers(iv, 1.0 / 6.0) ? 1 : 0;
    // 99% intervals: allow one miss out of fifteen.
    CHECK(covered >= 14);
    CHECK(est.monotonicity_violations == 0);
}

TEST_CASE("optimized allocation: simulated per-file freshness matches the analytic value") {
    const SourceProfile p{geometric_lambdas(10.0, 0.7, 15)};
    const auto topo = Topology::single_cache(15, 5.0, 10.0);
    const auto alloc = alternating_maximize(p, topo).allocation;
    const auto exact = evaluate(p, topo, alloc);
    const auto est = simulate_system(p, topo, alloc, config(1e6, 10));
    std::size_t covered = 0;
    for (std::size_t i = 0; i < 15; ++i) {
        if (exact.user_freshness[0][i] == 0.0) {
            CHECK(est.users[0][i].mean < 1e-3);  // only the initial fresh period
            ++covered;
        } else {
            covered += covers(est.users[0][i], exact.user_freshness[0][i]) ? 1 : 0;
        }
    }
    CHECK(covered >= 14);
    CHECK(covers(est.grand_total, exact.grand_total));
}
