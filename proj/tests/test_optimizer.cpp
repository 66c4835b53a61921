#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cachefresh/optimizer.hpp"
#include "cachefresh/scenario.hpp"
#include "oracles.hpp"

using namespace cachefresh;
using doctest::Approx;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("inner solve: symmetric files share the budget") {
    const auto sol = threshold_inner_solve({{1.0, 1.0}, {1.0, 1.0}, 2.0});
    CHECK(sol.rates[0] == Approx(1.0).epsilon(1e-12));
    CHECK(sol.rates[1] == Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(sol.degenerate);
}

TEST_CASE("inner solve: unequal lambdas") {
    // Stationarity with both files active: sqrt(beta) = (sqrt 3 + 1) / 5.
    const auto sol = threshold_inner_solve({{1.0, 1.0}, {3.0, 1.0}, 1.0});
    CHECK(sol.rates[0] == Approx(0.1698729810778068).epsilon(1e-12));
    CHECK(sol.rates[1] == Approx(0.8301270189221934).epsilon(1e-12));
    CHECK(sol.rounds == 1);

    const auto grid = oracle::grid_search_inner({1.0, 1.0}, {3.0, 1.0}, 1.0, 1e-5);
    CHECK(grid.rates[0] == Approx(sol.rates[0]).epsilon(1e-4));
}

TEST_CASE("inner solve: deactivation round") {
    // The first threshold (0.131) exceeds sigma/lambda = 0.1 for the fast file.
    const auto sol = threshold_inner_solve({{1.0, 1.0}, {10.0, 1.0}, 0.5});
    CHECK(sol.rates[0] == 0.0);
    CHECK(sol.rates[1] == Approx(0.5).epsilon(1e-15));
    CHECK(sol.rounds == 2);
    // Final multiplier with only file 2 active: (1 / 1.5)^2.
    CHECK(sol.threshold == Approx(1.0 / 2.25).epsilon(1e-12));
    const double first_beta = std::pow((std::sqrt(10.0) + 1.0) / 11.5, 2.0);
    CHECK(first_beta == Approx(0.13099852794205494).epsilon(1e-14));
}

TEST_CASE("inner solve: degenerate when no file has weight") {
    const auto sol = threshold_inner_solve({{0.0, 0.0}, {1.0, 2.0}, 3.0});
    CHECK(sol.degenerate);
    CHECK(sol.rates == std::vector<double>{0.0, 0.0});
}

TEST_CASE("inner solve rejects malformed problems") {
    CHECK_THROWS_AS(threshold_inner_solve({{1.0}, {1.0, 2.0}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(threshold_inner_solve({{1.0}, {0.0}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(threshold_inner_solve({{-1.0}, {1.0}, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(threshold_inner_solve({{1.0}, {1.0}, -1.0}), std::invalid_argument);
}

TEST_CASE("property: inner solve spends the budget on an upper set of sigma/lambda") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    std::uniform_real_distribution<double> l(0.1, 10.0);
    std::uniform_real_distribution<double> b(0.1, 10.0);
    std::uniform_int_distribution<int> count(1, 12);
    for (int t = 0; t < 500; ++t) {
        InnerProblem prob;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            prob.sigmas.push_back(s(rng));
            prob.lambdas.push_back(l(rng));
        }
        prob.budget = b(rng);
        const auto sol = threshold_inner_solve(prob);
        CHECK(sum(sol.rates) == Approx(prob.budget).epsilon(1e-12));
        for (int i = 0; i < n; ++i) {
            CHECK(sol.rates[i] >= 0.0);
            for (int j = 0; j < n; ++j) {
                const double phi_i = prob.sigmas[i] / prob.lambdas[i];
                const double phi_j = prob.sigmas[j] / prob.lambdas[j];
                if (sol.rates[i] > 0.0 && phi_j > phi_i) CHECK(sol.rates[j] > 0.0);
            }
        }
    }
}

TEST_CASE("property: inner solve is never beaten by grid search") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> s(0.1, 1.0);
    std::uniform_real_distribution<double> l(0.5, 5.0);
    std::uniform_real_distribution<double> b(0.5, 5.0);
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + t % 2;
        InnerProblem prob;
        for (std::size_t i = 0; i < n; ++i) {
            prob.sigmas.push_back(s(rng));
            prob.lambdas.push_back(l(rng));
        }
        prob.budget = b(rng);
        const auto sol = threshold_inner_solve(prob);
        const auto grid = oracle::grid_search_inner(prob.sigmas, prob.lambdas, prob.budget, 1e-3 * prob.budget);
        const double best = inner_objective(prob, sol.rates);
        CHECK(best >= grid.objective - 1e-12);
        CHECK(best - grid.objective <= 1e-4);
    }
}

TEST_CASE("sigma construction") {
    const SourceProfile p{{1.0}};
    SUBCASE("single cache: the user's factor") {
        const auto topo = Topology::single_cache(1, 2.0, 3.0);
        RateAllocation a{{{2.0}}, {{3.0}}};
        CHECK(build_sigma(p, topo, a, {NodeKind::cache, 0}).sigmas[0] == Approx(0.75).epsilon(1e-15));
        CHECK(build_sigma(p, topo, a, {NodeKind::user, 0}).sigmas[0] == Approx(2.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("multi user: sum over users at the cache") {
        const auto topo = Topology::multi_user(1, 1.0, {1.0, 1.0});
        RateAllocation a{{{1.0}}, {{1.0}, {1.0}}};
        CHECK(build_sigma(p, topo, a, {NodeKind::cache, 0}).sigmas[0] == Approx(1.0).epsilon(1e-15));
        CHECK(build_sigma(p, topo, a, {NodeKind::user, 1}).sigmas[0] == Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("chain: product of the other stages") {
        const auto topo = Topology::serial_chain(1, {1.0, 1.0}, 1.0);
        RateAllocation a{{{1.0}, {1.0}}, {{1.0}}};
        CHECK(build_sigma(p, topo, a, {NodeKind::cache, 1}).sigmas[0] == Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("weights and losses") {
        SourceProfile lossy{{1.0}};
        lossy.weights = {2.0};
        lossy.cache_success = {0.5};
        const auto topo = Topology::single_cache(1, 2.0, 3.0);
        RateAllocation a{{{2.0}}, {{3.0}}};
        const auto prob = build_sigma(lossy, topo, a, {NodeKind::cache, 0});
        CHECK(prob.sigmas[0] == Approx(1.5).epsilon(1e-15));
        CHECK(prob.lambdas[0] == Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("unknown node") {
        const auto topo = Topology::single_cache(1, 2.0, 3.0);
        RateAllocation a{{{2.0}}, {{3.0}}};
        CHECK_THROWS_AS(build_sigma(p, topo, a, {NodeKind::user, 3}), std::out_of_range);
    }
}

TEST_CASE("identical files get a uniform allocation in every topology") {
    const SourceProfile p{std::vector<double>(4, 1.0)};
    for (const auto& topo : {Topology::single_cache(4, 4.0, 8.0), Topology::serial_chain(4, {4.0, 2.0}, 8.0),
                             Topology::multi_user(4, 4.0, {8.0, 2.0})}) {
        const auto res = alternating_maximize(p, topo);
        CHECK(res.trace.converged);
        for (std::size_t r = 0; r < topo.cache_count(); ++r)
            for (double x : res.allocation.cache_rates[r]) CHECK(x == Approx(topo.cache_budgets[r] / 4).epsilon(1e-9));
        for (std::size_t k = 0; k < topo.user_count(); ++k)
            for (double x : res.allocation.user_rates[k]) CHECK(x == Approx(topo.user_budgets[k] / 4).epsilon(1e-9));
    }
}

TEST_CASE("a single file takes the whole budget") {
    const SourceProfile p{{2.0}};
    const auto res = alternating_maximize(p, Topology::serial_chain(1, {3.0, 5.0}, 7.0));
    CHECK(res.allocation.cache_rates[0][0] == Approx(3.0).epsilon(1e-15));
    CHECK(res.allocation.cache_rates[1][0] == Approx(5.0).epsilon(1e-15));
    CHECK(res.allocation.user_rates[0][0] == Approx(7.0).epsilon(1e-15));
}

TEST_CASE("single cache with geometric rates drops the fastest files") {
    const SourceProfile p{geometric_lambdas(10.0, 0.7, 15)};
    const auto topo = Topology::single_cache(15, 5.0, 10.0);
    const auto res = alternating_maximize(p, topo);
    REQUIRE(res.trace.converged);
    for (std::size_t i = 0; i < 15; ++i) {
        const bool active = i >= 4;
        CHECK((res.allocation.cache_rates[0][i] > 0.0) == active);
        CHECK((res.allocation.user_rates[0][i] > 0.0) == active);
    }
    CHECK(max_kkt_residual(p, topo, res.allocation) <= 1e-8);
    CHECK(sum(res.allocation.cache_rates[0]) == Approx(5.0).epsilon(1e-12));
    CHECK(sum(res.allocation.user_rates[0]) == Approx(10.0).epsilon(1e-12));
}

TEST_CASE("objective trace never decreases") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> l(0.1, 10.0);
    std::uniform_real_distribution<double> b(0.5, 20.0);
    for (int t = 0; t < 30; ++t) {
        SourceProfile p;
        for (int i = 0; i < 6; ++i) p.lambdas.push_back(l(rng));
        const Topology topo = t % 3 == 0   ? Topology::single_cache(6, b(rng), b(rng))
                              : t % 3 == 1 ? Topology::serial_chain(6, {b(rng), b(rng)}, b(rng))
                                           : Topology::multi_user(6, b(rng), {b(rng), b(rng), b(rng)});
        const auto res = alternating_maximize(p, topo);
        const auto& it = res.trace.iterations;
        REQUIRE(!it.empty());
        for (std::size_t k = 1; k < it.size(); ++k) CHECK(it[k].objective >= it[k - 1].objective);
        CHECK(res.trace.converged);
        CHECK(validate(p, topo, res.allocation).empty());
    }
}

TEST_CASE("given initialization and iteration cap") {
    const SourceProfile p{geometric_lambdas(10.0, 0.7, 8)};
    const auto topo = Topology::single_cache(8, 4.0, 6.0);
    OptimizerSettings capped;
    capped.max_outer_iterations = 1;
    const auto short_run = alternating_maximize(p, topo, capped);
    CHECK_FALSE(short_run.trace.converged);
    CHECK(short_run.trace.iterations_used == 1);

    OptimizerSettings resume;
    resume.init = InitPolicy::given;
    const auto resumed = alternating_maximize(p, topo, resume, short_run.allocation);
    CHECK(resumed.trace.converged);
    CHECK(resumed.trace.iterations.front().objective >= total_objective(p, topo, short_run.allocation) - 1e-15);

    CHECK_THROWS_AS(alternating_maximize(p, topo, resume), std::invalid_argument);
}

TEST_CASE("settings validation") {
    OptimizerSettings s;
    s.max_outer_iterations = 0;
    CHECK_THROWS_AS(validate_settings(s), std::invalid_argument);
    s = {};
    s.objective_tolerance = 0.0;
    CHECK_THROWS_AS(validate_settings(s), std::invalid_argument);
    s = {};
    s.kkt_tolerance = -1.0;
    CHECK_THROWS_AS(validate_settings(s), std::invalid_argument);
}

TEST_CASE("KKT residuals") {
    const SourceProfile p{{1.0, 1.0}};
    const auto topo = Topology::single_cache(2, 2.0, 2.0);
    const RateAllocation even{{{1.0, 1.0}}, {{1.0, 1.0}}};
    CHECK(max_kkt_residual(p, topo, even) <= 1e-12);
    const RateAllocation skewed{{{1.5, 0.5}}, {{1.0, 1.0}}};
    CHECK(max_kkt_residual(p, topo, skewed) > 1e-3);
    // Spare budget means the multiplier must vanish, which it cannot here.
    const RateAllocation spare{{{0.5, 0.5}}, {{1.0, 1.0}}};
    CHECK(max_kkt_residual(p, topo, spare) > 1e-3);
    CHECK(kkt_residuals(p, topo, even).size() == 2);
}

TEST_CASE("baseline allocations") {
    const SourceProfile p{{1.0, 2.0}};
    const auto topo = Topology::single_cache(2, 3.0, 3.0);
    const auto prop = baseline_allocation(BaselinePolicy::lambda_proportional, topo, p);
    CHECK(prop.cache_rates[0][0] == Approx(1.0).epsilon(1e-15));
    CHECK(prop.cache_rates[0][1] == Approx(2.0).epsilon(1e-15));
    const auto inv = baseline_allocation(BaselinePolicy::lambda_inverse, topo, p);
    CHECK(inv.user_rates[0][0] == Approx(2.0).epsilon(1e-15));
    CHECK(inv.user_rates[0][1] == Approx(1.0).epsilon(1e-15));
    for (auto pol : {BaselinePolicy::lambda_proportional, BaselinePolicy::lambda_inverse})
        CHECK(baseline_policy_from_string(to_string(pol)) == pol);
}

TEST_CASE("lambda-proportional total has a closed form") {
    for (double a : {1.0, 5.0, 10.0, 20.0}) {
        const SourceProfile p{geometric_lambdas(a, 0.7, 20)};
        const auto topo = Topology::single_cache(20, 15.0, 10.0);
        const double total =
            total_objective(p, topo, baseline_allocation(BaselinePolicy::lambda_proportional, topo, p));
        const double expected = 20.0 * (10.0 / (10.0 + a)) * (15.0 / (15.0 + a));
        CHECK(total == Approx(expected).epsilon(1e-12));
    }
}
