#include "cachefresh/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace cachefresh {

namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("source update rate must be positive and finite");
    }
}

void check_rate(double rate) {
    if (!(rate >= 0.0)) {
        throw std::invalid_argument("request rate must be non-negative");
    }
}

void check_probability(double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw std::invalid_argument("success probability must lie in (0, 1]");
    }
}

// Caller has validated inputs.
double factor(double rate, double lambda) {
    return rate > 0.0 ? rate / (rate + lambda) : 0.0;
}

}  // namespace

double single_hop_freshness(double rate, double lambda) {
    check_lambda(lambda);
    check_rate(rate);
    return factor(rate, lambda);
}

double two_hop_user_freshness(double user_rate, double cache_rate, double lambda,
                              double cache_success, double user_success) {
    check_lambda(lambda);
    check_rate(user_rate);
    check_rate(cache_rate);
    check_probability(cache_success);
    check_probability(user_success);
    return factor(user_success * user_rate, lambda) * factor(cache_success * cache_rate, lambda);
}

ChainFreshness chain_freshness(std::span<const double> chain_rates, double user_rate, double lambda,
                               double cache_success, double user_success) {
    check_lambda(lambda);
    check_rate(user_rate);
    check_probability(cache_success);
    check_probability(user_success);
    if (chain_rates.empty()) {
        throw std::invalid_argument("chain must contain at least one cache");
    }
    ChainFreshness out;
    out.stages.reserve(chain_rates.size());
    double running = 1.0;
    for (double c : chain_rates) {
        check_rate(c);
        running *= factor(cache_success * c, lambda);
        out.stages.push_back(running);
    }
    out.user = factor(user_success * user_rate, lambda) * running;
    return out;
}

std::vector<double> multi_user_freshness(double cache_rate, std::span<const double> user_rates,
                                         double lambda, double cache_success,
                                         double user_success) {
    check_lambda(lambda);
    check_rate(cache_rate);
    check_probability(cache_success);
    check_probability(user_success);
    const double cache = factor(cache_success * cache_rate, lambda);
    std::vector<double> out;
    out.reserve(user_rates.size());
    for (double u : user_rates) {
        check_rate(u);
        out.push_back(factor(user_success * u, lambda) * cache);
    }
    return out;
}

std::string to_string(UpdatePolicy policy) {
    switch (policy) {
        case UpdatePolicy::fixed_order: return "fixed-order";
        case UpdatePolicy::random_order: return "random-order";
        case UpdatePolicy::purely_random: return "purely-random";
    }
    return "unknown";
}

UpdatePolicy update_policy_from_string(const std::string& name) {
    if (name == "fixed-order") return UpdatePolicy::fixed_order;
    if (name == "random-order") return UpdatePolicy::random_order;
    if (name == "purely-random") return UpdatePolicy::purely_random;
    throw std::invalid_argument("unknown update policy: " + name);
}

double alt_single_hop_freshness(UpdatePolicy policy, double rate, double lambda) {
    check_lambda(lambda);
    check_rate(rate);
    if (rate == 0.0) return 0.0;
    if (policy == UpdatePolicy::purely_random) return factor(rate, lambda);

    const double x = rate / lambda;             // requests per source change
    const double miss = -std::expm1(-1.0 / x);  // 1 - e^{-lambda/c}
    if (policy == UpdatePolicy::fixed_order) {
        return x * miss;
    }
    return x * (1.0 - x * x * miss * miss);
}

}  // namespace cachefresh
