#ifndef CACHEFRESH_ANALYTICS_HPP
#define CACHEFRESH_ANALYTICS_HPP

#include <span>
#include <string>
#include <vector>

namespace cachefresh {

// Closed-form long-term average binary freshness under Poisson source
// updates (rate lambda) and Poisson request processes at every node.
// All functions throw std::invalid_argument for lambda <= 0 or a negative
// rate. Success probabilities scale a request rate into its successful-request
// rate, so a lossy link with rate c behaves like a perfect link with rate p*c.

/// Freshness of a node that pulls straight from the source: c / (c + lambda).
double single_hop_freshness(double rate, double lambda);

/// Freshness at a user behind one cache.
double two_hop_user_freshness(double user_rate, double cache_rate, double lambda,
                              double cache_success = 1.0, double user_success = 1.0);

struct ChainFreshness {
    std::vector<double> stages;  ///< freshness at caches 1..m
    double user = 0.0;
};

/// Freshness at every cache of a serial chain and at the user behind it.
/// Each stage multiplies in its own single-hop factor.
ChainFreshness chain_freshness(std::span<const double> chain_rates, double user_rate, double lambda,
                               double cache_success = 1.0, double user_success = 1.0);

/// Per-user freshness for d users sharing one cache.
std::vector<double> multi_user_freshness(double cache_rate, std::span<const double> user_rates,
                                         double lambda, double cache_success = 1.0,
                                         double user_success = 1.0);

enum class UpdatePolicy { fixed_order, random_order, purely_random };

std::string to_string(UpdatePolicy policy);
UpdatePolicy update_policy_from_string(const std::string& name);

/// Single-hop freshness for alternative request schedules: periodic requests
/// in a fixed order, periodic requests in a reshuffled order, or Poisson
/// requests (purely_random). The limit at rate -> 0 is 0 for all three.
double alt_single_hop_freshness(UpdatePolicy policy, double rate, double lambda);

}  // namespace cachefresh

#endif  // CACHEFRESH_ANALYTICS_HPP
