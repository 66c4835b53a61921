#ifndef CACHEFRESH_SIMULATOR_HPP
#define CACHEFRESH_SIMULATOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cachefresh/model.hpp"

namespace cachefresh {

struct SimConfig {
    double horizon = 0.0;          ///< simulated time per replication
    std::size_t replications = 20;
    std::uint64_t seed = 0;
    double warmup = 0.0;           ///< start of the averaging window
};

/// 1e5 time units, stretched by 1/min(lambda) for slowly changing sources.
double default_horizon(const SourceProfile& profile);

/// Two-sided normal quantile for 99% intervals.
inline constexpr double kZ99 = 2.5758293035489004;

/// Replication statistics for one quantity.
struct Interval {
    double mean = 0.0;
    double half_width = 0.0;  ///< infinite with a single replication
};

Interval summarize(std::span<const double> samples);

/// Per-node delivery probabilities; empty means lossless.
struct LinkSuccess {
    std::vector<double> cache;  ///< one per cache stage
    std::vector<double> user;   ///< one per user
};

struct FileSimEstimate {
    std::vector<Interval> caches;
    std::vector<Interval> users;
    /// Fresh-time fraction per replication: [replication][node], caches then users.
    std::vector<std::vector<double>> samples;
    std::size_t replications = 0;
    double horizon = 0.0;
    std::uint64_t events = 0;
    /// Instants where a node was fresh while its upstream node was stale.
    std::uint64_t monotonicity_violations = 0;
};

/// Event-by-event simulation of one file.
///
/// Caches form a chain fed by the source (empty chain: users read the source
/// directly); users read from the last cache. Every node starts fresh at t=0.
/// A source update makes every node stale; a successful request at a node
/// copies the upstream node's bit. Clocks that cannot change the current
/// state (a request to an already-fresh node, say) are left out of the race;
/// by memorylessness this leaves the sample path's law unchanged while
/// skipping most of the events. `file_index` selects the RNG stream, so
/// identical (seed, file_index, inputs) give bit-identical results.
FileSimEstimate simulate_file(double lambda, std::span<const double> chain_rates,
                              std::span<const double> user_rates, const SimConfig& cfg,
                              const LinkSuccess& losses = {}, std::uint64_t file_index = 0);

struct SimEstimate {
    std::vector<std::vector<Interval>> caches;  ///< [m][n]
    std::vector<std::vector<Interval>> users;   ///< [d][n]
    std::vector<Interval> total_per_user;       ///< sum_i mu_i fresh fraction
    Interval grand_total;
    std::size_t replications = 0;
    double horizon = 0.0;
    std::uint64_t events = 0;
    std::uint64_t monotonicity_violations = 0;
};

/// simulate_file for every file of the system, with the profile's success
/// probabilities applied as explicit losses.
SimEstimate simulate_system(const SourceProfile& profile, const Topology& topo,
                            const RateAllocation& alloc, const SimConfig& cfg);

}  // namespace cachefresh

#endif  // CACHEFRESH_SIMULATOR_HPP
