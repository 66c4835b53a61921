#include "cachefresh/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>

namespace cachefresh {

namespace {

constexpr int kSource = -1;

void check_config(const SimConfig& cfg) {
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw std::invalid_argument("simulation horizon must be positive and finite");
    }
    if (cfg.replications < 1) throw std::invalid_argument("at least one replication is required");
    if (!(cfg.warmup >= 0.0) || !(cfg.warmup < cfg.horizon)) {
        throw std::invalid_argument("warmup must lie in [0, horizon)");
    }
}

void check_probabilities(const std::vector<double>& probs, std::size_t expected, const char* what) {
    if (probs.empty()) return;
    if (probs.size() != expected) {
        throw std::invalid_argument(std::string(what) + " success list has the wrong length");
    }
    for (double p : probs) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw std::invalid_argument(std::string(what) + " success probability must lie in (0, 1]");
        }
    }
}

using Engine = boost::random::mt19937_64;

// One stream per (seed, file, replication), independent of execution order.
Engine make_stream(std::uint64_t seed, std::uint64_t file, std::uint64_t replication) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(file), static_cast<std::uint32_t>(file >> 32),
                      static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(replication >> 32)};
    return Engine(seq);
}

// Freshness of every node as a bit mask (bit j set = node j fresh), with the
// transitions each clock can cause from every reachable mask. Clocks that
// cannot change the mask in a given state are left out of that state's race;
// dropping self-loops leaves the law of the state process unchanged.
struct StateTable {
    std::size_t nodes = 0;
    std::size_t width = 0;                 // clocks per state row
    std::vector<std::uint64_t> masks;
    std::vector<double> exit_rate;         // summed rate of the row's clocks
    std::vector<double> cumulative;        // [state * width + c], padded with +inf
    std::vector<std::uint32_t> next;       // successor on a successful firing
    std::vector<double> success;           // delivery probability of the clock
    std::vector<char> monotone;            // fresh node => fresh upstream node
    bool lossy = false;
};

StateTable build_table(double lambda, std::span<const double> chain, std::span<const double> users,
                       const LinkSuccess& losses) {
    const std::size_t m = chain.size();
    const std::size_t nodes = m + users.size();
    if (nodes > 63) throw std::invalid_argument("simulation supports at most 63 nodes per file");

    std::vector<int> parent(nodes);
    std::vector<double> rate(nodes);
    std::vector<double> success(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        if (j < m) {
            parent[j] = j == 0 ? kSource : static_cast<int>(j) - 1;
            rate[j] = chain[j];
            success[j] = losses.cache.empty() ? 1.0 : losses.cache[j];
        } else {
            parent[j] = m == 0 ? kSource : static_cast<int>(m) - 1;
            rate[j] = users[j - m];
            success[j] = losses.user.empty() ? 1.0 : losses.user[j - m];
        }
    }

    StateTable T;
    T.nodes = nodes;
    T.width = nodes + 1;
    auto bit = [](std::uint64_t mask, int j) { return j == kSource || ((mask >> j) & 1U) != 0; };

    std::unordered_map<std::uint64_t, std::uint32_t> index;
    auto intern = [&](std::uint64_t mask) {
        auto [it, inserted] = index.try_emplace(mask, static_cast<std::uint32_t>(T.masks.size()));
        if (inserted) T.masks.push_back(mask);
        return it->second;
    };
    const std::uint64_t all_fresh = nodes == 0 ? 0 : (~std::uint64_t{0} >> (64 - nodes));
    intern(all_fresh);

    for (std::size_t s = 0; s < T.masks.size(); ++s) {
        const std::uint64_t mask = T.masks[s];
        std::vector<std::pair<double, std::uint64_t>> clocks;  // (rate, successor)
        std::vector<double> probs;
        if (mask != 0) {
            clocks.emplace_back(lambda, 0);
            probs.push_back(1.0);
        }
        bool ok = true;
        for (std::size_t j = 0; j < nodes; ++j) {
            const bool up = bit(mask, parent[j]);
            const bool mine = bit(mask, static_cast<int>(j));
            if (mine && !up) ok = false;
            if (rate[j] > 0.0 && up != mine) {
                clocks.emplace_back(rate[j], mask ^ (std::uint64_t{1} << j));
                probs.push_back(success[j]);
                T.lossy = T.lossy || success[j] < 1.0;
            }
        }
        T.monotone.push_back(ok ? 1 : 0);

        double total = 0.0;
        std::vector<double> cum(T.width, std::numeric_limits<double>::infinity());
        std::vector<std::uint32_t> succ(T.width, static_cast<std::uint32_t>(s));
        std::vector<double> p(T.width, 1.0);
        for (std::size_t c = 0; c < clocks.size(); ++c) {
            total += clocks[c].first;
            cum[c] = total;
            succ[c] = intern(clocks[c].second);
            p[c] = probs[c];
        }
        // The last clock catches rounding at the top of the range.
        if (!clocks.empty()) cum[clocks.size() - 1] = std::numeric_limits<double>::infinity();
        T.exit_rate.push_back(total);
        T.cumulative.insert(T.cumulative.end(), cum.begin(), cum.end());
        T.next.insert(T.next.end(), succ.begin(), succ.end());
        T.success.insert(T.success.end(), p.begin(), p.end());
    }
    return T;
}

struct ReplicationResult {
    std::vector<double> fractions;
    std::uint64_t events = 0;
    std::uint64_t violations = 0;
};

// Uniform on [0, 1) from the top 53 bits of one engine draw.
double unit(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
}

ReplicationResult run_replication(const StateTable& T, const SimConfig& cfg, Engine& rng) {
    // Ziggurat sampler; the libstdc++ inversion sampler is several times slower.
    boost::random::exponential_distribution<double> unit_gap(1.0);
    std::vector<double> time_in_state(T.masks.size(), 0.0);

    ReplicationResult out;
    std::uint32_t state = 0;
    double t = 0.0;
    for (;;) {
        const double rate = T.exit_rate[state];
        const double t_next = rate > 0.0 ? t + unit_gap(rng) / rate : cfg.horizon;
        const double end = std::min(t_next, cfg.horizon);
        const double begin = std::max(t, cfg.warmup);
        if (end > begin) time_in_state[state] += end - begin;
        if (t_next >= cfg.horizon) break;
        t = t_next;
        ++out.events;

        const std::size_t row = state * T.width;
        const double x = unit(rng) * rate;
        std::size_t clock = 0;
        for (std::size_t c = 0; c + 1 < T.width; ++c) clock += x >= T.cumulative[row + c];

        if (T.lossy && unit(rng) >= T.success[row + clock]) continue;
        state = T.next[row + clock];
        out.violations += T.monotone[state] ? 0 : 1;
    }

    const double window = cfg.horizon - cfg.warmup;
    out.fractions.assign(T.nodes, 0.0);
    for (std::size_t s = 0; s < T.masks.size(); ++s) {
        for (std::size_t j = 0; j < T.nodes; ++j) {
            if ((T.masks[s] >> j) & 1U) out.fractions[j] += time_in_state[s];
        }
    }
    for (double& f : out.fractions) f /= window;
    return out;
}

}  // namespace

double default_horizon(const SourceProfile& profile) {
    if (profile.lambdas.empty()) throw std::invalid_argument("source profile has no files");
    const double slowest = *std::min_element(profile.lambdas.begin(), profile.lambdas.end());
    if (!(slowest > 0.0)) throw std::invalid_argument("source update rates must be positive");
    return 1e5 * std::max(1.0, 1.0 / slowest);
}

Interval summarize(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("no samples to summarize");
    const auto count = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= count;
    if (samples.size() == 1) return {mean, std::numeric_limits<double>::infinity()};
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / (count - 1.0));
    return {mean, kZ99 * sd / std::sqrt(count)};
}

FileSimEstimate simulate_file(double lambda, std::span<const double> chain_rates,
                              std::span<const double> user_rates, const SimConfig& cfg,
                              const LinkSuccess& losses, std::uint64_t file_index) {
    check_config(cfg);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("source update rate must be positive and finite");
    }
    for (auto rates : {chain_rates, user_rates}) {
        for (double r : rates) {
            if (!(r >= 0.0) || !std::isfinite(r)) {
                throw std::invalid_argument("request rates must be non-negative and finite");
            }
        }
    }
    check_probabilities(losses.cache, chain_rates.size(), "cache");
    check_probabilities(losses.user, user_rates.size(), "user");

    const StateTable table = build_table(lambda, chain_rates, user_rates, losses);
    const std::size_t m = chain_rates.size();
    const std::size_t nodes = table.nodes;

    FileSimEstimate est;
    est.replications = cfg.replications;
    est.horizon = cfg.horizon;
    est.samples.reserve(cfg.replications);
    for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
        auto rng = make_stream(cfg.seed, file_index, rep);
        auto run = run_replication(table, cfg, rng);
        est.events += run.events;
        est.monotonicity_violations += run.violations;
        est.samples.push_back(std::move(run.fractions));
    }

    std::vector<double> column(cfg.replications);
    for (std::size_t j = 0; j < nodes; ++j) {
        for (std::size_t rep = 0; rep < cfg.replications; ++rep) column[rep] = est.samples[rep][j];
        (j < m ? est.caches : est.users).push_back(summarize(column));
    }
    return est;
}

SimEstimate simulate_system(const SourceProfile& profile, const Topology& topo,
                            const RateAllocation& alloc, const SimConfig& cfg) {
    throw_if_invalid(validate(profile, topo, alloc));
    check_config(cfg);

    const std::size_t n = topo.files;
    const std::size_t m = topo.cache_count();
    const std::size_t d = topo.user_count();
    SimEstimate out;
    out.caches.assign(m, std::vector<Interval>(n));
    out.users.assign(d, std::vector<Interval>(n));
    out.replications = cfg.replications;
    out.horizon = cfg.horizon;

    // Files are independent, so replication r of each file can be summed
    // into replication r of the total.
    std::vector<std::vector<double>> user_totals(d, std::vector<double>(cfg.replications, 0.0));
    std::vector<double> chain(m);
    std::vector<double> users(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < m; ++r) chain[r] = alloc.cache_rates[r][i];
        for (std::size_t k = 0; k < d; ++k) users[k] = alloc.user_rates[k][i];
        LinkSuccess losses;
        if (!profile.cache_success.empty()) losses.cache.assign(m, profile.cache_p(i));
        if (!profile.user_success.empty()) losses.user.assign(d, profile.user_q(i));

        const auto est = simulate_file(profile.lambdas[i], chain, users, cfg, losses, i);
        out.events += est.events;
        out.monotonicity_violations += est.monotonicity_violations;
        for (std::size_t r = 0; r < m; ++r) out.caches[r][i] = est.caches[r];
        for (std::size_t k = 0; k < d; ++k) {
            out.users[k][i] = est.users[k];
            for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
                user_totals[k][rep] += profile.weight(i) * est.samples[rep][m + k];
            }
        }
    }

    std::vector<double> grand(cfg.replications, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        out.total_per_user.push_back(summarize(user_totals[k]));
        for (std::size_t rep = 0; rep < cfg.replications; ++rep) grand[rep] += user_totals[k][rep];
    }
    out.grand_total = summarize(grand);
    return out;
}

}  // namespace cachefresh
