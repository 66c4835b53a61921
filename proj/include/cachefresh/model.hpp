#ifndef CACHEFRESH_MODEL_HPP
#define CACHEFRESH_MODEL_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cachefresh {

/// Per-file source description. Empty optional vectors mean "all ones".
struct SourceProfile {
    std::vector<double> lambdas;        ///< source update rates, > 0
    std::vector<double> weights;        ///< importance factors, >= 0
    std::vector<double> cache_success;  ///< source->cache / cache->cache delivery probability
    std::vector<double> user_success;   ///< cache->user delivery probability

    std::size_t file_count() const { return lambdas.size(); }
    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
    double cache_p(std::size_t i) const { return cache_success.empty() ? 1.0 : cache_success[i]; }
    double user_q(std::size_t i) const { return user_success.empty() ? 1.0 : user_success[i]; }
};

enum class TopologyKind { single_cache, serial_chain, multi_user };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

/// Network layout with per-node total request-rate budgets.
///
/// single_cache: one cache, one user.
/// serial_chain: caches 1..m in series, one user behind cache m.
/// multi_user:   one cache, users 1..d attached to it.
struct Topology {
    TopologyKind kind = TopologyKind::single_cache;
    std::vector<double> cache_budgets;
    std::vector<double> user_budgets;
    std::size_t files = 0;

    static Topology single_cache(std::size_t n, double cache_budget, double user_budget);
    static Topology serial_chain(std::size_t n, std::vector<double> cache_budgets, double user_budget);
    static Topology multi_user(std::size_t n, double cache_budget, std::vector<double> user_budgets);

    std::size_t cache_count() const { return cache_budgets.size(); }
    std::size_t user_count() const { return user_budgets.size(); }
};

enum class NodeKind { cache, user };

struct NodeId {
    NodeKind kind = NodeKind::cache;
    std::size_t index = 0;

    friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// "cache1", "cache2", ..., "user1", ... (1-based, as printed in reports).
std::string node_label(NodeId node);

/// Request rates per node and file: cache_rates[r][i], user_rates[k][i].
struct RateAllocation {
    std::vector<std::vector<double>> cache_rates;
    std::vector<std::vector<double>> user_rates;

    const std::vector<double>& rates(NodeId node) const;
    std::vector<double>& rates(NodeId node);

    /// Every budget split evenly over the files.
    static RateAllocation uniform(const Topology& topo);
};

/// Long-term average freshness of every node and file.
struct FreshnessReport {
    std::vector<std::vector<double>> cache_freshness;  ///< [m][n]
    std::vector<std::vector<double>> user_freshness;   ///< [d][n]
    std::vector<double> total_per_user;                ///< sum_i mu_i F_u(k,i)
    double grand_total = 0.0;
};

struct IterationRecord {
    double objective = 0.0;
    double max_kkt_residual = 0.0;
    /// Files with positive rate, one entry per node in block order.
    std::vector<std::vector<std::size_t>> supports;
};

struct SolveTrace {
    std::vector<IterationRecord> iterations;
    bool converged = false;
    std::size_t iterations_used = 0;
};

enum class ValidationCode {
    empty_profile,
    nonpositive_lambda,
    invalid_weight,
    invalid_probability,
    invalid_budget,
    invalid_topology,
    dimension_mismatch,
    negative_rate,
    nonfinite_rate,
    budget_exceeded,
};

struct ValidationError {
    ValidationCode code;
    std::string message;
};

class ValidationFailure : public std::invalid_argument {
public:
    explicit ValidationFailure(std::vector<ValidationError> errors);
    const std::vector<ValidationError>& errors() const { return errors_; }

private:
    std::vector<ValidationError> errors_;
};

inline constexpr double kBudgetTolerance = 1e-9;

std::vector<ValidationError> validate_profile(const SourceProfile& profile);
std::vector<ValidationError> validate_topology(const SourceProfile& profile, const Topology& topo);

/// All violated invariants of the triple; empty means valid.
std::vector<ValidationError> validate(const SourceProfile& profile, const Topology& topo,
                                      const RateAllocation& alloc);

/// Throws ValidationFailure when `errors` is non-empty.
void throw_if_invalid(std::vector<ValidationError> errors);

FreshnessReport evaluate(const SourceProfile& profile, const Topology& topo,
                         const RateAllocation& alloc);

/// Weighted total user freshness, sum_k sum_i mu_i F_u(k,i).
double total_objective(const SourceProfile& profile, const Topology& topo,
                       const RateAllocation& alloc);

}  // namespace cachefresh

#endif  // CACHEFRESH_MODEL_HPP
