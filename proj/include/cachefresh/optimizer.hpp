#ifndef CACHEFRESH_OPTIMIZER_HPP
#define CACHEFRESH_OPTIMIZER_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cachefresh/model.hpp"

namespace cachefresh {

/// One node's subproblem with every other node held fixed:
///
///     maximize  sum_i sigma_i * x_i / (x_i + lambda_i)
///     s.t.      sum_i x_i <= budget,  x_i >= 0
///
/// sigma_i is the (weighted) contribution of all other nodes; lambda_i is the
/// node's effective source rate (lambda / success probability on lossy links).
struct InnerProblem {
    std::vector<double> sigmas;
    std::vector<double> lambdas;
    double budget = 0.0;
};

struct InnerSolution {
    std::vector<double> rates;
    /// Lagrange multiplier of the budget constraint (0 when degenerate).
    double threshold = 0.0;
    /// True when no file has sigma_i > 0; the budget cannot be used.
    bool degenerate = false;
    /// Deactivation rounds until the support stabilized.
    std::size_t rounds = 0;
};

/// Exact maximizer of an InnerProblem.
///
/// Stationarity gives x_i = sqrt(sigma_i lambda_i / beta) - lambda_i on the
/// support, so the budget equation is linear in 1/sqrt(beta). Files with
/// sigma_i / lambda_i <= beta are removed and beta re-solved until the
/// support is stable. The support only shrinks, so this takes at most n rounds.
InnerSolution threshold_inner_solve(const InnerProblem& problem);

/// Objective value of an InnerProblem at the given rates.
double inner_objective(const InnerProblem& problem, const std::vector<double>& rates);

/// Subproblem for `target` given the rest of `alloc`.
///
/// Chain caches and users get the product of every other node's freshness
/// factor; the shared cache of a multi-user star gets the sum of its users'
/// factors. Both are scaled by the importance weight.
InnerProblem build_sigma(const SourceProfile& profile, const Topology& topo,
                         const RateAllocation& alloc, NodeId target);

/// Order in which alternating_maximize solves the blocks.
///
/// single_cache: cache, user. serial_chain: cache 1..m, user.
/// multi_user: users 1..d, cache.
std::vector<NodeId> block_order(const Topology& topo);

enum class InitPolicy { uniform, given };

struct OptimizerSettings {
    std::size_t max_outer_iterations = 10000;
    double objective_tolerance = 1e-10;
    double kkt_tolerance = 1e-8;
    InitPolicy init = InitPolicy::uniform;
};

/// Throws std::invalid_argument for non-positive tolerances or a zero cap.
void validate_settings(const OptimizerSettings& settings);

struct SolveResult {
    RateAllocation allocation;
    SolveTrace trace;
};

/// Cyclic exact block maximization over all nodes.
///
/// Every block is replaced by its threshold_inner_solve optimum; an update
/// that would lower the objective through rounding is rejected, so the
/// recorded objective never decreases. When a block drops a file, nodes whose
/// freshness for that file is a product with the block's factor drop it too.
/// Stops after a full cycle that changes the objective by less than
/// objective_tolerance with every KKT residual below kkt_tolerance.
///
/// `init` is required for InitPolicy::given and ignored otherwise.
SolveResult alternating_maximize(const SourceProfile& profile, const Topology& topo,
                                 const OptimizerSettings& settings = {},
                                 const std::optional<RateAllocation>& init = std::nullopt);

struct NodeResidual {
    NodeId node;
    double residual = 0.0;
    /// Mean marginal gain over the node's support (the multiplier estimate).
    double multiplier = 0.0;
};

/// Stationarity gap of every node, in block order.
///
/// On the support the marginal gains must all equal the multiplier; off the
/// support no gain may exceed it; a node with spare budget must have a zero
/// multiplier.
std::vector<NodeResidual> kkt_residuals(const SourceProfile& profile, const Topology& topo,
                                        const RateAllocation& alloc);

double max_kkt_residual(const SourceProfile& profile, const Topology& topo,
                        const RateAllocation& alloc);

enum class BaselinePolicy { lambda_proportional, lambda_inverse };

std::string to_string(BaselinePolicy policy);
BaselinePolicy baseline_policy_from_string(const std::string& name);

/// Splits every node's budget proportionally to lambda_i or to 1/lambda_i.
RateAllocation baseline_allocation(BaselinePolicy policy, const Topology& topo,
                                   const SourceProfile& profile);

}  // namespace cachefresh

#endif  // CACHEFRESH_OPTIMIZER_HPP
