"""Freshness analysis and rate allocation for source-cache-user update networks."""

from ._core import (
    ValidationFailure,
    __version__,
    alt_single_hop_freshness,
    baseline_allocation,
    chain_freshness,
    evaluate,
    geometric_lambdas,
    multi_user_freshness,
    optimize,
    preset_config,
    preset_names,
    run_scenario,
    simulate_file,
    single_hop_freshness,
    threshold_inner_solve,
    two_hop_user_freshness,
)

__all__ = [
    "ValidationFailure",
    "__version__",
    "alt_single_hop_freshness",
    "baseline_allocation",
    "chain_freshness",
    "evaluate",
    "geometric_lambdas",
    "multi_user_freshness",
    "optimize",
    "preset_config",
    "preset_names",
    "run_scenario",
    "simulate_file",
    "single_hop_freshness",
    "threshold_inner_solve",
    "two_hop_user_freshness",
]
