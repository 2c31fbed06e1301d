"""Multi-level Steiner tree solvers, exact oracles, generators and experiment harness."""

from .graph import (
    Edge,
    InstanceError,
    MlstSolution,
    MultiLevelGraph,
    RatePath,
    SolutionError,
    TieBreak,
    cost_of_solution,
    normalize_rates,
    prune_to_tree,
    rate_shortest_path,
    sigma,
    sigma_prime,
    terminal_set,
    validate_instance,
    validate_solution,
)

__version__ = "0.1.0"
