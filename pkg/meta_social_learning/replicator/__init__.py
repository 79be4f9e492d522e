"""
Replicator module for meta-social-learning

Mean-field replicator-mutator model of individual and social learners.
"""

from .replicator_model import (
    MutationMatrix,
    ReplicatorConfig,
    ReplicatorState,
    HistoryGrid,
    Trajectory,
    payoff_from_schedule,
    constant_payoff,
    fitness_vector,
    replicator_rhs,
    mutator_derivative,
    integrate,
    trajectory_frame,
    find_stationary_point,
    sl_ratio_grid,
    basin_sweep,
    config_from_settings,
    SUCCESS,
    CONFORMIST,
)

__all__ = [
    "MutationMatrix",
    "ReplicatorConfig",
    "ReplicatorState",
    "HistoryGrid",
    "Trajectory",
    "payoff_from_schedule",
    "constant_payoff",
    "fitness_vector",
    "replicator_rhs",
    "mutator_derivative",
    "integrate",
    "trajectory_frame",
    "find_stationary_point",
    "sl_ratio_grid",
    "basin_sweep",
    "config_from_settings",
    "SUCCESS",
    "CONFORMIST",
]
