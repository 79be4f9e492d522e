"""
Environment module for meta-social-learning

Reward models per arm and piecewise or gradual schedules over time.
"""

from .reward_schedule import (
    RewardModel,
    Segment,
    Sinusoid,
    GradualSpec,
    EnvChangeLog,
    EnvironmentSchedule,
    DistributionPair,
    sample_reward,
    sample_rewards,
    make_reversal_schedule,
    make_binary_reversal_schedule,
    make_random_volatile,
    make_alternating_schedule,
    make_gradual_schedule,
    make_training_schedule,
    make_experiment1_schedules,
    solve_suboptimal_sigma,
    reconstruct_distribution_pool,
    split_pool_by_uncertainty,
    oriented_pool,
    schedule_from_dict,
    load_schedule,
)

__all__ = [
    "RewardModel",
    "Segment",
    "Sinusoid",
    "GradualSpec",
    "EnvChangeLog",
    "EnvironmentSchedule",
    "DistributionPair",
    "sample_reward",
    "sample_rewards",
    "make_reversal_schedule",
    "make_binary_reversal_schedule",
    "make_random_volatile",
    "make_alternating_schedule",
    "make_gradual_schedule",
    "make_training_schedule",
    "make_experiment1_schedules",
    "solve_suboptimal_sigma",
    "reconstruct_distribution_pool",
    "split_pool_by_uncertainty",
    "oriented_pool",
    "schedule_from_dict",
    "load_schedule",
]
