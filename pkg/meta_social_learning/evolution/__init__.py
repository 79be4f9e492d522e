"""
Evolution module for meta-social-learning

Agent-based runs: IL versus one social learning strategy, homogeneous
meta-strategy lifetimes and the meta-strategy competition.
"""

from .population import (
    EvoParams,
    Agent,
    Population,
    StepRecord,
    RunResult,
    roulette_select,
    age_update,
    mutate,
    act,
    select_and_mutate,
    generation_step_alg1,
    run_alg1,
    run_lifetime,
    run_competition,
    replicate_seeds,
    run_replicates,
    seeded_alg1,
    seeded_lifetime,
    seeded_competition,
    exploration_cost,
    ALG1_SLS,
    IL_TYPE,
    SL_TYPE,
)

__all__ = [
    "EvoParams",
    "Agent",
    "Population",
    "StepRecord",
    "RunResult",
    "roulette_select",
    "age_update",
    "mutate",
    "act",
    "select_and_mutate",
    "generation_step_alg1",
    "run_alg1",
    "run_lifetime",
    "run_competition",
    "replicate_seeds",
    "run_replicates",
    "seeded_alg1",
    "seeded_lifetime",
    "seeded_competition",
    "exploration_cost",
    "ALG1_SLS",
    "IL_TYPE",
    "SL_TYPE",
]
