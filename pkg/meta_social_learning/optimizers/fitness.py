"""
Controller fitness for offline training

A genotype is scored by simulating a homogeneous population whose agents all
run the candidate controller, without selection, and taking the median over
replicates of the cumulative mean population reward.  Every candidate of a
training run sees the same seed set.
"""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Optional, Sequence, Union

import numpy as np

from ..environment.reward_schedule import EnvironmentSchedule
from ..evolution.population import EvoParams, run_lifetime
from ..strategies.meta_strategies import FCN_PARAMETERS, FCNWeights, MetaKind, MetaSettings, RuleTable
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

RULE_SPACE = "rule"
FCN_SPACE = "fcn"
SPACES = (RULE_SPACE, FCN_SPACE)

RULE_GENES = 10


def check_space(space: str) -> str:
    if space not in SPACES:
        raise ConfigurationError(f"space must be one of {SPACES}, got {space!r}")
    return space


def genotype_length(space: str) -> int:
    return RULE_GENES if check_space(space) == RULE_SPACE else FCN_PARAMETERS


def space_meta_kind(space: str) -> MetaKind:
    return MetaKind.SL_GA if check_space(space) == RULE_SPACE else MetaKind.SL_NE


def decode_genotype(space: str, genotype: Sequence[float],
                    activation: str = "tanh") -> Union[RuleTable, FCNWeights]:
    """RuleTable or FCNWeights encoded by a genotype."""
    if check_space(space) == RULE_SPACE:
        return RuleTable.from_genotype(genotype)
    return FCNWeights.from_flat(genotype, activation)


def genotype_settings(space: str, genotype: Sequence[float],
                      settings: Optional[MetaSettings] = None, activation: str = "tanh") -> MetaSettings:
    settings = settings or MetaSettings()
    controller = decode_genotype(space, genotype, activation)
    if space == RULE_SPACE:
        return dataclasses.replace(settings, rule_table=controller)
    return dataclasses.replace(settings, fcn_weights=controller)


def controller_fitness(genotype: Sequence[float], space: str, train_env: EnvironmentSchedule,
                       params: EvoParams, seeds: Sequence[int],
                       settings: Optional[MetaSettings] = None, activation: str = "tanh") -> float:
    """
    Median over ``seeds`` of the cumulative mean reward of a population
    controlled by ``genotype``.
    """
    if not seeds:
        raise ConfigurationError("controller fitness needs at least one seed")
    run_settings = genotype_settings(space, genotype, settings, activation)
    kind = space_meta_kind(space)
    totals = [
        run_lifetime(kind, train_env, params, np.random.default_rng(seed), run_settings, seed,
                     record_context=False).cumulative_psi
        for seed in seeds
    ]
    return float(np.median(totals))


def evaluate_population(genotypes: np.ndarray, space: str, train_env: EnvironmentSchedule,
                        params: EvoParams, seeds: Sequence[int],
                        settings: Optional[MetaSettings] = None, activation: str = "tanh",
                        workers: int = 1) -> np.ndarray:
    """Fitness of every row of ``genotypes``, in a process pool when workers > 1."""
    score = partial(controller_fitness, space=space, train_env=train_env, params=params,
                    seeds=list(seeds), settings=settings, activation=activation)
    rows = [np.asarray(g, dtype=float) for g in genotypes]
    if workers <= 1 or len(rows) <= 1:
        return np.array([score(g) for g in rows])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(score, rows)))
