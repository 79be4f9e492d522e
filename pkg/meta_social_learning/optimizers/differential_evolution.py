"""
Differential evolution over network weights (rand/1/bin)
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from ..environment.reward_schedule import EnvironmentSchedule
from ..evolution.population import EvoParams, replicate_seeds
from ..strategies.meta_strategies import FCN_PARAMETERS, MetaSettings
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger
from .fitness import FCN_SPACE, evaluate_population
from .genetic_algorithm import FitnessFn, TrainingResult

logger = get_logger(__name__)


@dataclass(frozen=True)
class DeConfig:
    """rand/1 mutation with binomial crossover and greedy replacement."""
    F: float = 0.5
    CR: float = 0.1
    pop: int = 50
    init_low: float = -1.0
    init_high: float = 1.0
    stall: int = 50
    max_generations: int = 300

    def __post_init__(self):
        if self.F < 0:
            raise ConfigurationError(f"F must be >= 0, got {self.F}")
        if not (0.0 <= self.CR <= 1.0):
            raise ConfigurationError(f"CR must be in [0, 1], got {self.CR}")
        if self.pop < 4:
            raise ConfigurationError(f"DE needs a population of at least 4, got {self.pop}")
        if self.init_low >= self.init_high:
            raise ConfigurationError("init_low must be below init_high")
        if self.stall < 1 or self.max_generations < 1:
            raise ConfigurationError("stall and max_generations must be >= 1")

    @classmethod
    def from_config(cls, config: Optional[Dict] = None) -> "DeConfig":
        section = (config or {}).get("optimizers", {}).get("de", {})
        return cls(
            F=float(section.get("F", 0.5)),
            CR=float(section.get("CR", 0.1)),
            pop=int(section.get("pop", 50)),
            init_low=float(section.get("init_low", -1.0)),
            init_high=float(section.get("init_high", 1.0)),
            stall=int(section.get("stall", 50)),
            max_generations=int(section.get("max_generations", 300)),
        )


def rand1_donors(pop: np.ndarray, F: float, rng: np.random.Generator) -> np.ndarray:
    """v_i = x_r1 + F (x_r2 - x_r3) with r1, r2, r3 distinct and different from i."""
    n = pop.shape[0]
    donors = np.empty_like(pop)
    for i in range(n):
        r1, r2, r3 = rng.choice(np.delete(np.arange(n), i), size=3, replace=False)
        donors[i] = pop[r1] + F * (pop[r2] - pop[r3])
    return donors


def binomial_crossover(targets: np.ndarray, donors: np.ndarray, CR: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover at rate CR; one random dimension always comes from the donor."""
    n, dim = targets.shape
    mask = rng.random((n, dim)) < CR
    mask[np.arange(n), rng.integers(dim, size=n)] = True
    return np.where(mask, donors, targets)


def de_train(config: DeConfig, train_env: Optional[EnvironmentSchedule], rng: np.random.Generator,
             params: Optional[EvoParams] = None, replicates: int = 24, seed: int = 0,
             settings: Optional[MetaSettings] = None, workers: int = 1, activation: str = "tanh",
             fitness_fn: Optional[FitnessFn] = None, dim: int = FCN_PARAMETERS) -> TrainingResult:
    """
    Train FCN weights with differential evolution.

    Each generation builds one trial per population slot and keeps it when
    its fitness is at least the target's.  Stops after ``stall`` generations
    without improvement of the best fitness.
    """
    if fitness_fn is None:
        if train_env is None:
            raise ConfigurationError("de_train needs a training environment")
        if dim != FCN_PARAMETERS:
            raise ConfigurationError(f"network genotypes have {FCN_PARAMETERS} genes")
        params = params or EvoParams()
        seeds = replicate_seeds(seed, replicates)

        def fitness_fn(genotypes: np.ndarray) -> np.ndarray:
            return evaluate_population(genotypes, FCN_SPACE, train_env, params, seeds, settings,
                                       activation, workers)

    pop = rng.uniform(config.init_low, config.init_high, size=(config.pop, dim))
    fitness = np.asarray(fitness_fn(pop), dtype=float)
    best_idx = int(np.argmax(fitness))
    best, best_fitness = pop[best_idx].copy(), float(fitness[best_idx])
    rows = [{"generation": 0, "best": best_fitness, "mean": float(fitness.mean()), "best_ever": best_fitness}]
    stall = 0

    for generation in range(1, config.max_generations + 1):
        trials = binomial_crossover(pop, rand1_donors(pop, config.F, rng), config.CR, rng)
        trial_fitness = np.asarray(fitness_fn(trials), dtype=float)
        better = trial_fitness >= fitness
        pop[better] = trials[better]
        fitness[better] = trial_fitness[better]

        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > best_fitness:
            best, best_fitness = pop[gen_best].copy(), float(fitness[gen_best])
            stall = 0
        else:
            stall += 1
        rows.append({"generation": generation, "best": float(fitness.max()), "mean": float(fitness.mean()),
                     "best_ever": best_fitness})
        logger.debug(f"DE generation {generation}: replaced={int(better.sum())} best={best_fitness:.4f}")
        if stall >= config.stall:
            logger.info(f"DE stopped after {generation} generations without improvement for {stall}")
            break

    trace = pd.DataFrame(rows)
    trace.insert(0, "run", 0)
    return TrainingResult(FCN_SPACE, "de", best, best_fitness, trace, 1, activation, [best_fitness])
