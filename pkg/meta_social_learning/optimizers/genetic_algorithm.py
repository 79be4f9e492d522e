"""
Genetic algorithm for controller training

Generational GA with elitism, roulette-wheel parent selection and one-point
crossover.  Two genotype spaces are supported:

    rule  8 strategy genes (0, 1, 2) followed by th_ec and th_u
    fcn   the 123 flattened weights of the 6-12-3 network

Training stops after ``stall`` generations without improvement of the best
fitness, or at ``max_generations``.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..environment.reward_schedule import EnvironmentSchedule
from ..evolution.population import EvoParams, replicate_seeds
from ..strategies.meta_strategies import FCNWeights, MetaSettings, N_STRATEGIES, RuleTable
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger
from .fitness import RULE_SPACE, check_space, decode_genotype, evaluate_population, genotype_length

logger = get_logger(__name__)

FitnessFn = Callable[[np.ndarray], np.ndarray]

N_RULES = 8


@dataclass(frozen=True)
class GaConfig:
    """
    GA settings.

    ``gene_mutation_prob`` defaults to 1/8 for rule tables (one over the
    number of strategy genes) and 1/123 for network weights.
    """
    pop: int = 50
    elites: int = 4
    crossover_prob: float = 0.8
    gaussian_sigma: float = 0.1
    stall: int = 20
    max_generations: int = 300
    mutate_all_dimensions: bool = False
    threshold_bounds: Tuple[float, float] = (1e-3, 1.0)
    init_low: float = -1.0
    init_high: float = 1.0
    gene_mutation_prob: Optional[float] = None

    def __post_init__(self):
        if self.pop < 2:
            raise ConfigurationError(f"GA population must be >= 2, got {self.pop}")
        if not (0 <= self.elites <= self.pop):
            raise ConfigurationError(f"elites must be in [0, pop], got {self.elites}")
        if not (0.0 <= self.crossover_prob <= 1.0):
            raise ConfigurationError("crossover_prob must be in [0, 1]")
        if self.gene_mutation_prob is not None and not (0.0 <= self.gene_mutation_prob <= 1.0):
            raise ConfigurationError("gene_mutation_prob must be in [0, 1]")
        if self.gaussian_sigma < 0:
            raise ConfigurationError("gaussian_sigma must be >= 0")
        lo, hi = self.threshold_bounds
        if not (0 < lo < hi):
            raise ConfigurationError(f"threshold_bounds must satisfy 0 < low < high, got {self.threshold_bounds}")
        if self.stall < 1 or self.max_generations < 1:
            raise ConfigurationError("stall and max_generations must be >= 1")

    @classmethod
    def for_space(cls, space: str, config: Optional[Dict] = None) -> "GaConfig":
        """Defaults of a genotype space, overridden by ``optimizers.ga`` of a merged config."""
        section = (config or {}).get("optimizers", {}).get("ga", {})
        rule = check_space(space) == RULE_SPACE
        bounds = section.get("threshold_bounds", (1e-3, 1.0))
        return cls(
            pop=int(section.get("pop", 50)),
            elites=int(section.get("rule_elites" if rule else "fcn_elites", 4 if rule else 5)),
            crossover_prob=float(section.get("crossover_prob", 0.8)),
            gaussian_sigma=float(section.get("gaussian_sigma", 0.1)),
            stall=int(section.get("rule_stall" if rule else "fcn_stall", 20 if rule else 50)),
            max_generations=int(section.get("max_generations", 300)),
            mutate_all_dimensions=bool(section.get("mutate_all_dimensions", False)),
            threshold_bounds=(float(bounds[0]), float(bounds[1])),
        )


@dataclass
class TrainingResult:
    """
    Outcome of one or more training runs.

    ``trace`` holds one row per generation (columns run, generation, best,
    mean, best_ever).
    """
    space: str
    algorithm: str
    best: np.ndarray
    best_fitness: float
    trace: pd.DataFrame
    runs: int = 1
    activation: str = "tanh"
    run_best: List[float] = field(default_factory=list)

    def controller(self) -> Union[RuleTable, FCNWeights]:
        return decode_genotype(self.space, self.best, self.activation)


def best_of_runs(results: Sequence[TrainingResult]) -> TrainingResult:
    """Merge independent runs, keeping the best genotype and every trace."""
    if not results:
        raise ConfigurationError("no training runs to merge")
    winner = max(results, key=lambda r: r.best_fitness)
    frames = []
    for i, result in enumerate(results):
        frame = result.trace.copy()
        frame["run"] = i
        frames.append(frame)
    return TrainingResult(winner.space, winner.algorithm, winner.best.copy(), winner.best_fitness,
                          pd.concat(frames, ignore_index=True), len(results), winner.activation,
                          [r.best_fitness for r in results])


def initial_population(space: str, config: GaConfig, rng: np.random.Generator) -> np.ndarray:
    n = genotype_length(space)
    if space == RULE_SPACE:
        pop = np.empty((config.pop, n))
        pop[:, :N_RULES] = rng.integers(N_STRATEGIES, size=(config.pop, N_RULES))
        lo, hi = config.threshold_bounds
        pop[:, N_RULES:] = rng.uniform(lo, hi, size=(config.pop, n - N_RULES))
        return pop
    return rng.uniform(config.init_low, config.init_high, size=(config.pop, n))


def roulette_parents(fitness: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Roulette-wheel draws; fitness is shifted to be positive when needed."""
    weights = np.asarray(fitness, dtype=float)
    if weights.min() <= 0:
        weights = weights - weights.min() + 1e-12
    total = weights.sum()
    if not np.isfinite(total) or total <= 0:
        return rng.integers(weights.size, size=n)
    return rng.choice(weights.size, size=n, p=weights / total)


def one_point_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    cut = int(rng.integers(1, a.size))
    return (np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]]))


def mutate_genotype(genotype: np.ndarray, space: str, config: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Per-gene mutation.

    Strategy genes move to one of the two other strategies; thresholds and
    weights get N(0, gaussian_sigma) noise.  Thresholds stay inside
    ``threshold_bounds``.
    """
    child = genotype.copy()
    if space == RULE_SPACE:
        p = config.gene_mutation_prob if config.gene_mutation_prob is not None else 1.0 / N_RULES
        hits = rng.random(child.size) < p
        for i in np.flatnonzero(hits[:N_RULES]):
            child[i] = (int(round(child[i])) + int(rng.integers(1, N_STRATEGIES))) % N_STRATEGIES
        noisy = np.flatnonzero(hits[N_RULES:]) + N_RULES
        child[noisy] += rng.normal(0.0, config.gaussian_sigma, size=noisy.size)
        child[N_RULES:] = np.clip(child[N_RULES:], *config.threshold_bounds)
        return child

    if config.mutate_all_dimensions:
        hits = np.ones(child.size, dtype=bool)
    else:
        p = config.gene_mutation_prob if config.gene_mutation_prob is not None else 1.0 / child.size
        hits = rng.random(child.size) < p
    child[hits] += rng.normal(0.0, config.gaussian_sigma, size=int(hits.sum()))
    return child


def next_generation(pop: np.ndarray, fitness: np.ndarray, space: str, config: GaConfig,
                    rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    """
    Offspring population: the elites first, then mutated children.

    Returns:
        (new population, number of elites carried over unchanged)
    """
    order = np.argsort(-fitness, kind="stable")
    elites = pop[order[:config.elites]].copy()
    children = []
    n_children = config.pop - config.elites
    while len(children) < n_children:
        i, j = roulette_parents(fitness, 2, rng)
        a, b = pop[i], pop[j]
        if rng.random() < config.crossover_prob:
            a, b = one_point_crossover(a, b, rng)
        children.append(mutate_genotype(a, space, config, rng))
        if len(children) < n_children:
            children.append(mutate_genotype(b, space, config, rng))
    if children:
        return np.vstack([elites] + [np.vstack(children)]), config.elites
    return elites, config.elites


def ga_train(space: str, config: GaConfig, train_env: Optional[EnvironmentSchedule],
             rng: np.random.Generator, params: Optional[EvoParams] = None, replicates: int = 24,
             seed: int = 0, settings: Optional[MetaSettings] = None, workers: int = 1,
             activation: str = "tanh", fitness_fn: Optional[FitnessFn] = None) -> TrainingResult:
    """
    Train a rule table or network weights with the GA.

    Args:
        space: ``rule`` or ``fcn``
        config: GA settings
        train_env: Training environment
        rng: Random generator driving the GA operators
        params: Simulation parameters of the fitness runs
        replicates: Simulated runs per fitness evaluation
        seed: Root of the fixed fitness seed set
        fitness_fn: Replaces the simulation-based fitness (genotype matrix -> scores)

    Returns:
        TrainingResult with the best genotype ever evaluated
    """
    check_space(space)
    if fitness_fn is None:
        if train_env is None:
            raise ConfigurationError("ga_train needs a training environment")
        params = params or EvoParams()
        seeds = replicate_seeds(seed, replicates)

        def fitness_fn(genotypes: np.ndarray) -> np.ndarray:
            return evaluate_population(genotypes, space, train_env, params, seeds, settings, activation, workers)

    pop = initial_population(space, config, rng)
    fitness = np.asarray(fitness_fn(pop), dtype=float)
    best_idx = int(np.argmax(fitness))
    best, best_fitness = pop[best_idx].copy(), float(fitness[best_idx])
    rows = [{"generation": 0, "best": float(fitness.max()), "mean": float(fitness.mean()),
             "best_ever": best_fitness}]
    stall = 0

    for generation in range(1, config.max_generations + 1):
        pop_next, n_elites = next_generation(pop, fitness, space, config, rng)
        order = np.argsort(-fitness, kind="stable")
        fitness_next = np.empty(pop_next.shape[0])
        fitness_next[:n_elites] = fitness[order[:n_elites]]
        if pop_next.shape[0] > n_elites:
            fitness_next[n_elites:] = fitness_fn(pop_next[n_elites:])
        pop, fitness = pop_next, fitness_next

        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > best_fitness:
            best, best_fitness = pop[gen_best].copy(), float(fitness[gen_best])
            stall = 0
        else:
            stall += 1
        rows.append({"generation": generation, "best": float(fitness.max()), "mean": float(fitness.mean()),
                     "best_ever": best_fitness})
        logger.debug(f"GA generation {generation}: best={fitness.max():.4f} best_ever={best_fitness:.4f}")
        if stall >= config.stall:
            logger.info(f"GA stopped after {generation} generations without improvement for {stall}")
            break

    trace = pd.DataFrame(rows)
    trace.insert(0, "run", 0)
    return TrainingResult(space, "ga", best, best_fitness, trace, 1, activation, [best_fitness])
