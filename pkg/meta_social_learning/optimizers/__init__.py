"""
Optimizers module for meta-social-learning

Offline training of SL-GA rule tables and SL-NE network weights.
"""

from .fitness import (
    RULE_SPACE,
    FCN_SPACE,
    SPACES,
    controller_fitness,
    evaluate_population,
    decode_genotype,
    genotype_length,
    genotype_settings,
    space_meta_kind,
)
from .genetic_algorithm import (
    GaConfig,
    TrainingResult,
    ga_train,
    best_of_runs,
    initial_population,
    mutate_genotype,
    one_point_crossover,
    next_generation,
)
from .differential_evolution import DeConfig, de_train, rand1_donors, binomial_crossover

__all__ = [
    "RULE_SPACE",
    "FCN_SPACE",
    "SPACES",
    "controller_fitness",
    "evaluate_population",
    "decode_genotype",
    "genotype_length",
    "genotype_settings",
    "space_meta_kind",
    "GaConfig",
    "TrainingResult",
    "ga_train",
    "best_of_runs",
    "initial_population",
    "mutate_genotype",
    "one_point_crossover",
    "next_generation",
    "DeConfig",
    "de_train",
    "rand1_donors",
    "binomial_crossover",
]
