"""
meta-social-learning - Meta-social learning strategies on non-stationary bandits

This package simulates populations that mix individual learning with
success-based and conformist copying, measures the probability of deceptive
social information (ODPU), evolves and trains meta-strategies that switch
between learning modes by context, and runs the experiment harness with its
statistics and reports.
"""

__version__ = "1.0.0"

from .environment.reward_schedule import EnvironmentSchedule, load_schedule
from .uncertainty.odpu import GroupSpec, odpu_quadrature, odpu_from_estimates
from .strategies.meta_strategies import MetaKind, StrategyKind, MetaSettings
from .evolution.population import EvoParams, run_alg1, run_lifetime, run_competition
from .replicator.replicator_model import integrate
from .harness.experiments import build_experiment, run_experiment
from .api import SocialLearningLab

__all__ = [
    "EnvironmentSchedule",
    "load_schedule",
    "GroupSpec",
    "odpu_quadrature",
    "odpu_from_estimates",
    "MetaKind",
    "StrategyKind",
    "MetaSettings",
    "EvoParams",
    "run_alg1",
    "run_lifetime",
    "run_competition",
    "integrate",
    "build_experiment",
    "run_experiment",
    "SocialLearningLab",
    "__version__",
]
