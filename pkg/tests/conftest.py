"""
Pytest configuration and shared fixtures for meta-social-learning tests
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path so we can import our modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from meta_social_learning.environment.reward_schedule import (  # noqa: E402
    EnvironmentSchedule,
    RewardModel,
    Segment,
    make_reversal_schedule,
)
from meta_social_learning.evolution.population import EvoParams  # noqa: E402
from meta_social_learning.strategies.meta_strategies import MetaSettings  # noqa: E402
from meta_social_learning.utils.config_validator import load_config  # noqa: E402


@pytest.fixture
def rng():
    """Fixture providing a seeded random generator"""
    return np.random.default_rng(12345)


@pytest.fixture
def default_config():
    """Fixture providing the packaged default configuration"""
    return load_config()


@pytest.fixture
def short_reversal():
    """Fixture providing a 40-step low-uncertainty reversal schedule"""
    return make_reversal_schedule(1.0, 0.05, 0.4, 0.05, 40, "short_reversal")


@pytest.fixture
def noisy_reversal():
    """Fixture providing a 40-step high-uncertainty reversal schedule"""
    return make_reversal_schedule(1.0, 0.05, 0.4, 0.5, 40, "noisy_reversal")


@pytest.fixture
def constant_env():
    """Fixture providing a 30-step schedule that never changes"""
    arms = (RewardModel.gaussian(1.0, 0.0), RewardModel.gaussian(0.0, 0.0))
    return EnvironmentSchedule(k=2, segments=(Segment(30, arms),), name="constant")


@pytest.fixture
def small_params():
    """Fixture providing simulation parameters for a small population"""
    return EvoParams(m=30)


@pytest.fixture
def meta_settings():
    """Fixture providing default controller settings without trained controllers"""
    return MetaSettings()


@pytest.fixture
def short_reversal_dict(short_reversal):
    """Fixture providing the short reversal schedule as a configuration mapping"""
    return short_reversal.to_dict()
