"""
Learning module for meta-social-learning

Epsilon-greedy individual learning and the social copy rules.
"""

from .learners import (
    QTable,
    SocialInfo,
    SocialHistory,
    q_update,
    q_update_population,
    epsilon_greedy,
    epsilon_greedy_population,
    success_based_copy,
    success_based_copy_population,
    conformist_copy,
    conformist_copy_population,
    random_individual_copy,
    random_individual_copy_population,
    model_copy,
    model_copy_population,
    MODEL_KINDS,
)

__all__ = [
    "QTable",
    "SocialInfo",
    "SocialHistory",
    "q_update",
    "q_update_population",
    "epsilon_greedy",
    "epsilon_greedy_population",
    "success_based_copy",
    "success_based_copy_population",
    "conformist_copy",
    "conformist_copy_population",
    "random_individual_copy",
    "random_individual_copy_population",
    "model_copy",
    "model_copy_population",
    "MODEL_KINDS",
]
