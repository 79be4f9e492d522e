"""
Context module for meta-social-learning

Environment change, conformity and uncertainty detectors.
"""

from .context_encoding import (
    Context,
    ContextParams,
    ContextStats,
    ContextEncoder,
    estimate_arm_stats,
    detect_ec,
    detect_conformity,
    detect_uncertainty,
    state_index,
    state_flags,
)

__all__ = [
    "Context",
    "ContextParams",
    "ContextStats",
    "ContextEncoder",
    "estimate_arm_stats",
    "detect_ec",
    "detect_conformity",
    "detect_uncertainty",
    "state_index",
    "state_flags",
]
