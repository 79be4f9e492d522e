"""
Uncertainty module for meta-social-learning

ODPU by quadrature and by Monte Carlo, plus grid helpers.
"""

from .odpu import (
    Group,
    GroupSpec,
    SIGMA_FLOOR,
    odpu_quadrature,
    odpu_monte_carlo,
    odpu_from_estimates,
    odpu_grid,
    sample_group_maxima,
    binary_success_copy_probability,
    binomial_standard_error,
)

__all__ = [
    "Group",
    "GroupSpec",
    "SIGMA_FLOOR",
    "odpu_quadrature",
    "odpu_monte_carlo",
    "odpu_from_estimates",
    "odpu_grid",
    "sample_group_maxima",
    "binary_success_copy_probability",
    "binomial_standard_error",
]
