"""
Optimum distribution prediction uncertainty (ODPU)

The ODPU is the probability that the largest reward sampled by the individuals
on a sub-optimal arm exceeds the largest reward sampled on the optimal arm.
With ``n`` i.i.d. draws from N(mu, sigma) the maximum has CDF Phi(z)^n, so

    ODPU = 1 - P(max_0 >= max_i for all i >= 1)
         = 1 - integral f_max0(y) * prod_i F_maxi(y) dy

The integral is evaluated with QUADPACK (adaptive Gauss-Kronrod) after the
substitution u = F_max0(y), which turns the density of the optimal group into
the uniform measure on [F_max0(lo), F_max0(hi)].  The substituted integrand is
bounded by 1, so a very narrow optimal group cannot hide between quadrature
nodes.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from ..utils.errors import ConfigurationError, NumericError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

SIGMA_FLOOR = 1e-9
TAIL_SIGMAS = 8.0
DEFAULT_TOL = 1e-8
U_FLOOR = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class Group:
    """One subgroup of individuals sampling the same Gaussian arm."""
    mu: float
    sigma: float
    n: int


@dataclass(frozen=True)
class GroupSpec:
    """
    Subgroups of a population; index 0 is the optimal arm (highest mu).

    Attributes:
        groups: At least two groups
    """
    groups: Tuple[Group, ...]

    def __post_init__(self):
        if len(self.groups) < 2:
            raise ConfigurationError("GroupSpec needs at least two groups")
        for g in self.groups:
            if g.n < 1:
                raise ConfigurationError(f"group size must be >= 1, got {g.n}")
            if not (math.isfinite(g.mu) and math.isfinite(g.sigma)):
                raise ConfigurationError("group parameters must be finite")
            if g.sigma < 0:
                raise ConfigurationError(f"group sigma must be >= 0, got {g.sigma}")

    @classmethod
    def from_arrays(cls, mu: Sequence[float], sigma: Sequence[float], n: Sequence[int]) -> "GroupSpec":
        if not (len(mu) == len(sigma) == len(n)):
            raise ConfigurationError("mu, sigma and n must have the same length")
        return cls(tuple(Group(float(m), float(s), int(c)) for m, s, c in zip(mu, sigma, n)))

    @property
    def floored(self) -> "GroupSpec":
        """Copy with every sigma floored at SIGMA_FLOOR."""
        return GroupSpec(tuple(Group(g.mu, max(g.sigma, SIGMA_FLOOR), g.n) for g in self.groups))


def _max_quantile(u: float, mu: float, sigma: float, n: int) -> float:
    """Inverse CDF of the maximum of n draws: mu + sigma * Phi^-1(u^(1/n))."""
    # Phi^-1(p) for p close to 1 via the complementary tail
    tail = -math.expm1(math.log(max(u, U_FLOOR)) / n)
    return mu - sigma * float(special.ndtri(tail))


def _log_max_cdf(y: float, mu: float, sigma: float, n: int) -> float:
    return n * float(special.log_ndtr((y - mu) / sigma))


def _negligible(spec: GroupSpec) -> bool:
    """True when every sub-optimal upper tail lies below the optimal lower tail."""
    best = spec.groups[0]
    floor_opt = best.mu - TAIL_SIGMAS * best.sigma
    return all(g.mu + TAIL_SIGMAS * g.sigma < floor_opt for g in spec.groups[1:])


def odpu_quadrature(spec: GroupSpec, tol: float = DEFAULT_TOL) -> float:
    """
    ODPU of a group specification by adaptive quadrature.

    Args:
        spec: Groups with index 0 the optimal arm
        tol: Absolute tolerance of the integral

    Returns:
        Probability in [0, 1]

    Raises:
        ConfigurationError: If group 0 does not carry the highest mean
        NumericError: If the integrand or the result is not finite
    """
    spec = spec.floored
    best = spec.groups[0]
    if any(g.mu > best.mu for g in spec.groups[1:]):
        raise ConfigurationError("group 0 must have the highest mu")

    if _negligible(spec):
        return 0.0

    sigma_max = max(g.sigma for g in spec.groups)
    lo = min(g.mu for g in spec.groups) - TAIL_SIGMAS * sigma_max
    hi = best.mu + TAIL_SIGMAS * sigma_max
    others = spec.groups[1:]

    # exp underflows to 0 for large optimal groups with wide rivals
    u_lo = max(math.exp(_log_max_cdf(lo, best.mu, best.sigma, best.n)), U_FLOOR)
    u_hi = math.exp(_log_max_cdf(hi, best.mu, best.sigma, best.n))
    if u_hi <= u_lo:
        raise NumericError("degenerate integration range for the optimal group")

    def integrand(u: float) -> float:
        y = _max_quantile(u, best.mu, best.sigma, best.n)
        value = math.exp(sum(_log_max_cdf(y, g.mu, g.sigma, g.n) for g in others))
        if not math.isfinite(value):
            raise NumericError(f"non-finite ODPU integrand at u={u}")
        return value

    # Break at the images of the other groups' means so steps are not straddled
    points: List[float] = []
    for g in others:
        u = math.exp(_log_max_cdf(g.mu, best.mu, best.sigma, best.n))
        if u_lo < u < u_hi:
            points.append(u)

    # Mass of the optimal maximum outside [lo, hi] counts as "optimal wins"
    # above hi and as "optimal loses" below lo; both are below tol.
    try:
        value, abserr = integrate.quad(
            integrand, u_lo, u_hi,
            points=sorted(set(points)) or None,
            epsabs=tol, epsrel=1e-10, limit=200,
        )
    except (ValueError, OverflowError) as e:
        raise NumericError(f"ODPU quadrature failed: {e}") from e
    if not math.isfinite(value):
        raise NumericError("ODPU quadrature returned a non-finite value")
    if abserr > 100 * tol:
        logger.debug(f"ODPU quadrature error estimate {abserr:.2e} above tolerance")

    p_optimal = value + (1.0 - u_hi)
    return float(min(1.0, max(0.0, 1.0 - p_optimal)))


def sample_group_maxima(group: Group, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``trials`` maxima of ``group.n`` i.i.d. normal samples."""
    u = rng.random(trials)
    # avoid log(0)
    u = np.clip(u, U_FLOOR, 1.0)
    tail = -np.expm1(np.log(u) / group.n)
    return group.mu - max(group.sigma, SIGMA_FLOOR) * special.ndtri(tail)


def odpu_monte_carlo(spec: GroupSpec, trials: int, rng: np.random.Generator,
                     batch: int = 1_000_000) -> float:
    """
    ODPU estimated by sampling the group maxima.

    A trial counts as uncertain when some sub-optimal maximum strictly exceeds
    the optimal maximum.

    Args:
        spec: Groups with index 0 the optimal arm
        trials: Number of trials (>= 1)
        rng: Random generator
        batch: Trials drawn per vectorised batch

    Returns:
        Fraction of uncertain trials
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")

    exceed = 0
    remaining = trials
    while remaining > 0:
        size = min(batch, remaining)
        best = sample_group_maxima(spec.groups[0], size, rng)
        rival = np.full(size, -np.inf)
        for g in spec.groups[1:]:
            rival = np.maximum(rival, sample_group_maxima(g, size, rng))
        exceed += int(np.count_nonzero(rival > best))
        remaining -= size
    return exceed / trials


def odpu_from_estimates(mu_hat: Sequence[float], sigma_hat: Sequence[float],
                        counts: Sequence[int], tol: float = DEFAULT_TOL) -> float:
    """
    ODPU from population estimates of the arm statistics.

    Arms without observations (count 0 or missing mean) are excluded; with
    fewer than two observed arms the ODPU is 0.

    Args:
        mu_hat: Estimated mean reward per arm
        sigma_hat: Estimated reward standard deviation per arm
        counts: Number of individuals that chose each arm

    Returns:
        Probability in [0, 1]
    """
    if not (len(mu_hat) == len(sigma_hat) == len(counts)):
        raise ConfigurationError("mu_hat, sigma_hat and counts must have the same length")
    if len(mu_hat) < 2:
        raise ConfigurationError("at least two arms are required")

    observed = []
    for j, (m, s, c) in enumerate(zip(mu_hat, sigma_hat, counts)):
        if c is None or int(c) <= 0 or m is None or not math.isfinite(m):
            continue
        s = float(s) if s is not None and math.isfinite(s) else SIGMA_FLOOR
        observed.append((-float(m), j, max(s, SIGMA_FLOOR), int(c)))

    if len(observed) < 2:
        return 0.0

    # Highest mean first; ties resolved by arm index
    observed.sort()
    spec = GroupSpec(tuple(Group(-neg_mu, s, c) for neg_mu, _, s, c in observed))
    return odpu_quadrature(spec, tol)


def odpu_grid(mu: Tuple[float, float], sigma_opt_values: Iterable[float],
              sigma_sub_values: Iterable[float], m: int, n: int) -> np.ndarray:
    """
    ODPU over a (sigma_opt, sigma_sub) grid for a two-arm population.

    Args:
        mu: (optimal mean, sub-optimal mean)
        sigma_opt_values: Standard deviations of the optimal arm (rows)
        sigma_sub_values: Standard deviations of the sub-optimal arm (columns)
        m: Individuals on the optimal arm
        n: Individuals on the sub-optimal arm

    Returns:
        Array of shape (len(sigma_opt_values), len(sigma_sub_values))
    """
    rows = list(sigma_opt_values)
    cols = list(sigma_sub_values)
    grid = np.zeros((len(rows), len(cols)))
    for i, s_opt in enumerate(rows):
        for j, s_sub in enumerate(cols):
            spec = GroupSpec.from_arrays(mu, (s_opt, s_sub), (m, n))
            grid[i, j] = odpu_quadrature(spec)
    return grid


def binary_success_copy_probability(mu1: float, mu2: float, n: int, m: int) -> float:
    """
    Probability that success-based copying picks the optimal arm with
    Bernoulli rewards, when ``n`` individuals sit on the optimal arm (success
    probability mu1) and ``m`` on the other (mu2).
    """
    denom = mu1 * n + mu2 * m
    if denom <= 0:
        return 0.0
    return mu1 * n / denom


def binomial_standard_error(p: float, trials: int) -> float:
    """Standard error of a Monte Carlo proportion."""
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials) if trials > 0 else float("inf")


def odpu_or_none(mu_hat, sigma_hat, counts) -> Optional[float]:
    """odpu_from_estimates that maps numeric failures to ``None``."""
    try:
        return odpu_from_estimates(mu_hat, sigma_hat, counts)
    except NumericError as e:
        logger.warning(f"ODPU evaluation failed: {e}")
        return None
