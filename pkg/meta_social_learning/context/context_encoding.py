"""
Context encoding from population-level social information

Three binary detectors summarise the environment as seen through the
population record:

    EC(t)  environment change: the estimated optimal arm's mean moved by more
           than th_ec over delta steps
    C(t)   conformity: the best-looking arm is also the most chosen arm (reset
           to 0 whenever EC fires)
    U(t)   uncertainty: ODPU of the current estimates above th_u

The state index used by rule tables and Q-learning is 4*EC + 2*C + U.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..learning.learners import SocialHistory, SocialInfo
from ..uncertainty.odpu import odpu_or_none
from ..utils.errors import ConfigurationError, NotYetObservable
from ..utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class ContextParams:
    """Detector thresholds and the EC comparison lag."""
    th_ec: float = 0.15
    th_u: float = 0.1
    delta: int = 1

    def __post_init__(self):
        if self.th_ec <= 0:
            raise ConfigurationError(f"th_ec must be positive, got {self.th_ec}")
        if not (0.0 < self.th_u < 1.0):
            raise ConfigurationError(f"th_u must be in (0, 1), got {self.th_u}")
        if self.delta < 1:
            raise ConfigurationError(f"delta must be >= 1, got {self.delta}")

    @classmethod
    def from_config(cls, config: Dict) -> "ContextParams":
        section = config.get("context", {})
        return cls(float(section.get("th_ec", 0.15)), float(section.get("th_u", 0.1)),
                   int(section.get("delta", 1)))


@dataclass(frozen=True)
class Context:
    """Encoded context of one timestep."""
    ec: int
    conf: int
    unc: int
    odpu_value: float
    mu_hat: np.ndarray
    sigma_hat: np.ndarray

    @property
    def state(self) -> int:
        return 4 * self.ec + 2 * self.conf + self.unc

    @property
    def flags(self) -> Tuple[int, int, int]:
        return self.ec, self.conf, self.unc

    @classmethod
    def empty(cls, k: int) -> "Context":
        """Context before any social information is observable."""
        nan = np.full(k, np.nan)
        return cls(0, 0, 0, 0.0, nan, nan.copy())


def state_index(ec: int, conf: int, unc: int) -> int:
    return 4 * int(ec) + 2 * int(conf) + int(unc)


def state_flags(index: int) -> Tuple[int, int, int]:
    """Inverse of state_index."""
    if not 0 <= index < 8:
        raise ConfigurationError(f"state index must be in 0..7, got {index}")
    return (index >> 2) & 1, (index >> 1) & 1, index & 1


def estimate_arm_stats(info: SocialInfo) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-arm reward mean and sample standard deviation (n - 1 denominator).

    Arms nobody chose get NaN mean and NaN sigma; arms chosen once get NaN
    sigma (floored downstream).

    Returns:
        (mu_hat, sigma_hat, counts)
    """
    k = info.k
    mu_hat = np.full(k, np.nan)
    sigma_hat = np.full(k, np.nan)
    for arm in range(k):
        rewards = info.rewards[info.actions == arm]
        if rewards.size:
            mu_hat[arm] = rewards.mean()
        if rewards.size > 1:
            sigma_hat[arm] = rewards.std(ddof=1)
    return mu_hat, sigma_hat, info.freq.copy()


def _argmax_observed(values: np.ndarray) -> Optional[int]:
    if np.all(np.isnan(values)):
        return None
    return int(np.nanargmax(values))


def detect_ec(mu_hat_now: np.ndarray, mu_hat_past: Optional[np.ndarray], params: ContextParams) -> int:
    """1 iff the estimated optimal arm's mean moved by more than th_ec."""
    if mu_hat_past is None:
        return 0
    star = _argmax_observed(mu_hat_now)
    if star is None or np.isnan(mu_hat_past[star]):
        return 0
    return int(abs(mu_hat_now[star] - mu_hat_past[star]) > params.th_ec)


def detect_conformity(mu_hat: np.ndarray, freq: np.ndarray, ec: int) -> int:
    """1 iff the best-looking arm is the most chosen one and no change was detected."""
    if ec:
        return 0
    star = _argmax_observed(mu_hat)
    if star is None:
        return 0
    return int(star == int(np.argmax(freq)))


def detect_uncertainty(mu_hat: np.ndarray, sigma_hat: np.ndarray, counts: np.ndarray,
                       params: ContextParams) -> Tuple[int, float]:
    """(U, odpu): U is 1 iff the ODPU of the estimates exceeds th_u."""
    observed = int(np.count_nonzero((np.asarray(counts) > 0) & ~np.isnan(mu_hat)))
    if observed < 2:
        return 0, 0.0
    value = odpu_or_none(mu_hat, sigma_hat, counts)
    if value is None:
        return 0, 0.0
    return int(value > params.th_u), value


@dataclass(frozen=True)
class ContextStats:
    """Threshold-independent part of a context: estimates and the ODPU."""
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    counts: np.ndarray
    mu_past: Optional[np.ndarray]
    odpu_value: float

    def context(self, params: ContextParams) -> Context:
        ec = detect_ec(self.mu_hat, self.mu_past, params)
        conf = detect_conformity(self.mu_hat, self.counts, ec)
        unc = int(self.odpu_value > params.th_u)
        return Context(ec, conf, unc, self.odpu_value, self.mu_hat, self.sigma_hat)


class ContextEncoder:
    """
    Per-run context encoder.

    Keeps the estimate snapshot of every observed step so EC can compare with
    ``delta`` steps earlier; an arm nobody chose keeps its previous estimate.
    With ``ewma`` the means are exponentially weighted across steps instead of
    per-step snapshots.  ODPU values are cached per observed step, so several
    threshold sets (e.g. evolved controllers) can share one encoder.
    """

    def __init__(self, k: int, delta: int = 1, ewma: bool = False, ewma_alpha: float = 0.3):
        if not (0.0 < ewma_alpha <= 1.0):
            raise ConfigurationError(f"ewma_alpha must be in (0, 1], got {ewma_alpha}")
        self.k = k
        self.delta = delta
        self.ewma = ewma
        self.ewma_alpha = ewma_alpha
        self._snapshots: Dict[int, np.ndarray] = {}
        self._stats: Dict[int, ContextStats] = {}

    def _smoothed(self, source: int, mu_hat: np.ndarray) -> np.ndarray:
        previous = self._snapshots.get(source - 1)
        if previous is None:
            return mu_hat
        missing = np.isnan(mu_hat)
        current = np.where(missing, previous, mu_hat)
        if self.ewma:
            blend = self.ewma_alpha * current + (1.0 - self.ewma_alpha) * previous
            current = np.where(np.isnan(previous), current, blend)
        return current

    def stats(self, hist: SocialHistory, t: int, tau: int) -> Optional[ContextStats]:
        """Estimates seen by an agent acting at ``t``; None when nothing is observable."""
        try:
            info = hist.observe(t, tau)
        except NotYetObservable:
            return None

        source = info.t
        cached = self._stats.get(source)
        if cached is not None:
            return cached

        mu_hat, sigma_hat, counts = estimate_arm_stats(info)
        mu_hat = self._smoothed(source, mu_hat)
        self._snapshots[source] = mu_hat
        # Only the raw counts of this step feed the ODPU
        mu_for_odpu = np.where(counts > 0, mu_hat, np.nan)
        _, value = detect_uncertainty(mu_for_odpu, sigma_hat, counts, ContextParams())
        stats = ContextStats(mu_hat, sigma_hat, counts, self._snapshots.get(source - self.delta), value)
        self._stats[source] = stats
        self._prune(source)
        return stats

    def encode(self, hist: SocialHistory, t: int, tau: int, params: ContextParams) -> Context:
        """Context for step ``t`` under ``params``."""
        stats = self.stats(hist, t, tau)
        if stats is None:
            return Context.empty(self.k)
        return stats.context(params)

    def _prune(self, source: int) -> None:
        horizon = source - self.delta - 1
        for store in (self._snapshots, self._stats):
            for key in [key for key in store if key < horizon]:
                del store[key]
