"""
Individual learning and the primitive social learning rules

Timesteps of social information start at 1.  An agent acting at step t with
latency tau observes the population record of step t - tau, which exists only
when t - tau > 0; otherwise the copy rules raise NotYetObservable and the
caller falls back to individual learning.

Every argmax breaks ties towards the lowest index (arm or agent id).
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from ..utils.errors import ConfigurationError, NotYetObservable

PERFECT = "perfect"
CORRECT90 = "correct90"
RANDOM_MODEL = "random"
MODEL_KINDS = (PERFECT, CORRECT90, RANDOM_MODEL)


@dataclass
class QTable:
    """Estimated reward per action with a constant step size."""
    q: np.ndarray
    beta: float = 0.2

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 1 or self.q.size < 1:
            raise ConfigurationError("QTable needs a one-dimensional value vector")
        if not (0.0 < self.beta <= 1.0):
            raise ConfigurationError(f"beta must be in (0, 1], got {self.beta}")

    @classmethod
    def zeros(cls, k: int, beta: float = 0.2) -> "QTable":
        return cls(np.zeros(k), beta)

    @property
    def k(self) -> int:
        return self.q.size


def q_update(q: QTable, action: int, reward: float) -> QTable:
    """Return a new table with q[action] moved by beta towards ``reward``."""
    values = q.q.copy()[np.newaxis, :]
    q_update_population(values, np.array([action]), np.array([reward], dtype=float), q.beta)
    return QTable(values[0], q.beta)


def q_update_population(q: np.ndarray, actions: np.ndarray, rewards: np.ndarray, beta: float) -> None:
    """In-place constant step-size update for every agent; ``q`` has shape (m, k)."""
    rows = np.arange(q.shape[0])
    q[rows, actions] += beta * (rewards - q[rows, actions])


def epsilon_greedy(q: Union[QTable, np.ndarray], epsilon: float, rng: np.random.Generator) -> int:
    """
    Greedy arm with probability 1 - epsilon, otherwise a uniform arm (which
    may be the greedy one).
    """
    values = q.q if isinstance(q, QTable) else np.asarray(q, dtype=float)
    return int(epsilon_greedy_population(values[np.newaxis, :], epsilon, rng)[0])


def epsilon_greedy_population(q: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Epsilon-greedy choice for every row of a (m, k) value matrix."""
    if not (0.0 <= epsilon <= 1.0):
        raise ConfigurationError(f"epsilon must be in [0, 1], got {epsilon}")
    m, k = q.shape
    actions = np.argmax(q, axis=1)
    if epsilon > 0.0:
        explore = rng.random(m) < epsilon
        actions = np.where(explore, rng.integers(k, size=m), actions)
    return actions.astype(int)


@dataclass(frozen=True)
class SocialInfo:
    """
    Population record of one timestep.

    Agent ids are positions in the arrays.

    Attributes:
        t: Timestep (>= 1)
        freq: Action counts h(a_j, t), summing to the population size
        actions: Action of every agent
        rewards: Reward received by every agent
        strategies: Strategy code used by every agent, when recorded
    """
    t: int
    freq: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    strategies: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.actions.shape != self.rewards.shape:
            raise ConfigurationError("actions and rewards must have the same shape")
        if int(self.freq.sum()) != self.actions.size:
            raise ConfigurationError("action counts must sum to the population size")
        if self.actions.size and (self.actions.min() < 0 or self.actions.max() >= self.freq.size):
            raise ConfigurationError("recorded action outside the arm range")

    @classmethod
    def from_actions(cls, t: int, actions: np.ndarray, rewards: np.ndarray, k: int,
                     strategies: Optional[np.ndarray] = None) -> "SocialInfo":
        actions = np.asarray(actions, dtype=int)
        freq = np.bincount(actions, minlength=k)
        return cls(t, freq, actions, np.asarray(rewards, dtype=float), strategies)

    @property
    def m(self) -> int:
        return self.actions.size

    @property
    def k(self) -> int:
        return self.freq.size

    def entries(self) -> Iterator[Tuple[int, int, float]]:
        """(agent_id, action, reward) triples."""
        for i, (a, r) in enumerate(zip(self.actions, self.rewards)):
            yield i, int(a), float(r)


class SocialHistory:
    """Ring buffer of SocialInfo keyed by timestep."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigurationError("history capacity must be >= 1")
        self.capacity = capacity
        self._entries: "OrderedDict[int, SocialInfo]" = OrderedDict()

    def record(self, info: SocialInfo) -> None:
        self._entries[info.t] = info
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    def get(self, t: int) -> Optional[SocialInfo]:
        return self._entries.get(t)

    def observe(self, t: int, tau: int) -> SocialInfo:
        """
        Record visible to an agent acting at ``t`` with latency ``tau``.

        Raises:
            NotYetObservable: If t - tau <= 0 or the entry is no longer retained
        """
        source = t - tau
        if source <= 0 or source not in self._entries:
            raise NotYetObservable(t, tau)
        return self._entries[source]

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def latest(self) -> Optional[int]:
        return next(reversed(self._entries)) if self._entries else None


def success_based_copy_population(hist: SocialHistory, t: int, tau: int, size: int) -> np.ndarray:
    """
    Action of the best-rewarded agent at t - tau for ``size`` copiers.

    Raises:
        NotYetObservable: If t - tau is not observable
    """
    info = hist.observe(t, tau)
    return np.full(size, info.actions[int(np.argmax(info.rewards))], dtype=int)


def conformist_copy_population(hist: SocialHistory, t: int, tau: int, size: int) -> np.ndarray:
    """Most frequent action at t - tau for ``size`` copiers."""
    info = hist.observe(t, tau)
    return np.full(size, int(np.argmax(info.freq)), dtype=int)


def random_individual_copy_population(hist: SocialHistory, t: int, tau: int, size: int,
                                      rng: np.random.Generator) -> np.ndarray:
    """Each copier takes the action of its own uniformly drawn agent at t - tau."""
    info = hist.observe(t, tau)
    return info.actions[rng.integers(info.m, size=size)].astype(int)


def success_based_copy(hist: SocialHistory, t: int, tau: int) -> int:
    """Action of the best-rewarded agent at t - tau (lowest id on ties)."""
    return int(success_based_copy_population(hist, t, tau, 1)[0])


def conformist_copy(hist: SocialHistory, t: int, tau: int) -> int:
    """Most frequent action at t - tau (lowest arm on ties)."""
    return int(conformist_copy_population(hist, t, tau, 1)[0])


def random_individual_copy(hist: SocialHistory, t: int, tau: int, rng: np.random.Generator) -> int:
    """Action of a uniformly chosen agent at t - tau."""
    return int(random_individual_copy_population(hist, t, tau, 1, rng)[0])


def model_copy(kind: str, optimal_arm: int, rng: np.random.Generator, k: int = 2) -> int:
    """
    Action suggested by an external model.

    Args:
        kind: ``perfect`` (always optimal), ``correct90`` (optimal with
            probability 0.9, else uniform among the others) or ``random``
        optimal_arm: Currently optimal arm
        k: Number of arms
    """
    return int(model_copy_population(kind, optimal_arm, 1, rng, k)[0])


def model_copy_population(kind: str, optimal_arm: int, size: int, rng: np.random.Generator,
                          k: int = 2) -> np.ndarray:
    """model_copy for ``size`` agents at once."""
    if kind == PERFECT:
        return np.full(size, optimal_arm, dtype=int)
    if kind == RANDOM_MODEL:
        return rng.integers(k, size=size)
    if kind == CORRECT90:
        other = rng.integers(k - 1, size=size)
        other = np.where(other < optimal_arm, other, other + 1)
        return np.where(rng.random(size) < 0.9, optimal_arm, other).astype(int)
    raise ConfigurationError(f"Unknown model kind: {kind!r}")
