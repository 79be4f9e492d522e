"""
Reward models and time-varying environment schedules

An EnvironmentSchedule assigns one RewardModel to every arm at every timestep,
either piecewise (a list of segments) or through a parametric sinusoid
(gradual change).  Schedules are immutable once built, so one instance can be
shared by every replicate of an experiment.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..uncertainty.odpu import GroupSpec, odpu_quadrature
from ..utils.config_validator import load_yaml
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
REWARD_KINDS = (GAUSSIAN, BERNOULLI)


@dataclass(frozen=True)
class RewardModel:
    """
    Reward distribution of one arm.

    Attributes:
        kind: ``gaussian`` or ``bernoulli``
        mu: Gaussian mean
        sigma: Gaussian standard deviation (>= 0)
        p: Bernoulli success probability
        low: Bernoulli payoff on failure
        high: Bernoulli payoff on success
    """
    kind: str = GAUSSIAN
    mu: float = 0.0
    sigma: float = 0.0
    p: float = 0.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ConfigurationError(f"Unknown reward kind: {self.kind!r}")
        if self.sigma < 0 or not math.isfinite(self.sigma):
            raise ConfigurationError(f"sigma must be a finite value >= 0, got {self.sigma}")
        if not (0.0 <= self.p <= 1.0):
            raise ConfigurationError(f"p must be in [0, 1], got {self.p}")
        if not self.low < self.high:
            raise ConfigurationError(f"low must be below high, got {self.low} >= {self.high}")

    @classmethod
    def gaussian(cls, mu: float, sigma: float) -> "RewardModel":
        return cls(kind=GAUSSIAN, mu=float(mu), sigma=float(sigma))

    @classmethod
    def bernoulli(cls, p: float, low: float = 0.0, high: float = 1.0) -> "RewardModel":
        return cls(kind=BERNOULLI, p=float(p), low=float(low), high=float(high))

    def mean(self) -> float:
        """Expected reward."""
        if self.kind == GAUSSIAN:
            return self.mu
        return self.p * self.high + (1.0 - self.p) * self.low

    def std(self) -> float:
        if self.kind == GAUSSIAN:
            return self.sigma
        return (self.high - self.low) * math.sqrt(self.p * (1.0 - self.p))

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        """Draw ``size`` rewards (a scalar when size is None)."""
        if self.kind == GAUSSIAN:
            return rng.normal(self.mu, self.sigma, size)
        success = rng.random(size) < self.p
        return np.where(success, self.high, self.low) if size is not None else (
            self.high if success else self.low
        )

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == GAUSSIAN:
            return {"kind": GAUSSIAN, "mu": self.mu, "sigma": self.sigma}
        return {"kind": BERNOULLI, "p": self.p, "low": self.low, "high": self.high}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RewardModel":
        kind = data.get("kind", GAUSSIAN)
        if kind == GAUSSIAN:
            if "mu" not in data:
                raise ConfigurationError("gaussian arm requires 'mu'")
            return cls.gaussian(data["mu"], data.get("sigma", 0.0))
        if kind == BERNOULLI:
            if "p" not in data:
                raise ConfigurationError("bernoulli arm requires 'p'")
            return cls.bernoulli(data["p"], data.get("low", 0.0), data.get("high", 1.0))
        raise ConfigurationError(f"Unknown reward kind: {kind!r}")


def sample_reward(model: RewardModel, rng: np.random.Generator) -> float:
    """One unclipped draw from ``model``."""
    return float(model.sample(rng))


def sample_rewards(models: Sequence[RewardModel], actions: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """
    Rewards for a whole population.

    Args:
        models: Active model per arm
        actions: Integer arm index per agent

    Returns:
        Float array with one reward per agent
    """
    actions = np.asarray(actions, dtype=int)
    rewards = np.empty(actions.shape[0], dtype=float)
    for arm, model in enumerate(models):
        mask = actions == arm
        count = int(mask.sum())
        if count:
            rewards[mask] = model.sample(rng, count)
    return rewards


@dataclass(frozen=True)
class Segment:
    """A period of constant arm models."""
    duration: int
    arm_models: Tuple[RewardModel, ...]


@dataclass(frozen=True)
class Sinusoid:
    """offset + amplitude * sin(2*pi*t/period + phase); period defaults to the horizon."""
    offset: float
    amplitude: float = 0.0
    phase: float = 0.0
    period: Optional[float] = None

    def value(self, t: float, horizon: int) -> float:
        period = self.period or horizon
        return self.offset + self.amplitude * math.sin(2.0 * math.pi * t / period + self.phase)

    def to_dict(self) -> Dict[str, Any]:
        data = {"offset": self.offset, "amplitude": self.amplitude, "phase": self.phase}
        if self.period is not None:
            data["period"] = self.period
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Sinusoid":
        try:
            return cls(float(data["offset"]), float(data.get("amplitude", 0.0)),
                       float(data.get("phase", 0.0)),
                       float(data["period"]) if data.get("period") is not None else None)
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"Invalid sinusoid definition: {data!r}") from e


@dataclass(frozen=True)
class GradualSpec:
    """Gaussian arms whose means and standard deviations follow sinusoids."""
    horizon: int
    means: Tuple[Sinusoid, ...]
    sigmas: Tuple[Sinusoid, ...]


@dataclass(frozen=True)
class EnvChangeLog:
    """Timesteps at which the arm models switch."""
    change_points: Tuple[int, ...]
    horizon: int

    def __post_init__(self):
        points = self.change_points
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ConfigurationError("change points must be strictly increasing")
        if points and (points[0] < 0 or points[-1] >= self.horizon):
            raise ConfigurationError("change points must lie inside the horizon")

    def __len__(self) -> int:
        return len(self.change_points)


@dataclass(frozen=True)
class EnvironmentSchedule:
    """
    Piecewise or gradual assignment of reward models to arms over time.

    Attributes:
        k: Number of arms
        segments: Ordered segments (piecewise schedules)
        gradual: Sinusoid spec (gradual schedules)
        name: Label used in reports
        reconstructed: True when the parameters are a reconstruction
    """
    k: int
    segments: Optional[Tuple[Segment, ...]] = None
    gradual: Optional[GradualSpec] = None
    name: str = ""
    reconstructed: bool = False
    _starts: Tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 2:
            raise ConfigurationError(f"at least two arms are required, got k={self.k}")
        if (self.segments is None) == (self.gradual is None):
            raise ConfigurationError("exactly one of segments or gradual must be set")

        if self.segments is not None:
            if not self.segments:
                raise ConfigurationError("segment list is empty")
            starts = []
            position = 0
            for seg in self.segments:
                if seg.duration < 1:
                    raise ConfigurationError(f"segment duration must be >= 1, got {seg.duration}")
                if len(seg.arm_models) != self.k:
                    raise ConfigurationError(
                        f"segment has {len(seg.arm_models)} arm models, expected {self.k}"
                    )
                starts.append(position)
                position += seg.duration
            object.__setattr__(self, "_starts", tuple(starts))
        else:
            g = self.gradual
            if g.horizon < 1:
                raise ConfigurationError("gradual horizon must be >= 1")
            if len(g.means) != self.k or len(g.sigmas) != self.k:
                raise ConfigurationError("gradual spec needs one mean and one sigma function per arm")

    @property
    def horizon(self) -> int:
        if self.segments is not None:
            return sum(seg.duration for seg in self.segments)
        return self.gradual.horizon

    def models_at(self, t: int) -> Tuple[RewardModel, ...]:
        """
        Active arm models at timestep ``t``.

        Raises:
            IndexError: If t lies outside [0, horizon)
        """
        if not 0 <= t < self.horizon:
            raise IndexError(f"timestep {t} outside horizon [0, {self.horizon})")
        if self.segments is not None:
            index = int(np.searchsorted(self._starts, t, side="right")) - 1
            return self.segments[index].arm_models
        g = self.gradual
        return tuple(
            RewardModel.gaussian(mean.value(t, g.horizon), max(sigma.value(t, g.horizon), 0.0))
            for mean, sigma in zip(g.means, g.sigmas)
        )

    def means_at(self, t: int) -> np.ndarray:
        return np.array([m.mean() for m in self.models_at(t)])

    def optimal_arm(self, t: int) -> int:
        """Arm with the highest expected reward at ``t`` (lowest index on ties)."""
        return int(np.argmax(self.means_at(t)))

    def change_log(self) -> EnvChangeLog:
        """
        Change points of the schedule.

        Piecewise schedules report segment starts where the models actually
        differ from the previous segment; gradual schedules report the steps
        where the optimal arm switches.
        """
        points: List[int] = []
        if self.segments is not None:
            for start, prev, seg in zip(self._starts[1:], self.segments, self.segments[1:]):
                if seg.arm_models != prev.arm_models:
                    points.append(start)
        else:
            previous = self.optimal_arm(0)
            for t in range(1, self.horizon):
                current = self.optimal_arm(t)
                if current != previous:
                    points.append(t)
                previous = current
        return EnvChangeLog(tuple(points), self.horizon)

    def to_dict(self) -> Dict[str, Any]:
        """Serialisable form accepted by ``schedule_from_dict``."""
        data: Dict[str, Any] = {
            "schema_version": 1,
            "name": self.name,
            "reconstructed": self.reconstructed,
            "k": self.k,
        }
        if self.segments is not None:
            data["segments"] = [
                {"duration": seg.duration, "arms": [m.to_dict() for m in seg.arm_models]}
                for seg in self.segments
            ]
        else:
            data["gradual"] = {
                "horizon": self.gradual.horizon,
                "means": [s.to_dict() for s in self.gradual.means],
                "sigmas": [s.to_dict() for s in self.gradual.sigmas],
            }
        return data


@dataclass(frozen=True)
class DistributionPair:
    """Optimal and sub-optimal arm distributions of one environment period."""
    name: str
    optimal: RewardModel
    suboptimal: RewardModel
    odpu_target: Optional[float] = None

    def oriented(self, optimal_arm: int) -> Tuple[RewardModel, RewardModel]:
        """Arm models with the optimal distribution on ``optimal_arm`` (0 or 1)."""
        if optimal_arm == 0:
            return (self.optimal, self.suboptimal)
        return (self.suboptimal, self.optimal)


def make_reversal_schedule(mu1: float, sigma1: float, mu2: float, sigma2: float,
                           T: int, name: str = "reversal") -> EnvironmentSchedule:
    """
    Two Gaussian arms whose distributions swap at T/2.

    Raises:
        ConfigurationError: If T is odd
    """
    if T < 2 or T % 2:
        raise ConfigurationError(f"reversal horizon must be even, got {T}")
    a = RewardModel.gaussian(mu1, sigma1)
    b = RewardModel.gaussian(mu2, sigma2)
    return EnvironmentSchedule(
        k=2,
        segments=(Segment(T // 2, (a, b)), Segment(T // 2, (b, a))),
        name=name,
    )


def make_binary_reversal_schedule(mu1: float, mu2: float, T: int,
                                  name: str = "binary_reversal") -> EnvironmentSchedule:
    """Bernoulli arms with success probabilities mu1/mu2 swapping at T/2."""
    if T < 2 or T % 2:
        raise ConfigurationError(f"reversal horizon must be even, got {T}")
    a = RewardModel.bernoulli(mu1)
    b = RewardModel.bernoulli(mu2)
    return EnvironmentSchedule(
        k=2,
        segments=(Segment(T // 2, (a, b)), Segment(T // 2, (b, a))),
        name=name,
    )


def _split_horizon(T: int, parts: int) -> List[int]:
    base, extra = divmod(T, parts)
    return [base + 1 if i < extra else base for i in range(parts)]


def make_random_volatile(dist_pool: Sequence[Sequence[RewardModel]], T: int,
                         rng: np.random.Generator, min_changes: int = 10,
                         max_changes: int = 30, name: str = "random_volatile",
                         reconstructed: bool = False) -> EnvironmentSchedule:
    """
    Random volatile environment.

    The change count n is drawn uniformly from {min_changes..max_changes};
    the horizon is split into n + 1 near-equal segments, each with arm models
    drawn uniformly from ``dist_pool``.

    Raises:
        ConfigurationError: If the pool is empty or T < n + 1
    """
    if not dist_pool:
        raise ConfigurationError("distribution pool is empty")
    if min_changes < 0 or max_changes < min_changes:
        raise ConfigurationError("invalid change count range")
    n = int(rng.integers(min_changes, max_changes + 1))
    if T < n + 1:
        raise ConfigurationError(f"horizon {T} too short for {n} environment changes")

    k = len(dist_pool[0])
    segments = []
    for duration in _split_horizon(T, n + 1):
        models = tuple(dist_pool[int(rng.integers(len(dist_pool)))])
        segments.append(Segment(duration, models))
    logger.debug(f"Random volatile schedule with {n} changes over {T} steps")
    return EnvironmentSchedule(k=k, segments=tuple(segments), name=name, reconstructed=reconstructed)


def make_alternating_schedule(pairs: Sequence[DistributionPair], changes: int, T: int,
                              name: str, reconstructed: bool = False) -> EnvironmentSchedule:
    """
    ``changes`` + 1 near-equal periods cycling through ``pairs``; the optimal
    arm alternates between arm 0 and arm 1 so every boundary is a change.
    """
    if not pairs:
        raise ConfigurationError("distribution pool is empty")
    if T < changes + 1:
        raise ConfigurationError(f"horizon {T} too short for {changes} environment changes")
    segments = []
    for i, duration in enumerate(_split_horizon(T, changes + 1)):
        pair = pairs[i % len(pairs)]
        segments.append(Segment(duration, pair.oriented(i % 2)))
    return EnvironmentSchedule(k=2, segments=tuple(segments), name=name, reconstructed=reconstructed)


def make_gradual_schedule(T: int = 400, means: Optional[Sequence[Sinusoid]] = None,
                          sigmas: Optional[Sequence[Sinusoid]] = None,
                          name: str = "gradual") -> EnvironmentSchedule:
    """
    Two Gaussian arms following sinusoids.

    Defaults: mu_1 = 0.7 + 0.3 sin, mu_2 = 0.7 - 0.3 sin, sigma_1 = 0.05,
    sigma_2 = 0.275 + 0.225 sin, all with period T.
    """
    reconstructed = means is None or sigmas is None
    if means is None:
        means = (Sinusoid(0.7, 0.3), Sinusoid(0.7, -0.3))
    if sigmas is None:
        sigmas = (Sinusoid(0.05), Sinusoid(0.275, 0.225))
    return EnvironmentSchedule(
        k=len(means),
        gradual=GradualSpec(T, tuple(means), tuple(sigmas)),
        name=name,
        reconstructed=reconstructed,
    )


# Period lengths and (optimal mu, sigma), (sub-optimal mu, sigma) per period,
# with the optimal arm index.  Reconstructed: only the 220-step total and the
# six-period layout are known.
TRAINING_PERIODS = (
    (40, 0, (0.9, 0.05), (0.4, 0.05)),
    (30, 1, (0.9, 0.05), (0.4, 0.4)),
    (40, 0, (0.9, 0.05), (0.5, 0.1)),
    (30, 1, (0.9, 0.05), (0.5, 0.6)),
    (40, 0, (0.9, 0.05), (0.6, 0.3)),
    (40, 1, (0.8, 0.05), (0.3, 0.05)),
)


def make_training_schedule(periods=TRAINING_PERIODS) -> EnvironmentSchedule:
    """The 220-step composite environment used to train controllers."""
    segments = []
    for duration, optimal_arm, (mu_o, s_o), (mu_s, s_s) in periods:
        pair = DistributionPair("training", RewardModel.gaussian(mu_o, s_o),
                                RewardModel.gaussian(mu_s, s_s))
        segments.append(Segment(int(duration), pair.oriented(optimal_arm)))
    return EnvironmentSchedule(k=2, segments=tuple(segments), name="training", reconstructed=True)


EXPERIMENT1_TARGETS = (0.97, 0.59, 0.14, 0.10)
EXPERIMENT1_SPLIT = (50, 50)


@lru_cache(maxsize=None)
def solve_suboptimal_sigma(target: float, mu_opt: float = 1.0, sigma_opt: float = 0.05,
                           mu_sub: float = 0.4, split: Tuple[int, int] = EXPERIMENT1_SPLIT,
                           upper: float = 50.0) -> float:
    """
    Standard deviation of the sub-optimal arm at which the ODPU of the
    population split equals ``target``.

    Raises:
        ConfigurationError: If the target cannot be bracketed
    """
    m, n = split

    def residual(sigma_sub: float) -> float:
        spec = GroupSpec.from_arrays((mu_opt, mu_sub), (sigma_opt, sigma_sub), (m, n))
        return odpu_quadrature(spec) - target

    lo = sigma_opt
    if residual(lo) >= 0 or residual(upper) <= 0:
        raise ConfigurationError(f"ODPU target {target} cannot be reached for sigma in [{lo}, {upper}]")
    return float(optimize.brentq(residual, lo, upper, xtol=1e-6))


def reconstruct_distribution_pool(targets: Sequence[float] = EXPERIMENT1_TARGETS,
                                  mu_opt: float = 1.0, sigma_opt: float = 0.05,
                                  mu_sub: float = 0.4,
                                  split: Tuple[int, int] = EXPERIMENT1_SPLIT) -> List[DistributionPair]:
    """
    Six Experiment-1 distributions: one per ODPU target (sub-optimal sigma
    solved numerically) plus two low-uncertainty pairs with ODPU ~ 0.
    """
    pool = []
    for i, target in enumerate(targets):
        sigma_sub = solve_suboptimal_sigma(target, mu_opt, sigma_opt, mu_sub, split)
        logger.debug(f"ODPU target {target}: sub-optimal sigma {sigma_sub:.4f}")
        pool.append(DistributionPair(
            f"D{i + 1}",
            RewardModel.gaussian(mu_opt, sigma_opt),
            RewardModel.gaussian(mu_sub, sigma_sub),
            target,
        ))
    offset = len(pool)
    pool.append(DistributionPair(f"D{offset + 1}", RewardModel.gaussian(mu_opt, sigma_opt),
                                 RewardModel.gaussian(mu_sub, sigma_opt), 0.0))
    pool.append(DistributionPair(f"D{offset + 2}", RewardModel.gaussian(0.8, sigma_opt),
                                 RewardModel.gaussian(0.2, 0.1), 0.0))
    return pool


def split_pool_by_uncertainty(pool: Sequence[DistributionPair], th_u: float = 0.1
                              ) -> Tuple[List[DistributionPair], List[DistributionPair]]:
    """(low, high) partitions of a pool by ODPU target; ``th_u`` itself counts as low."""
    low = [p for p in pool if (p.odpu_target or 0.0) <= th_u]
    high = [p for p in pool if (p.odpu_target or 0.0) > th_u]
    return low, high


def make_experiment1_schedules(T: int = 400, stable_changes: int = 2, volatile_changes: int = 5,
                               pool: Optional[Sequence[DistributionPair]] = None
                               ) -> Dict[str, EnvironmentSchedule]:
    """The four stable/volatile x low/high uncertainty environments."""
    pool = list(pool) if pool is not None else reconstruct_distribution_pool()
    low, high = split_pool_by_uncertainty(pool)
    # Lowest-ODPU pairs first in the low pool so a stable run sees the clearest arms
    low.sort(key=lambda p: p.odpu_target or 0.0)
    return {
        "stable_low": make_alternating_schedule(low, stable_changes, T, "stable_low", True),
        "stable_high": make_alternating_schedule(high, stable_changes, T, "stable_high", True),
        "volatile_low": make_alternating_schedule(low, volatile_changes, T, "volatile_low", True),
        "volatile_high": make_alternating_schedule(high, volatile_changes, T, "volatile_high", True),
    }


def oriented_pool(pool: Sequence[DistributionPair]) -> List[Tuple[RewardModel, RewardModel]]:
    """Every pair in both orientations (the Experiment-2 sampling pool)."""
    return [pair.oriented(arm) for pair in pool for arm in (0, 1)]


def _segments_from_dict(data: Dict[str, Any], k: int) -> Tuple[Segment, ...]:
    segments = []
    for entry in data:
        try:
            arms = tuple(RewardModel.from_dict(a) for a in entry["arms"])
            segments.append(Segment(int(entry["duration"]), arms))
        except (KeyError, TypeError) as e:
            raise ConfigurationError(f"Invalid segment definition: {entry!r}") from e
    return tuple(segments)


def schedule_from_dict(data: Dict[str, Any], rng: Optional[np.random.Generator] = None
                       ) -> EnvironmentSchedule:
    """
    Build a schedule from its configuration mapping.

    Supported layouts: ``segments``, ``gradual``, ``builder`` (named builders
    such as ``experiment1``) and ``random_volatile`` (needs ``rng``).

    Raises:
        ConfigurationError: If the mapping is not a valid schedule
    """
    name = data.get("name", "")
    reconstructed = bool(data.get("reconstructed", False))
    k = int(data.get("k", 2))

    if "segments" in data:
        return EnvironmentSchedule(k=k, segments=_segments_from_dict(data["segments"], k),
                                   name=name, reconstructed=reconstructed)

    if "gradual" in data:
        g = data["gradual"]
        means = tuple(Sinusoid.from_dict(s) for s in g.get("means", []))
        sigmas = tuple(Sinusoid.from_dict(s) for s in g.get("sigmas", []))
        schedule = EnvironmentSchedule(k=k, gradual=GradualSpec(int(g.get("horizon", 400)), means, sigmas),
                                       name=name, reconstructed=reconstructed)
        return schedule

    if "builder" in data:
        builder = data["builder"]
        T = int(data.get("horizon", 400))
        if builder == "experiment1":
            variant = data.get("variant", "stable_low")
            schedules = make_experiment1_schedules(T)
            if variant not in schedules:
                raise ConfigurationError(f"Unknown Experiment-1 variant: {variant!r}")
            return schedules[variant]
        if builder == "training":
            return make_training_schedule()
        if builder == "binary_reversal":
            return make_binary_reversal_schedule(data["mu1"], data["mu2"], T, name or builder)
        raise ConfigurationError(f"Unknown schedule builder: {builder!r}")

    if "random_volatile" in data:
        spec = data["random_volatile"]
        if rng is None:
            raise ConfigurationError("random volatile schedules need a random generator")
        pool = oriented_pool(reconstruct_distribution_pool())
        return make_random_volatile(pool, int(spec.get("horizon", 1000)), rng,
                                    int(spec.get("min_changes", 10)), int(spec.get("max_changes", 30)),
                                    name=name or "random_volatile", reconstructed=True)

    raise ConfigurationError("schedule needs one of: segments, gradual, builder, random_volatile")


def load_schedule(path: str, rng: Optional[np.random.Generator] = None) -> EnvironmentSchedule:
    """Load a schedule YAML file (absolute, relative, or under config/environments)."""
    try:
        data = load_yaml(path)
    except ConfigurationError:
        if "/" in path or path.endswith(".yaml"):
            raise
        data = load_yaml(f"environments/{path}.yaml")
    return schedule_from_dict(data, rng)
