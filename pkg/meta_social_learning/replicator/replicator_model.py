"""
Replicator-mutator model of individual and social learners

State I = (A1, A2, SL): individual learners that currently prefer arm 1 or
arm 2, and social learners.  With fitness vector F and a row-stochastic
mutation matrix M,

    dX_j/dt = sum_i F_i I_i M_ij - X_j * psi,     psi = F . I

Individual learners earn (1 - eps) r(A_i, t) + eps r(A_j, t).  Social
learners either copy the action that was optimal tau time units ago
(success-based) or the majority action h(., t - tau) of the population
(conformist), where h(a_i, t) = A_i(t) + SL(t) * H_SL(a_i, t).

Payoffs are the arm means of an EnvironmentSchedule, so the model is a
deterministic mean-field description for two arms.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from ..environment.reward_schedule import EnvironmentSchedule
from ..utils.errors import ConfigurationError, NumericError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

SUCCESS = "success"
CONFORMIST = "conformist"
SLS_KINDS = (SUCCESS, CONFORMIST)

DEFAULT_MUTATION = (
    (0.995, 0.0, 0.005),
    (0.0, 0.995, 0.005),
    (0.0025, 0.0025, 0.995),
)

SIMPLEX_TOL = 1e-9
NEGATIVE_TOL = -1e-9
MAX_HALVINGS = 12

Payoff = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class MutationMatrix:
    """Row-stochastic 3x3 matrix; row i gives the offspring type distribution of type i."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (3, 3):
            raise ConfigurationError(f"mutation matrix must be 3x3, got {matrix.shape}")
        if np.any(matrix < 0):
            raise ConfigurationError("mutation matrix entries must be non-negative")
        if not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-9):
            raise ConfigurationError("mutation matrix rows must sum to 1")
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def default(cls) -> "MutationMatrix":
        return cls(np.array(DEFAULT_MUTATION))

    @classmethod
    def identity(cls) -> "MutationMatrix":
        return cls(np.eye(3))

    @classmethod
    def from_rate(cls, mr: float) -> "MutationMatrix":
        """IL types mutate to SL at rate mr; SL splits mr evenly over the IL types."""
        return cls(np.array([
            [1.0 - mr, 0.0, mr],
            [0.0, 1.0 - mr, mr],
            [mr / 2, mr / 2, 1.0 - mr],
        ]))


def payoff_from_schedule(schedule: EnvironmentSchedule) -> Payoff:
    """Arm means at continuous time t (step floor(t), clamped to the horizon)."""
    if schedule.k != 2:
        raise ConfigurationError("the replicator model is defined for two arms")
    last = schedule.horizon - 1
    cache: Dict[int, np.ndarray] = {}

    def payoff(t: float) -> np.ndarray:
        step = min(max(int(np.floor(t)), 0), last)
        if step not in cache:
            cache[step] = schedule.means_at(step)
        return cache[step]

    return payoff


def constant_payoff(r1: float, r2: float) -> Payoff:
    values = np.array([r1, r2], dtype=float)
    return lambda t: values


@dataclass
class ReplicatorConfig:
    """
    Attributes:
        sls: ``success`` or ``conformist``
        epsilon: Exploration rate of individual learners
        tau: Social learning delay
        payoff: r(., t) for both arms
        mutation: Mutation matrix
        initial: Initial (A1, A2, SL)
    """
    sls: str
    payoff: Payoff
    epsilon: float = 0.1
    tau: float = 1.0
    mutation: MutationMatrix = field(default_factory=MutationMatrix.default)
    initial: Tuple[float, float, float] = (0.25, 0.25, 0.5)

    def __post_init__(self):
        if self.sls not in SLS_KINDS:
            raise ConfigurationError(f"sls must be one of {SLS_KINDS}, got {self.sls!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigurationError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.tau < 0:
            raise ConfigurationError(f"tau must be >= 0, got {self.tau}")
        check_simplex(self.initial)


def check_simplex(x: Sequence[float], tol: float = 1e-6) -> None:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,) or np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ConfigurationError(f"state must be a point on the 3-simplex, got {tuple(x)}")


class HistoryGrid:
    """h(a_i, t) sampled at increasing times, read back by linear interpolation."""

    def __init__(self, capacity: int = 1024):
        self._times = np.empty(capacity)
        self._values = np.empty((capacity, 2))
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def append(self, t: float, h: np.ndarray) -> None:
        n = self._size
        if n and t <= self._times[n - 1]:
            self._values[n - 1] = h
            return
        if n == self._times.size:
            self._times = np.concatenate([self._times, np.empty(n)])
            self._values = np.concatenate([self._values, np.empty((n, 2))])
        self._times[n] = t
        self._values[n] = h
        self._size = n + 1

    def lookup(self, t: float) -> np.ndarray:
        if not self._size:
            raise NumericError("empty history")
        times = self._times[: self._size]
        values = self._values[: self._size]
        return np.array([np.interp(t, times, values[:, 0]), np.interp(t, times, values[:, 1])])


@dataclass
class ReplicatorState:
    """Frequencies at time t plus the history used for delayed lookups."""
    a1: float
    a2: float
    sl: float
    t: float
    history: HistoryGrid = field(default_factory=HistoryGrid)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.sl])


def social_indicator(x: np.ndarray, t: float, config: ReplicatorConfig,
                     history: Optional[HistoryGrid]) -> np.ndarray:
    """H_SL(., t): the action social learners take at t (zeros when none)."""
    H = np.zeros(2)
    if config.sls == SUCCESS:
        source = max(t - config.tau, 0.0)
        H[int(np.argmax(config.payoff(source)))] = 1.0
        return H
    if t <= config.tau or history is None:
        return H
    h_past = history.lookup(t - config.tau)
    H[int(np.argmax(h_past))] = 1.0
    return H


def action_frequencies(x: np.ndarray, H: np.ndarray) -> np.ndarray:
    """h(a_i, t) = A_i + SL * H_SL(a_i)."""
    return x[:2] + x[2] * H


def fitness_vector(x: np.ndarray, config: ReplicatorConfig, t: float,
                   history: Optional[HistoryGrid] = None) -> np.ndarray:
    """
    (f_A1, f_A2, f_SL) at time t.

    Args:
        x: (A1, A2, SL)
        config: Model configuration
        t: Time
        history: Action-frequency history (conformist lookups)
    """
    r = np.asarray(config.payoff(t), dtype=float)
    eps = config.epsilon
    f_a1 = (1.0 - eps) * r[0] + eps * r[1]
    f_a2 = (1.0 - eps) * r[1] + eps * r[0]
    H = social_indicator(x, t, config, history)
    f_sl = float(H @ r)
    return np.array([f_a1, f_a2, f_sl])


def replicator_rhs(x: np.ndarray, config: ReplicatorConfig, t: float,
                   history: Optional[HistoryGrid] = None) -> np.ndarray:
    """Time derivative of (A1, A2, SL)."""
    F = fitness_vector(x, config, t, history)
    return mutator_derivative(x, F, config.mutation.matrix)


def mutator_derivative(x: np.ndarray, F: np.ndarray, M: np.ndarray) -> np.ndarray:
    """dX_j = F . (I o col_j(M)) - X_j psi."""
    x = np.asarray(x, dtype=float)
    psi = float(F @ x)
    return (F * x) @ M - x * psi


@dataclass
class Trajectory:
    """Integrated trajectory on the output grid."""
    t: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    sl: np.ndarray
    psi: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    sls: str = ""

    @property
    def final(self) -> np.ndarray:
        return np.array([self.a1[-1], self.a2[-1], self.sl[-1]])

    def max_simplex_drift(self) -> float:
        return float(np.max(np.abs(self.a1 + self.a2 + self.sl - 1.0)))

    def state_at(self, index: int) -> ReplicatorState:
        return ReplicatorState(float(self.a1[index]), float(self.a2[index]), float(self.sl[index]),
                               float(self.t[index]))


def _rk4(x: np.ndarray, t: float, dt: float, config: ReplicatorConfig, history: HistoryGrid) -> np.ndarray:
    k1 = replicator_rhs(x, config, t, history)
    k2 = replicator_rhs(x + 0.5 * dt * k1, config, t + 0.5 * dt, history)
    k3 = replicator_rhs(x + 0.5 * dt * k2, config, t + 0.5 * dt, history)
    k4 = replicator_rhs(x + dt * k3, config, t + dt, history)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(x: np.ndarray, t: float, dt: float, config: ReplicatorConfig,
             history: HistoryGrid, depth: int = 0) -> np.ndarray:
    """One step of length dt, split into halves while a component goes negative."""
    x_new = _rk4(x, t, dt, config, history)
    if not np.all(np.isfinite(x_new)):
        raise NumericError(f"non-finite replicator state at t={t:.4f}: {x_new}")
    if np.any(x_new < NEGATIVE_TOL):
        if depth >= MAX_HALVINGS:
            raise NumericError(f"step size underflow at t={t:.4f}; state {x_new}")
        half = dt / 2.0
        x_mid = _advance(x, t, half, config, history, depth + 1)
        _record(history, x_mid, t + half, config)
        return _advance(x_mid, t + half, half, config, history, depth + 1)

    x_new = np.maximum(x_new, 0.0)
    total = x_new.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        x_new = x_new / total
    return x_new


def _record(history: HistoryGrid, x: np.ndarray, t: float, config: ReplicatorConfig) -> np.ndarray:
    h = action_frequencies(x, social_indicator(x, t, config, history))
    history.append(t, h)
    return h


def integrate(config: ReplicatorConfig, horizon: float, dt: float = 0.1) -> Trajectory:
    """
    Fixed-step RK4 integration of the replicator-mutator system.

    Args:
        config: Model configuration
        horizon: End time
        dt: Step size (also the resolution of the delay history)

    Returns:
        Trajectory sampled every dt

    Raises:
        ConfigurationError: If dt or horizon is not positive
        NumericError: If the state becomes non-finite
    """
    if dt <= 0 or horizon <= 0:
        raise ConfigurationError("dt and horizon must be positive")

    steps = int(round(horizon / dt))
    x = np.asarray(config.initial, dtype=float)
    history = HistoryGrid()

    rows = np.zeros((steps + 1, 7))
    t = 0.0
    for n in range(steps + 1):
        t = n * dt
        if n > 0:
            x = _advance(x, (n - 1) * dt, dt, config, history)
        h = _record(history, x, t, config)
        F = fitness_vector(x, config, t, history)
        rows[n] = (t, x[0], x[1], x[2], float(F @ x), h[0], h[1])

    logger.debug(f"Integrated {config.sls} model over {horizon} time units ({steps} steps)")
    return Trajectory(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4], rows[:, 5], rows[:, 6],
                      sls=config.sls)


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Trajectory as a table with columns t, a1, a2, sl, psi, h1, h2."""
    return pd.DataFrame({
        "t": trajectory.t,
        "a1": trajectory.a1,
        "a2": trajectory.a2,
        "sl": trajectory.sl,
        "psi": trajectory.psi,
        "h1": trajectory.h1,
        "h2": trajectory.h2,
    })


def find_stationary_point(config: ReplicatorConfig, t: float = 0.0,
                          guess: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Fixed point of the system with the payoffs frozen at time t.

    Social learners are assumed to have settled on their steady action: the
    optimal arm at t - tau (success-based) or the arm preferred by most
    individual learners (conformist).

    Raises:
        NumericError: If the root finder does not converge
    """
    guess = np.asarray(guess if guess is not None else config.initial, dtype=float)
    M = config.mutation.matrix
    r = np.asarray(config.payoff(t), dtype=float)
    eps = config.epsilon

    def fitness(x: np.ndarray) -> np.ndarray:
        H = np.zeros(2)
        if config.sls == SUCCESS:
            H[int(np.argmax(config.payoff(max(t - config.tau, 0.0))))] = 1.0
        else:
            H[int(np.argmax(x[:2]))] = 1.0
        return np.array([(1 - eps) * r[0] + eps * r[1], (1 - eps) * r[1] + eps * r[0], float(H @ r)])

    def reduced(y: np.ndarray) -> np.ndarray:
        x = np.array([y[0], y[1], 1.0 - y[0] - y[1]])
        return mutator_derivative(x, fitness(x), M)[:2]

    solution, info, status, message = optimize.fsolve(reduced, guess[:2], full_output=True, xtol=1e-12)
    x = np.array([solution[0], solution[1], 1.0 - solution.sum()])
    if status != 1 or np.max(np.abs(info["fvec"])) > 1e-9 or np.any(x < -1e-9):
        raise NumericError(f"stationary point search failed: {message}")
    return np.maximum(x, 0.0)


def sl_ratio_grid(ratios: Sequence[float]) -> List[Tuple[float, float, float]]:
    """Initial points with the given SL share and individual learners split evenly."""
    points = []
    for ratio in ratios:
        if not 0.0 <= ratio <= 1.0:
            raise ConfigurationError(f"SL ratio must be in [0, 1], got {ratio}")
        il = (1.0 - ratio) / 2.0
        points.append((il, il, float(ratio)))
    return points


def basin_sweep(config: ReplicatorConfig, initial_grid: Sequence[Sequence[float]],
                horizon: float, dt: float = 0.1) -> Tuple[List[Trajectory], pd.DataFrame]:
    """
    One trajectory per initial point.

    Returns:
        (trajectories, summary) where the summary has one row per start with
        the initial and terminal frequencies
    """
    trajectories = []
    rows = []
    for start in initial_grid:
        check_simplex(start)
        run_config = ReplicatorConfig(config.sls, config.payoff, config.epsilon, config.tau,
                                      config.mutation, tuple(float(v) for v in start))
        traj = integrate(run_config, horizon, dt)
        trajectories.append(traj)
        rows.append({
            "start_a1": start[0], "start_a2": start[1], "start_sl": start[2],
            "final_a1": traj.a1[-1], "final_a2": traj.a2[-1], "final_sl": traj.sl[-1],
        })
    logger.info(f"Basin sweep over {len(rows)} initial points ({config.sls})")
    return trajectories, pd.DataFrame(rows)


def config_from_settings(settings: Dict, sls: str, payoff: Payoff, tau: Optional[float] = None,
                         epsilon: Optional[float] = None) -> ReplicatorConfig:
    """ReplicatorConfig from the merged configuration mapping."""
    section = settings.get("replicator", {})
    learning = settings.get("learning", {})
    mutation = section.get("mutation")
    return ReplicatorConfig(
        sls=sls,
        payoff=payoff,
        epsilon=float(epsilon if epsilon is not None else learning.get("epsilon", 0.1)),
        tau=float(tau if tau is not None else learning.get("tau", 1)),
        mutation=MutationMatrix(np.array(mutation)) if mutation else MutationMatrix.default(),
        initial=tuple(section.get("initial", (0.25, 0.25, 0.5))),
    )
