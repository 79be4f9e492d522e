"""
Agent-based evolutionary simulation

Three run types share one vectorised population:

    run_alg1         individual learners against one social learning strategy,
                     with fitness-proportionate selection and type mutation
    run_lifetime     a homogeneous population of one meta-strategy without
                     selection (performance comparisons, controller fitness)
    run_competition  all meta-strategies competing under selection, mutation
                     and age tracking

Every agent acts simultaneously against the frozen social history of the
previous steps, receives a reward that is also its fitness, and updates its
Q-values whatever strategy it used.
"""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..context.context_encoding import ContextEncoder
from ..environment.reward_schedule import EnvironmentSchedule, sample_rewards
from ..learning.learners import (
    QTable,
    SocialHistory,
    SocialInfo,
    conformist_copy_population,
    epsilon_greedy_population,
    model_copy_population,
    q_update_population,
    random_individual_copy_population,
    success_based_copy_population,
)
from ..strategies.meta_strategies import (
    ALL_META_KINDS,
    ControllerState,
    MetaController,
    MetaKind,
    MetaSettings,
    StepContext,
    StrategyKind,
    create_controller,
    dispatch_strategies,
    update_controllers,
)
from ..utils.errors import ConfigurationError, NotYetObservable
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

IL_TYPE = 0
SL_TYPE = 1

# Copying from an external model or a random individual; counted as social
EXTERNAL = 3

ALG1_SLS = ("success", "conformist", "perfect", "correct90", "random_model", "random_individual")
_MODEL_KINDS = {"perfect": "perfect", "correct90": "correct90", "random_model": "random"}

ALG1 = "alg1"
COMPETITION = "competition"


@dataclass(frozen=True)
class EvoParams:
    """
    Parameters of an agent-based run.

    Attributes:
        mr: Mutation rate
        s: Selection strength
        epsilon: Exploration rate of individual learning
        beta: Q-update step size
        tau: Social learning latency (>= 1)
        m: Population size
        fitness_floor: Lower bound applied to fitness before selection
        reset_q_on_mutation: Clear Q-values of agents whose meta-kind mutates
        initial_sl_ratio: Share of social learners at the start of run_alg1
        delta: Lag of the environment change detector
        ewma: Exponentially weighted mean estimates in the context encoder
        ewma_alpha: Weight of the newest estimate
    """
    mr: float = 0.005
    s: float = 1.0
    epsilon: float = 0.1
    beta: float = 0.2
    tau: int = 1
    m: int = 100
    fitness_floor: float = 1e-6
    reset_q_on_mutation: bool = False
    initial_sl_ratio: float = 0.5
    delta: int = 1
    ewma: bool = False
    ewma_alpha: float = 0.3

    def __post_init__(self):
        if not (0.0 <= self.mr <= 1.0):
            raise ConfigurationError(f"mr must be in [0, 1], got {self.mr}")
        if self.s < 0:
            raise ConfigurationError(f"s must be >= 0, got {self.s}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigurationError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.tau < 1:
            raise ConfigurationError(f"tau must be >= 1, got {self.tau}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if self.fitness_floor <= 0:
            raise ConfigurationError("fitness_floor must be positive")

    @classmethod
    def from_config(cls, config: Dict, competition: bool = False, **overrides) -> "EvoParams":
        learning = config.get("learning", {})
        context = config.get("context", {})
        evolution = config.get("evolution", {})
        values = dict(
            mr=float(evolution.get("mr", 0.005)),
            s=float(evolution.get("s", 1.0)),
            epsilon=float(learning.get("epsilon", 0.1)),
            beta=float(learning.get("beta", 0.2)),
            tau=int(learning.get("tau", 1)),
            m=int(evolution.get("competition_m" if competition else "m", 5000 if competition else 100)),
            fitness_floor=float(evolution.get("fitness_floor", 1e-6)),
            reset_q_on_mutation=bool(evolution.get("reset_q_on_mutation", False)),
            initial_sl_ratio=float(evolution.get("initial_sl_ratio", 0.5)),
            delta=int(context.get("delta", 1)),
            ewma=bool(context.get("ewma", False)),
            ewma_alpha=float(context.get("ewma_alpha", 0.3)),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def replace(self, **changes) -> "EvoParams":
        return dataclasses.replace(self, **changes)


@dataclass
class Agent:
    """Snapshot of one agent of a Population."""
    id: int
    learner: QTable
    kind: str
    age: int
    last_action: int
    last_reward: float


@dataclass
class StepRecord:
    """Summary of one simulated timestep."""
    t: int
    psi: float
    il_steps: int
    strategy_counts: np.ndarray
    optimal_share: float
    freq: np.ndarray


class Population:
    """
    Agents of one run, stored column-wise.

    ``kinds`` holds IL_TYPE/SL_TYPE for IL/SL runs and MetaKind codes
    for meta-strategy runs.
    """

    def __init__(self, kinds: np.ndarray, k: int, params: EvoParams, mode: str = ALG1):
        m = kinds.size
        self.mode = mode
        self.params = params
        self.k = k
        self.kinds = kinds.astype(int)
        self.q = np.zeros((m, k))
        self.age = np.zeros(m, dtype=int)
        self.last_action = np.full(m, -1, dtype=int)
        self.last_reward = np.full(m, np.nan)
        self.fitness = np.zeros(m)
        self.generation = 0
        self.history = SocialHistory(capacity=params.tau + params.delta + 2)
        self.controllers = ControllerState(m)
        self.last_step: Optional[StepRecord] = None

    @property
    def m(self) -> int:
        return self.kinds.size

    def kind_label(self, code: int) -> str:
        if self.mode == ALG1:
            return "SL" if code == SL_TYPE else "IL"
        return ALL_META_KINDS[code].value

    def agent(self, i: int) -> Agent:
        return Agent(i, QTable(self.q[i].copy(), self.params.beta), self.kind_label(int(self.kinds[i])),
                     int(self.age[i]), int(self.last_action[i]), float(self.last_reward[i]))

    def reproduce(self, selected: np.ndarray) -> None:
        """Replace the population by clones of the selected agents."""
        self.age = age_update(selected, self.age)
        self.kinds = self.kinds[selected]
        self.q = self.q[selected]
        self.last_action = self.last_action[selected]
        self.last_reward = self.last_reward[selected]
        self.fitness = self.fitness[selected]
        self.controllers = self.controllers.take(selected)


def roulette_select(F: np.ndarray, s: float, rng: np.random.Generator,
                    floor: float = 1e-6) -> np.ndarray:
    """
    m indices drawn with replacement, each with probability f_i^s / sum f_j^s.

    Fitness is floored at ``floor``; a degenerate weight vector selects
    uniformly.
    """
    F = np.maximum(np.asarray(F, dtype=float), floor)
    weights = F ** s
    total = weights.sum()
    m = F.size
    if not np.isfinite(total) or total <= 0:
        return rng.integers(m, size=m)
    return rng.choice(m, size=m, p=weights / total)


def age_update(selected: np.ndarray, ages: np.ndarray) -> np.ndarray:
    """Ages of the offspring: the first copy of each parent gets age + 1, others 0."""
    new_ages = np.zeros(selected.size, dtype=int)
    _, first = np.unique(selected, return_index=True)
    new_ages[first] = ages[selected[first]] + 1
    return new_ages


def mutate(kinds: np.ndarray, mr: float, mode: str, rng: np.random.Generator,
           choices: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mutate agent types.

    Args:
        kinds: Type code per agent
        mr: Per-agent mutation probability
        mode: ``alg1`` flips IL <-> SL; ``competition`` resamples uniformly
            from ``choices``
        choices: Meta-kind codes available in competition mode

    Returns:
        (new kinds, mutated mask)
    """
    mutated = rng.random(kinds.size) < mr
    new_kinds = kinds.copy()
    if not mutated.any():
        return new_kinds, mutated
    if mode == ALG1:
        new_kinds[mutated] = 1 - kinds[mutated]
    elif mode == COMPETITION:
        if choices is None:
            choices = np.arange(len(ALL_META_KINDS))
        new_kinds[mutated] = rng.choice(np.asarray(choices), size=int(mutated.sum()))
    else:
        raise ConfigurationError(f"Unknown mutation mode: {mode!r}")
    return new_kinds, mutated


def _external_actions(sls: str, n: int, hist: SocialHistory, env: EnvironmentSchedule,
                      t: int, tau: int, rng: np.random.Generator) -> np.ndarray:
    if sls in _MODEL_KINDS:
        return model_copy_population(_MODEL_KINDS[sls], env.optimal_arm(t - 1), n, rng, env.k)
    if sls == "random_individual":
        return random_individual_copy_population(hist, t, tau, n, rng)
    raise ConfigurationError(f"Unknown social learning strategy: {sls!r}")


def act(pop: Population, strategies: np.ndarray, env: EnvironmentSchedule, t: int,
        rng: np.random.Generator, sls: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Execute one timestep.

    Social strategies fall back to individual learning while the record of
    t - tau is not observable.

    Returns:
        (actions, rewards, executed strategy codes)
    """
    params = pop.params
    hist, tau = pop.history, params.tau
    actions = epsilon_greedy_population(pop.q, params.epsilon, rng)
    executed = strategies.copy()

    copy_rules: Dict[int, Callable[[int], np.ndarray]] = {
        StrategyKind.SUCCESS: lambda n: success_based_copy_population(hist, t, tau, n),
        StrategyKind.CONFORMIST: lambda n: conformist_copy_population(hist, t, tau, n),
        EXTERNAL: lambda n: _external_actions(sls, n, hist, env, t, tau, rng),
    }
    for code, copy in copy_rules.items():
        mask = strategies == code
        if not mask.any():
            continue
        try:
            actions[mask] = copy(int(mask.sum()))
        except NotYetObservable:
            executed[mask] = StrategyKind.INDIVIDUAL

    rewards = sample_rewards(env.models_at(t - 1), actions, rng)
    q_update_population(pop.q, actions, rewards, params.beta)
    pop.history.record(SocialInfo.from_actions(t, actions, rewards, env.k, executed))
    pop.last_action = actions
    pop.last_reward = rewards
    pop.fitness = rewards
    pop.generation = t

    counts = np.bincount(np.where(executed == EXTERNAL, StrategyKind.SUCCESS, executed), minlength=3)[:3]
    pop.last_step = StepRecord(
        t=t,
        psi=float(rewards.mean()),
        il_steps=int(np.count_nonzero(executed == StrategyKind.INDIVIDUAL)),
        strategy_counts=counts,
        optimal_share=float(np.mean(actions == env.optimal_arm(t - 1))),
        freq=np.bincount(actions, minlength=env.k),
    )
    return actions, rewards, executed


def select_and_mutate(pop: Population, rng: np.random.Generator, choices: Optional[np.ndarray] = None) -> None:
    """Roulette selection, cloning with age update, then mutation."""
    params = pop.params
    selected = roulette_select(pop.fitness, params.s, rng, params.fitness_floor)
    pop.reproduce(selected)
    pop.kinds, mutated = mutate(pop.kinds, params.mr, pop.mode, rng, choices)
    if mutated.any():
        idx = np.flatnonzero(mutated)
        pop.age[idx] = 0
        if pop.mode == COMPETITION:
            pop.controllers.reset(idx)
            if params.reset_q_on_mutation:
                pop.q[idx] = 0.0


def generation_step_alg1(pop: Population, sls: str, env: EnvironmentSchedule, t: int,
                         rng: np.random.Generator, selection: bool = True) -> Population:
    """
    One generation of the IL-versus-SLS algorithm.

    At t = 1 every agent learns individually.
    """
    if sls not in ALG1_SLS:
        raise ConfigurationError(f"sls must be one of {ALG1_SLS}, got {sls!r}")
    if t == 1:
        strategies = np.full(pop.m, StrategyKind.INDIVIDUAL, dtype=int)
    else:
        code = {"success": StrategyKind.SUCCESS, "conformist": StrategyKind.CONFORMIST}.get(sls, EXTERNAL)
        strategies = np.where(pop.kinds == SL_TYPE, int(code), int(StrategyKind.INDIVIDUAL))
    act(pop, strategies, env, t, rng, sls)
    if selection:
        select_and_mutate(pop, rng)
    return pop


@dataclass
class RunResult:
    """
    Time series of one replicate.

    ``frame`` has one row per timestep with at least the columns t, psi,
    cost (cumulative exploration cost) and optimal.
    """
    name: str
    seed: int
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def psi(self) -> np.ndarray:
        return self.frame["psi"].to_numpy()

    @property
    def cumulative_psi(self) -> float:
        return float(self.frame["psi"].sum())

    @property
    def exploration_cost(self) -> float:
        return float(self.frame["cost"].iloc[-1])

    def window_mean(self, lo: int, hi: int, column: str = "psi") -> float:
        """Mean of ``column`` over timesteps lo..hi inclusive."""
        rows = self.frame[(self.frame["t"] >= lo) & (self.frame["t"] <= hi)]
        if rows.empty:
            raise ConfigurationError(f"window [{lo}, {hi}] lies outside the run")
        return float(rows[column].mean())

    def ratio_columns(self) -> List[str]:
        return [c for c in self.frame.columns if c.startswith("ratio:")]


def _context_columns(step: Optional[StepContext]) -> Dict[str, float]:
    if step is None or step.stats is None:
        return {"ec": np.nan, "conf": np.nan, "unc": np.nan, "odpu": np.nan}
    ctx = step.context()
    return {"ec": ctx.ec, "conf": ctx.conf, "unc": ctx.unc, "odpu": ctx.odpu_value}


def _base_row(pop: Population, cost: float) -> Dict[str, float]:
    rec = pop.last_step
    return {
        "t": rec.t,
        "psi": rec.psi,
        "cost": cost,
        "optimal": rec.optimal_share,
        "il_share": rec.strategy_counts[0] / pop.m,
        "success_share": rec.strategy_counts[1] / pop.m,
        "conformist_share": rec.strategy_counts[2] / pop.m,
    }


def run_alg1(sls: str, env: EnvironmentSchedule, params: EvoParams, rng: np.random.Generator,
             seed: int = 0, selection: bool = True) -> RunResult:
    """
    Full IL-versus-SLS run.

    Per-step columns: t, psi, cost, optimal, sl_ratio, a1, a2 (shares of
    individual learners choosing arm 1/arm 2) and the executed strategy shares.
    """
    m = params.m
    n_sl = int(round(params.initial_sl_ratio * m))
    kinds = np.zeros(m, dtype=int)
    kinds[rng.permutation(m)[:n_sl]] = SL_TYPE
    pop = Population(kinds, env.k, params, ALG1)

    rows = []
    cost = 0.0
    for t in range(1, env.horizon + 1):
        acting_kinds = pop.kinds.copy()
        generation_step_alg1(pop, sls, env, t, rng, selection)
        cost += pop.last_step.il_steps * params.epsilon
        row = _base_row(pop, cost)
        actions = pop.history.get(t).actions
        il = acting_kinds == IL_TYPE
        row["sl_ratio"] = float(np.mean(pop.kinds == SL_TYPE))
        row["a1"] = float(np.mean(il & (actions == 0)))
        row["a2"] = float(np.mean(il & (actions == 1)))
        rows.append(row)

    return RunResult(f"alg1:{sls}", seed, pd.DataFrame(rows),
                     {"sls": sls, "env": env.name, "m": m, "reconstructed": env.reconstructed})


def _controllers_for(kinds: Sequence[MetaKind], settings: MetaSettings) -> Dict[MetaKind, MetaController]:
    return {kind: create_controller(kind, settings) for kind in kinds}


class MetaRun:
    """Shared step loop of lifetime and competition runs."""

    def __init__(self, pop: Population, env: EnvironmentSchedule, settings: MetaSettings,
                 controllers: Dict[MetaKind, MetaController]):
        self.pop = pop
        self.env = env
        self.settings = settings
        self.controllers = controllers
        params = pop.params
        self.encoder = ContextEncoder(env.k, params.delta, params.ewma, params.ewma_alpha)
        self.cost = 0.0

    def step(self, t: int, rng: np.random.Generator) -> StepContext:
        pop = self.pop
        stats = self.encoder.stats(pop.history, t, pop.params.tau)
        step = StepContext(stats, self.env.k, self.settings.context)
        strategies = dispatch_strategies(pop.kinds, step, pop.controllers, self.controllers, rng)
        _, rewards, executed = act(pop, strategies, self.env, t, rng)
        update_controllers(pop.kinds, executed, rewards, pop.controllers, self.controllers)
        self.cost += pop.last_step.il_steps * pop.params.epsilon
        return step


def run_lifetime(meta_kind: Union[str, MetaKind], env: EnvironmentSchedule, params: EvoParams,
                 rng: np.random.Generator, settings: Optional[MetaSettings] = None, seed: int = 0,
                 record_context: bool = True) -> RunResult:
    """
    Homogeneous population of one meta-strategy without selection.

    Per-step columns: t, psi, cost, optimal, strategy shares and, with
    ``record_context``, ec, conf, unc, odpu.
    """
    kind = MetaKind.parse(meta_kind)
    settings = settings or MetaSettings()
    pop = Population(np.full(params.m, kind.code), env.k, params, COMPETITION)
    run = MetaRun(pop, env, settings, _controllers_for([kind], settings))

    rows = []
    for t in range(1, env.horizon + 1):
        step = run.step(t, rng)
        row = _base_row(pop, run.cost)
        if record_context:
            row.update(_context_columns(step))
        rows.append(row)

    return RunResult(kind.value, seed, pd.DataFrame(rows),
                     {"meta_kind": kind.value, "env": env.name, "m": params.m,
                      "reconstructed": env.reconstructed})


def run_competition(meta_set: Sequence[Union[str, MetaKind]], env: EnvironmentSchedule,
                    params: EvoParams, rng: np.random.Generator,
                    settings: Optional[MetaSettings] = None, seed: int = 0) -> RunResult:
    """
    Evolutionary competition among meta-strategies.

    The population starts with a near-equal split over ``meta_set``.  Per
    generation every agent acts, then selection (strength s), mutation within
    ``meta_set`` and age update produce the next generation.

    Per-step columns: t, psi, cost, optimal, strategy shares, ec/conf/unc/odpu,
    ``ratio:<kind>`` and ``age:<kind>`` for every kind in the set.
    """
    kinds = [MetaKind.parse(k) for k in meta_set]
    if not kinds:
        raise ConfigurationError("meta_set is empty")
    settings = settings or MetaSettings()
    codes = np.array(sorted({k.code for k in kinds}))
    initial = np.resize(codes, params.m)
    rng.shuffle(initial)
    pop = Population(initial, env.k, params, COMPETITION)
    run = MetaRun(pop, env, settings, _controllers_for([ALL_META_KINDS[c] for c in codes], settings))

    rows = []
    for t in range(1, env.horizon + 1):
        step = run.step(t, rng)
        select_and_mutate(pop, rng, codes)
        row = _base_row(pop, run.cost)
        row.update(_context_columns(step))
        counts = np.bincount(pop.kinds, minlength=len(ALL_META_KINDS))
        age_sums = np.bincount(pop.kinds, weights=pop.age, minlength=len(ALL_META_KINDS))
        for code in codes:
            label = ALL_META_KINDS[code].value
            row[f"ratio:{label}"] = counts[code] / pop.m
            row[f"age:{label}"] = age_sums[code] / counts[code] if counts[code] else np.nan
        rows.append(row)

    logger.debug(f"Competition run {seed} finished on {env.name}")
    return RunResult("competition", seed, pd.DataFrame(rows),
                     {"meta_set": [k.value for k in kinds], "env": env.name, "m": params.m,
                      "mr": params.mr, "s": params.s, "reconstructed": env.reconstructed})


def replicate_seeds(root_seed: int, n: int) -> List[int]:
    """Independent per-replicate seeds derived from one root seed."""
    if n < 1:
        raise ConfigurationError("at least one replicate is required")
    return [int(s) for s in np.random.SeedSequence(root_seed).generate_state(n)]


def run_replicates(fn: Callable[[int], RunResult], seeds: Sequence[int], workers: int = 1) -> List[RunResult]:
    """
    Run ``fn(seed)`` for every seed, in a process pool when workers > 1.

    ``fn`` must be picklable (module-level function or functools.partial)
    for parallel execution.  Results keep the seed order.
    """
    if workers <= 1 or len(seeds) <= 1:
        return [fn(seed) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


# Seeded entry points for run_replicates

def seeded_alg1(seed: int, sls: str, env: EnvironmentSchedule, params: EvoParams,
                selection: bool = True) -> RunResult:
    return run_alg1(sls, env, params, np.random.default_rng(seed), seed, selection)


def seeded_lifetime(seed: int, meta_kind: str, env: EnvironmentSchedule, params: EvoParams,
                    settings: Optional[MetaSettings] = None, record_context: bool = True) -> RunResult:
    return run_lifetime(meta_kind, env, params, np.random.default_rng(seed), settings, seed, record_context)


def seeded_competition(seed: int, meta_set: Sequence[str], env: EnvironmentSchedule,
                       params: EvoParams, settings: Optional[MetaSettings] = None) -> RunResult:
    return run_competition(meta_set, env, params, np.random.default_rng(seed), settings, seed)


def exploration_cost(frame: pd.DataFrame, epsilon: Optional[float] = None, m: Optional[int] = None) -> float:
    """
    Total exploration cost of a run trace.

    Uses the cumulative ``cost`` column when present, otherwise
    sum_t il_share * m * epsilon.
    """
    if "cost" in frame and epsilon is None:
        return float(frame["cost"].iloc[-1])
    if epsilon is None or m is None:
        raise ConfigurationError("epsilon and m are needed to cost a trace without a cost column")
    return float((frame["il_share"] * m).sum() * epsilon)
