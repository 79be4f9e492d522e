"""
Meta-social learning strategies

Each timestep a meta-social learner picks one of three learning strategies
(individual learning, success-based copying, conformist copying).  The
thirteen meta-strategies differ in how they pick: fixed probabilities, rules
over the encoded context, bandits over the three strategies, tabular
Q-learning over the context state, an evolved rule table, or a small fully
connected network.

Pure dispatch functions work on a single context.  For simulation the
controllers below act on blocks of agents at once, holding their learning
state in a shared ControllerState.
"""

import dataclasses
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Dict, Optional, Sequence, Tuple, Type, Union

import numpy as np
import yaml

from ..context.context_encoding import Context, ContextParams, ContextStats, state_flags, state_index
from ..learning.learners import epsilon_greedy_population
from ..utils.config_validator import load_yaml
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)


class StrategyKind(IntEnum):
    """Learning strategy executed by an agent for one step."""
    INDIVIDUAL = 0
    SUCCESS = 1
    CONFORMIST = 2

    @property
    def label(self) -> str:
        return _STRATEGY_LABELS[self]

    @classmethod
    def parse(cls, value: Union[str, int, "StrategyKind"]) -> "StrategyKind":
        if isinstance(value, StrategyKind):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower()
        for kind, label in _STRATEGY_LABELS.items():
            if key in (label.lower(), kind.name.lower()):
                return kind
        raise ConfigurationError(f"Unknown strategy: {value!r}")


_STRATEGY_LABELS = {
    StrategyKind.INDIVIDUAL: "IL",
    StrategyKind.SUCCESS: "Success",
    StrategyKind.CONFORMIST: "Conformist",
}
N_STRATEGIES = len(StrategyKind)


class MetaKind(Enum):
    """The thirteen meta-social learning strategies."""
    IL_ONLY = "IL-Only"
    SL_RAND = "SL-Rand"
    SL_PROP = "SL-Prop"
    SL_CONF = "SL-Conf"
    SL_SUCC = "SL-Succ"
    SL_EC_CONF = "SL-EC-Conf"
    SL_EC_SUCC = "SL-EC-Succ"
    SL_EC_CONF_UNC = "SL-EC-Conf-Unc"
    SL_RL = "SL-RL"
    SL_QL = "SL-QL"
    SL_UCB = "SL-UCB"
    SL_GA = "SL-GA"
    SL_NE = "SL-NE"

    @property
    def code(self) -> int:
        return ALL_META_KINDS.index(self)

    @classmethod
    def parse(cls, value: Union[str, "MetaKind"]) -> "MetaKind":
        if isinstance(value, MetaKind):
            return value
        key = str(value).strip().lower()
        key = _META_ALIASES.get(key, key)
        for kind in cls:
            if key in (kind.value.lower(), kind.name.lower()):
                return kind
        raise ConfigurationError(f"Unknown meta-strategy: {value!r}")


ALL_META_KINDS: Tuple[MetaKind, ...] = tuple(MetaKind)
_META_ALIASES = {"sl-ec-unc": "sl-ec-succ"}

# Strategy probabilities of the baselines, ordered (IL, Success, Conformist)
FIXED_PROBABILITIES: Dict[MetaKind, Tuple[float, float, float]] = {
    MetaKind.IL_ONLY: (1.0, 0.0, 0.0),
    MetaKind.SL_RAND: (1 / 3, 1 / 3, 1 / 3),
    MetaKind.SL_PROP: (0.10, 0.45, 0.45),
    MetaKind.SL_CONF: (0.05, 0.0, 0.95),
    MetaKind.SL_SUCC: (0.05, 0.95, 0.0),
}

IL = StrategyKind.INDIVIDUAL
SUCC = StrategyKind.SUCCESS
CONF = StrategyKind.CONFORMIST


# ---------------------------------------------------------------------------
# Context dispatchers
# ---------------------------------------------------------------------------

def msl_ec_conf_unc(ctx: Context) -> StrategyKind:
    """IL after a change, conform when conformity holds, copy success when certain, else IL."""
    if ctx.ec:
        return IL
    if ctx.conf:
        return CONF
    if not ctx.unc:
        return SUCC
    return IL


def msl_ec_conf(ctx: Context) -> StrategyKind:
    if ctx.ec:
        return IL
    return CONF if ctx.conf else IL


def msl_ec_succ(ctx: Context) -> StrategyKind:
    if ctx.ec:
        return IL
    return SUCC if not ctx.unc else IL


def msl_fixed(kind: MetaKind, rng: np.random.Generator) -> StrategyKind:
    """Draw a strategy from the fixed probabilities of a baseline meta-strategy."""
    if kind not in FIXED_PROBABILITIES:
        raise ConfigurationError(f"{kind.value} is not a fixed-probability baseline")
    return StrategyKind(int(rng.choice(N_STRATEGIES, p=FIXED_PROBABILITIES[kind])))


@dataclass(frozen=True)
class RuleTable:
    """
    Strategy per context state plus the detector thresholds.

    ``rules[4*EC + 2*C + U]`` is the strategy for that state.  ``trained`` is
    False for hand-set reference tables.
    """
    rules: Tuple[StrategyKind, ...]
    th_ec: float = 0.15
    th_u: float = 0.1
    trained: bool = field(default=True, compare=False)

    def __post_init__(self):
        if len(self.rules) != 8:
            raise ConfigurationError(f"rule table needs 8 rules, got {len(self.rules)}")
        object.__setattr__(self, "rules", tuple(StrategyKind.parse(r) for r in self.rules))
        if self.th_ec <= 0 or self.th_u <= 0:
            raise ConfigurationError("rule table thresholds must be positive")

    @property
    def params(self) -> ContextParams:
        return ContextParams(th_ec=self.th_ec, th_u=min(self.th_u, 1.0 - 1e-9))

    def to_genotype(self) -> np.ndarray:
        return np.array([int(r) for r in self.rules] + [self.th_ec, self.th_u], dtype=float)

    @classmethod
    def from_genotype(cls, genotype: Sequence[float]) -> "RuleTable":
        genotype = np.asarray(genotype, dtype=float)
        if genotype.size != 10:
            raise ConfigurationError(f"rule table genotype has 10 genes, got {genotype.size}")
        rules = tuple(StrategyKind(int(round(g))) for g in genotype[:8])
        return cls(rules, float(genotype[8]), float(genotype[9]))


def msl_rule_table(table: RuleTable, ctx: Context) -> StrategyKind:
    return table.rules[state_index(ctx.ec, ctx.conf, ctx.unc)]


def rule_table_from_dispatcher(fn: Callable[[Context], StrategyKind], th_ec: float = 0.15,
                               th_u: float = 0.1, k: int = 2) -> RuleTable:
    """Rule table reproducing a context dispatcher on all eight states."""
    rules = []
    for index in range(8):
        ec, conf, unc = state_flags(index)
        rules.append(fn(Context(ec, conf, unc, 0.0, np.zeros(k), np.zeros(k))))
    return RuleTable(tuple(rules), th_ec, th_u)


def all_rule_tables(th_ec: float = 0.15, th_u: float = 0.1):
    """Iterate over all 3^8 rule tables."""
    for code in range(N_STRATEGIES ** 8):
        rules = []
        for _ in range(8):
            code, digit = divmod(code, N_STRATEGIES)
            rules.append(StrategyKind(digit))
        yield RuleTable(tuple(rules), th_ec, th_u)


# ---------------------------------------------------------------------------
# Fully connected network controller
# ---------------------------------------------------------------------------

FCN_INPUTS = 6
FCN_HIDDEN = 12
FCN_OUTPUTS = N_STRATEGIES
FCN_PARAMETERS = FCN_HIDDEN * (FCN_INPUTS + 1) + FCN_OUTPUTS * (FCN_HIDDEN + 1)

ACTIVATIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "tanh": np.tanh,
    "relu": lambda x: np.maximum(x, 0.0),
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
}


@dataclass(frozen=True)
class FCNWeights:
    """Weights of the 6-12-3 network; the last column of each matrix is the bias."""
    hidden: np.ndarray
    output: np.ndarray
    activation: str = "tanh"
    trained: bool = field(default=True, compare=False)

    def __post_init__(self):
        hidden = np.asarray(self.hidden, dtype=float)
        output = np.asarray(self.output, dtype=float)
        if hidden.shape != (FCN_HIDDEN, FCN_INPUTS + 1) or output.shape != (FCN_OUTPUTS, FCN_HIDDEN + 1):
            raise ConfigurationError(
                f"FCN weights must have shapes {(FCN_HIDDEN, FCN_INPUTS + 1)} and "
                f"{(FCN_OUTPUTS, FCN_HIDDEN + 1)}, got {hidden.shape} and {output.shape}"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"Unknown activation: {self.activation!r}")
        object.__setattr__(self, "hidden", hidden)
        object.__setattr__(self, "output", output)

    @property
    def size(self) -> int:
        return self.hidden.size + self.output.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.hidden.ravel(), self.output.ravel()])

    @classmethod
    def from_flat(cls, values: Sequence[float], activation: str = "tanh") -> "FCNWeights":
        values = np.asarray(values, dtype=float)
        if values.size != FCN_PARAMETERS:
            raise ConfigurationError(f"FCN genotype has {FCN_PARAMETERS} genes, got {values.size}")
        split = FCN_HIDDEN * (FCN_INPUTS + 1)
        return cls(values[:split].reshape(FCN_HIDDEN, FCN_INPUTS + 1),
                   values[split:].reshape(FCN_OUTPUTS, FCN_HIDDEN + 1), activation)

    @classmethod
    def zeros(cls, activation: str = "tanh") -> "FCNWeights":
        return cls.from_flat(np.zeros(FCN_PARAMETERS), activation)

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        """
        Output activations for one input vector (shape (6,)) or a batch
        (shape (n, 6)).
        """
        x = np.asarray(inputs, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != FCN_INPUTS:
            raise ValueError(f"FCN expects {FCN_INPUTS} inputs, got {x.shape[1]}")
        ones = np.ones((x.shape[0], 1))
        h = ACTIVATIONS[self.activation](np.hstack([x, ones]) @ self.hidden.T)
        out = np.hstack([h, ones]) @ self.output.T
        return out[0] if single else out


def fcn_inputs(mu_hat: np.ndarray, sigma_hat: np.ndarray, freq_norm: np.ndarray) -> np.ndarray:
    """Network input vector; missing estimates enter as 0."""
    x = np.concatenate([np.asarray(mu_hat, float), np.asarray(sigma_hat, float),
                        np.asarray(freq_norm, float)])
    return np.nan_to_num(x, nan=0.0)


def msl_fcn(weights: FCNWeights, mu_hat: np.ndarray, sigma_hat: np.ndarray,
            freq_norm: np.ndarray) -> StrategyKind:
    """Strategy of the highest network output (lowest index on ties)."""
    if not (len(mu_hat) == len(sigma_hat) == len(freq_norm) == FCN_INPUTS // 3):
        raise ValueError("FCN controller takes two arms (six inputs)")
    out = weights.forward(fcn_inputs(mu_hat, sigma_hat, freq_norm))
    return StrategyKind(int(np.argmax(out)))


# ---------------------------------------------------------------------------
# Bandit and Q-learning controllers
# ---------------------------------------------------------------------------

@dataclass
class StrategyBanditState:
    """
    Learning state of one agent's controller.

    Attributes:
        q: Estimated reward per strategy (SL-RL, SL-UCB)
        counts: Selections per strategy (SL-UCB)
        ql: Q(s, a) over 8 context states x 3 strategies (SL-QL)
    """
    q: np.ndarray = field(default_factory=lambda: np.zeros(N_STRATEGIES))
    counts: np.ndarray = field(default_factory=lambda: np.zeros(N_STRATEGIES))
    ql: np.ndarray = field(default_factory=lambda: np.zeros((8, N_STRATEGIES)))

    def __post_init__(self):
        if self.ql.shape != (8, N_STRATEGIES):
            raise ConfigurationError("Q(s, a) table must have shape (8, 3)")
        if np.any(self.counts < 0):
            raise ConfigurationError("selection counts must be non-negative")


def ucb_select_rows(q: np.ndarray, counts: np.ndarray, c: float) -> np.ndarray:
    """
    UCB choice per row: an unvisited strategy (lowest index) if any, otherwise
    argmax of q + c * sqrt(ln t / N) with t the row's total selections.
    """
    q = np.atleast_2d(q)
    counts = np.atleast_2d(counts)
    unvisited = counts == 0
    total = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        bonus = c * np.sqrt(np.log(np.maximum(total, 1.0)) / counts)
    scores = np.where(unvisited, np.inf, q + bonus)
    return np.argmax(scores, axis=1)


def msl_bandit_select(state: StrategyBanditState, kind: MetaKind, rng: np.random.Generator,
                      epsilon: float = 0.1, c: float = 1.0) -> StrategyKind:
    """Strategy chosen by an SL-RL (epsilon-greedy) or SL-UCB controller."""
    if kind == MetaKind.SL_RL:
        return StrategyKind(int(epsilon_greedy_population(state.q[None, :], epsilon, rng)[0]))
    if kind == MetaKind.SL_UCB:
        return StrategyKind(int(ucb_select_rows(state.q, state.counts, c)[0]))
    raise ConfigurationError(f"{kind.value} is not a bandit meta-strategy")


def bandit_update(state: StrategyBanditState, strategy: StrategyKind, reward: float,
                  beta: float = 0.2) -> None:
    """Move the chosen strategy's estimate towards the reward it earned."""
    s = int(strategy)
    state.q[s] += beta * (reward - state.q[s])
    state.counts[s] += 1


def msl_qlearn(state: StrategyBanditState, ctx: Context, epsilon_ql: float,
               rng: np.random.Generator) -> StrategyKind:
    """Epsilon-greedy strategy over Q(s, .) for the context state s."""
    s = state_index(ctx.ec, ctx.conf, ctx.unc)
    return StrategyKind(int(epsilon_greedy_population(state.ql[s][None, :], epsilon_ql, rng)[0]))


def qlearn_update(state: StrategyBanditState, s: int, a: int, reward: float, s_next: int,
                  alpha: float = 0.01, gamma: float = 0.0) -> None:
    """Q(s,a) += alpha * (r + gamma * max Q(s', .) - Q(s,a))."""
    target = reward + gamma * state.ql[s_next].max()
    state.ql[s, a] += alpha * (target - state.ql[s, a])


# ---------------------------------------------------------------------------
# Population controllers
# ---------------------------------------------------------------------------

@dataclass
class MetaSettings:
    """Parameters shared by the controllers of one simulation."""
    beta: float = 0.2
    ucb_c: float = 1.0
    rl_epsilon: float = 0.1
    ql_epsilon: float = 0.2
    ql_alpha: float = 0.01
    ql_gamma: float = 0.0
    context: ContextParams = field(default_factory=ContextParams)
    rule_table: Optional[RuleTable] = None
    fcn_weights: Optional[FCNWeights] = None

    @classmethod
    def from_config(cls, config: Dict, rule_table: Optional[RuleTable] = None,
                    fcn_weights: Optional[FCNWeights] = None) -> "MetaSettings":
        """
        Settings from a merged configuration; controller files named under
        ``meta`` are loaded unless explicit controllers are given.
        """
        meta = config.get("meta", {})
        if rule_table is None and meta.get("rule_table"):
            rule_table = load_controller(meta["rule_table"])
        if fcn_weights is None and meta.get("fcn_weights"):
            fcn_weights = load_controller(meta["fcn_weights"])
        return cls(
            beta=float(config.get("learning", {}).get("beta", 0.2)),
            ucb_c=float(meta.get("ucb_c", 1.0)),
            rl_epsilon=float(meta.get("rl_epsilon", 0.1)),
            ql_epsilon=float(meta.get("ql_epsilon", 0.2)),
            ql_alpha=float(meta.get("ql_alpha", 0.01)),
            ql_gamma=float(meta.get("ql_gamma", 0.0)),
            context=ContextParams.from_config(config),
            rule_table=rule_table,
            fcn_weights=fcn_weights,
        )


class ControllerState:
    """Controller learning state of a whole population, one row per agent."""

    def __init__(self, m: int):
        self.bandit_q = np.zeros((m, N_STRATEGIES))
        self.bandit_n = np.zeros((m, N_STRATEGIES))
        self.ql_q = np.zeros((m, 8, N_STRATEGIES))
        self.ql_state = np.full(m, -1, dtype=int)
        self.ql_action = np.zeros(m, dtype=int)
        self.ql_reward = np.zeros(m)

    @property
    def m(self) -> int:
        return self.bandit_q.shape[0]

    def reset(self, idx: np.ndarray) -> None:
        """Forget everything learned by the agents at ``idx``."""
        self.bandit_q[idx] = 0.0
        self.bandit_n[idx] = 0.0
        self.ql_q[idx] = 0.0
        self.ql_state[idx] = -1
        self.ql_action[idx] = 0
        self.ql_reward[idx] = 0.0

    def take(self, idx: np.ndarray) -> "ControllerState":
        """New state whose rows are copies of the rows at ``idx`` (offspring)."""
        clone = ControllerState.__new__(ControllerState)
        for name in ("bandit_q", "bandit_n", "ql_q", "ql_state", "ql_action", "ql_reward"):
            setattr(clone, name, getattr(self, name)[idx].copy())
        return clone

    def agent(self, i: int) -> StrategyBanditState:
        """Copy of one agent's learning state."""
        return StrategyBanditState(self.bandit_q[i].copy(), self.bandit_n[i].copy(), self.ql_q[i].copy())


@dataclass
class StepContext:
    """What the controllers observe at one timestep."""
    stats: Optional[ContextStats]
    k: int
    default_params: ContextParams

    def context(self, params: Optional[ContextParams] = None) -> Context:
        if self.stats is None:
            return Context.empty(self.k)
        return self.stats.context(params or self.default_params)

    def freq_norm(self) -> np.ndarray:
        if self.stats is None:
            return np.zeros(self.k)
        counts = self.stats.counts.astype(float)
        total = counts.sum()
        return counts / total if total > 0 else counts


class MetaController(ABC):
    """
    Abstract base for the controller of one meta-strategy.

    A controller chooses strategies for a block of agents and, for learning
    controllers, updates their rows in the shared ControllerState once the
    rewards are known.
    """

    kind: MetaKind

    def __init__(self, settings: MetaSettings):
        self.settings = settings

    @abstractmethod
    def select(self, step: StepContext, idx: np.ndarray, state: ControllerState,
               rng: np.random.Generator) -> np.ndarray:
        """Strategy code for every agent in ``idx``."""
        pass

    def update(self, idx: np.ndarray, strategies: np.ndarray, rewards: np.ndarray,
               state: ControllerState) -> None:
        """Feed back the rewards earned with ``strategies``; no-op by default."""
        return None


class FixedProbabilityController(MetaController):
    """IL-Only, SL-Rand, SL-Prop, SL-Conf and SL-Succ."""

    def select(self, step, idx, state, rng):
        p = FIXED_PROBABILITIES[self.kind]
        if max(p) == 1.0:
            return np.full(idx.size, int(np.argmax(p)), dtype=int)
        return rng.choice(N_STRATEGIES, size=idx.size, p=p).astype(int)


class ContextRuleController(MetaController):
    """Context dispatchers with the default detector thresholds."""

    dispatcher: Callable[[Context], StrategyKind]

    def select(self, step, idx, state, rng):
        strategy = type(self).dispatcher(step.context())
        return np.full(idx.size, int(strategy), dtype=int)


class RuleTableController(MetaController):
    """SL-GA: an evolved rule table with its own thresholds."""

    def __init__(self, settings: MetaSettings):
        super().__init__(settings)
        if settings.rule_table is None:
            raise ConfigurationError("SL-GA needs a rule table")
        self.table = settings.rule_table
        self.params = self.table.params

    def select(self, step, idx, state, rng):
        strategy = msl_rule_table(self.table, step.context(self.params))
        return np.full(idx.size, int(strategy), dtype=int)


class FCNController(MetaController):
    """SL-NE: network over the estimated means, deviations and action shares."""

    def __init__(self, settings: MetaSettings):
        super().__init__(settings)
        if settings.fcn_weights is None:
            raise ConfigurationError("SL-NE needs FCN weights")
        self.weights = settings.fcn_weights

    def select(self, step, idx, state, rng):
        ctx = step.context()
        strategy = msl_fcn(self.weights, ctx.mu_hat, ctx.sigma_hat, step.freq_norm())
        return np.full(idx.size, int(strategy), dtype=int)


class EpsilonGreedyBanditController(MetaController):
    """SL-RL: epsilon-greedy bandit over the three strategies."""

    def select(self, step, idx, state, rng):
        return epsilon_greedy_population(state.bandit_q[idx], self.settings.rl_epsilon, rng)

    def update(self, idx, strategies, rewards, state):
        q = state.bandit_q[idx, strategies]
        state.bandit_q[idx, strategies] = q + self.settings.beta * (rewards - q)
        state.bandit_n[idx, strategies] += 1


class UCBController(EpsilonGreedyBanditController):
    """SL-UCB: upper confidence bound over the three strategies."""

    def select(self, step, idx, state, rng):
        return ucb_select_rows(state.bandit_q[idx], state.bandit_n[idx], self.settings.ucb_c)


class QLearningController(MetaController):
    """
    SL-QL: Q-learning with the context state.  The update of step t is applied
    at step t + 1 once the next state is known.
    """

    def select(self, step, idx, state, rng):
        s_next = step.context().state
        pending = idx[state.ql_state[idx] >= 0]
        if pending.size:
            s = state.ql_state[pending]
            a = state.ql_action[pending]
            target = state.ql_reward[pending] + self.settings.ql_gamma * state.ql_q[pending, s_next].max(axis=1)
            state.ql_q[pending, s, a] += self.settings.ql_alpha * (target - state.ql_q[pending, s, a])

        strategies = epsilon_greedy_population(state.ql_q[idx, s_next], self.settings.ql_epsilon, rng)
        state.ql_state[idx] = s_next
        state.ql_action[idx] = strategies
        return strategies

    def update(self, idx, strategies, rewards, state):
        state.ql_action[idx] = strategies
        state.ql_reward[idx] = rewards


def _rule_controller(fn: Callable[[Context], StrategyKind]) -> Type[ContextRuleController]:
    return type(f"{fn.__name__}_controller", (ContextRuleController,), {"dispatcher": staticmethod(fn)})


META_CONTROLLERS: Dict[MetaKind, Type[MetaController]] = {
    MetaKind.IL_ONLY: FixedProbabilityController,
    MetaKind.SL_RAND: FixedProbabilityController,
    MetaKind.SL_PROP: FixedProbabilityController,
    MetaKind.SL_CONF: FixedProbabilityController,
    MetaKind.SL_SUCC: FixedProbabilityController,
    MetaKind.SL_EC_CONF: _rule_controller(msl_ec_conf),
    MetaKind.SL_EC_SUCC: _rule_controller(msl_ec_succ),
    MetaKind.SL_EC_CONF_UNC: _rule_controller(msl_ec_conf_unc),
    MetaKind.SL_RL: EpsilonGreedyBanditController,
    MetaKind.SL_QL: QLearningController,
    MetaKind.SL_UCB: UCBController,
    MetaKind.SL_GA: RuleTableController,
    MetaKind.SL_NE: FCNController,
}


def create_controller(kind: Union[str, MetaKind], settings: MetaSettings) -> MetaController:
    """
    Instantiate the controller of a meta-strategy.

    Raises:
        ConfigurationError: If the kind is unknown or lacks its controller data
    """
    kind = MetaKind.parse(kind)
    if kind not in META_CONTROLLERS:
        supported = ", ".join(k.value for k in META_CONTROLLERS)
        raise ConfigurationError(f"No controller for {kind.value}. Supported: {supported}")
    controller = META_CONTROLLERS[kind](settings)
    controller.kind = kind
    return controller


def register_controller(kind: Union[str, MetaKind], controller_class: type) -> None:
    """
    Register a controller class for a meta-strategy.

    Raises:
        ConfigurationError: If controller_class is not a MetaController subclass
    """
    if not isinstance(controller_class, type) or not issubclass(controller_class, MetaController):
        raise ConfigurationError("controller_class must be a subclass of MetaController")
    META_CONTROLLERS[MetaKind.parse(kind)] = controller_class


def get_supported_meta_kinds() -> list:
    return [kind.value for kind in META_CONTROLLERS]


def dispatch_strategies(kinds: np.ndarray, step: StepContext, state: ControllerState,
                        controllers: Dict[MetaKind, MetaController],
                        rng: np.random.Generator) -> np.ndarray:
    """
    Strategy code for every agent.

    Args:
        kinds: Meta-kind code (MetaKind.code) per agent
        step: Observed context of this step
        state: Controller learning state of the population
        controllers: Controller per meta-kind present in ``kinds``
    """
    strategies = np.zeros(kinds.size, dtype=int)
    for code in np.unique(kinds):
        idx = np.flatnonzero(kinds == code)
        kind = ALL_META_KINDS[int(code)]
        strategies[idx] = controllers[kind].select(step, idx, state, rng)
    return strategies


def update_controllers(kinds: np.ndarray, strategies: np.ndarray, rewards: np.ndarray,
                       state: ControllerState, controllers: Dict[MetaKind, MetaController]) -> None:
    """Reward feedback for every learning controller."""
    for code in np.unique(kinds):
        idx = np.flatnonzero(kinds == code)
        controllers[ALL_META_KINDS[int(code)]].update(idx, strategies[idx], rewards[idx], state)


# ---------------------------------------------------------------------------
# Controller files
# ---------------------------------------------------------------------------

CONTROLLER_FORMAT_VERSION = 1


def controller_to_dict(obj: Union[RuleTable, FCNWeights]) -> Dict:
    if isinstance(obj, RuleTable):
        return {
            "format_version": CONTROLLER_FORMAT_VERSION,
            "meta_kind": MetaKind.SL_GA.value,
            "th_ec": float(obj.th_ec),
            "th_u": float(obj.th_u),
            "trained": bool(obj.trained),
            "rules": [r.label for r in obj.rules],
        }
    if isinstance(obj, FCNWeights):
        return {
            "format_version": CONTROLLER_FORMAT_VERSION,
            "meta_kind": MetaKind.SL_NE.value,
            "activation": obj.activation,
            "trained": bool(obj.trained),
            "layers": [FCN_INPUTS, FCN_HIDDEN, FCN_OUTPUTS],
            "weights": [float(w) for w in obj.flat()],
        }
    raise ConfigurationError(f"Cannot serialise controller of type {type(obj).__name__}")


def controller_from_dict(data: Dict) -> Union[RuleTable, FCNWeights]:
    kind = MetaKind.parse(data.get("meta_kind", ""))
    try:
        if kind == MetaKind.SL_GA:
            return RuleTable(tuple(data["rules"]), float(data["th_ec"]), float(data["th_u"]),
                             bool(data.get("trained", True)))
        if kind == MetaKind.SL_NE:
            if list(data.get("layers", [FCN_INPUTS, FCN_HIDDEN, FCN_OUTPUTS])) != [FCN_INPUTS, FCN_HIDDEN, FCN_OUTPUTS]:
                raise ConfigurationError(f"Unsupported FCN layout: {data['layers']}")
            weights = FCNWeights.from_flat(data["weights"], data.get("activation", "tanh"))
            return dataclasses.replace(weights, trained=bool(data.get("trained", True)))
    except KeyError as e:
        raise ConfigurationError(f"Controller definition is missing {e}") from e
    raise ConfigurationError(f"{kind.value} has no controller file format")


def save_controller(path: str, obj: Union[RuleTable, FCNWeights]) -> None:
    """Write a rule table or FCN weights as YAML."""
    with open(path, "w") as f:
        yaml.safe_dump(controller_to_dict(obj), f, sort_keys=False)
    logger.info(f"Controller written to {path}")


def load_controller(path: str) -> Union[RuleTable, FCNWeights]:
    """Read a controller file written by save_controller."""
    return controller_from_dict(load_yaml(path))
