"""
Experiment definitions and execution

Experiments are declared in config/experiments.yaml.  Each one names its
environments, its learners and, optionally, a parameter sweep and a
post-processing step.  ``run_experiment`` executes every (environment,
learner, sweep value) cell over one shared seed list, so replicate i of every
cell uses the same seed, then summarises and compares the cells.
"""

import dataclasses
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..environment.reward_schedule import (
    EnvironmentSchedule,
    load_schedule,
    make_binary_reversal_schedule,
    make_reversal_schedule,
    schedule_from_dict,
)
from ..evolution.population import (
    ALG1_SLS,
    EvoParams,
    RunResult,
    replicate_seeds,
    run_alg1,
    run_competition,
    run_lifetime,
    run_replicates,
)
from ..learning.learners import SocialInfo
from ..replicator.replicator_model import (
    SLS_KINDS,
    basin_sweep,
    config_from_settings,
    integrate,
    payoff_from_schedule,
    sl_ratio_grid,
    trajectory_frame,
)
from ..strategies.meta_strategies import (
    ALL_META_KINDS,
    FCN_PARAMETERS,
    FCNWeights,
    MetaKind,
    MetaSettings,
    RuleTable,
    msl_ec_conf_unc,
    rule_table_from_dispatcher,
)
from ..uncertainty.odpu import (
    GroupSpec,
    binary_success_copy_probability,
    binomial_standard_error,
    odpu_quadrature,
)
from ..utils.config_validator import config_hash, load_yaml
from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger
from .statistics import CostLedger, StatsReport, compare_learners, pearson, spearman_trend, wilcoxon_rank_sum

logger = get_logger(__name__)

EXPERIMENTS_FILE = "experiments.yaml"
COMPETITION = "competition"
RANDOM_FCN = "random_fcn"
ENV_STREAM = 7
RANDOM_FCN_STREAM = 11
METRICS = ("cumulative_psi", "mean_psi", "cost", "post_change", "end_of_run", "dominant_age", "final_sl_ratio")

EnvSource = Union[str, Dict[str, Any]]


@dataclass
class ExperimentSpec:
    """
    One experiment.

    Attributes:
        name: Experiment name
        envs: Label -> environment file name or schedule mapping
        learners: SLS names, meta-strategy names, ``competition`` or
            ``random_fcn`` (SL-NE with fresh uniform weights per replicate)
        replicates: Runs per cell
        params: Simulation parameters shared by all cells
        metric: Summary column used for the learner comparison
        windows: Named evaluation windows (inclusive timestep ranges)
        sweep: Optional (EvoParams field, values)
        meta_set: Kinds competing in ``competition`` cells
        post: Name of a post-processing step
        replicator_only: Skip the agent-based runs
        extra: Free-form inputs of the post-processing step
    """
    name: str
    envs: Dict[str, EnvSource]
    learners: List[str]
    replicates: int
    params: EvoParams = field(default_factory=EvoParams)
    metric: str = "cumulative_psi"
    windows: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    sweep: Optional[Tuple[str, List[float]]] = None
    meta_set: List[str] = field(default_factory=lambda: [k.value for k in ALL_META_KINDS])
    post: Optional[str] = None
    replicator_only: bool = False
    description: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        """
        Raises:
            ConfigurationError: If the experiment is inconsistent
        """
        if not self.envs:
            raise ConfigurationError(f"{self.name}: no environments")
        if not self.learners:
            raise ConfigurationError(f"{self.name}: no learners")
        if self.replicates < 1:
            raise ConfigurationError(f"{self.name}: replicates must be >= 1")
        if self.metric not in METRICS:
            raise ConfigurationError(f"{self.name}: unknown metric {self.metric!r}; use one of {METRICS}")
        for learner in self.learners:
            if learner not in (COMPETITION, RANDOM_FCN) and learner not in ALG1_SLS:
                MetaKind.parse(learner)
        for label, (lo, hi) in self.windows.items():
            if lo < 0 or hi < lo:
                raise ConfigurationError(f"{self.name}: invalid window {label} = [{lo}, {hi}]")
        if self.sweep is not None:
            param, values = self.sweep
            if param not in {f.name for f in dataclasses.fields(EvoParams)}:
                raise ConfigurationError(f"{self.name}: cannot sweep {param!r}")
            if not values:
                raise ConfigurationError(f"{self.name}: empty sweep")
        if self.post is not None and self.post not in POST_PROCESSORS:
            raise ConfigurationError(f"{self.name}: unknown post-processing step {self.post!r}")

    def sweep_values(self) -> List[Optional[float]]:
        return list(self.sweep[1]) if self.sweep else [None]

    def params_for(self, value: Optional[float]) -> EvoParams:
        if value is None:
            return self.params
        param = self.sweep[0]
        kind = type(getattr(self.params, param))
        return self.params.replace(**{param: kind(value)})


@dataclass
class ExperimentResult:
    """
    Everything produced by one experiment.

    ``summary`` has one row per run (env, learner, sweep, seed and the METRICS
    columns); ``stats`` holds one StatsReport per environment and sweep value.
    """
    spec: ExperimentSpec
    seeds: List[int]
    runs: Dict[Tuple[str, str, Any], List[RunResult]]
    summary: pd.DataFrame
    stats: Dict[str, StatsReport]
    costs: Dict[str, CostLedger]
    trends: pd.DataFrame
    config_hash: str
    extras: Dict[str, pd.DataFrame] = field(default_factory=dict)
    scalars: Dict[str, float] = field(default_factory=dict)
    change_points: Dict[str, List[int]] = field(default_factory=dict)
    settings: Optional[MetaSettings] = None

    def samples(self, env: str, learner: str, metric: Optional[str] = None, sweep: Any = None) -> np.ndarray:
        metric = metric or self.spec.metric
        rows = self.summary[(self.summary.env == env) & (self.summary.learner == learner)]
        if sweep is not None:
            rows = rows[rows.sweep == sweep]
        return rows[metric].to_numpy()

    def mean_curve(self, env: str, learner: str, column: str = "psi", sweep: Any = None) -> pd.DataFrame:
        """Mean and std of a per-step column across replicates (columns t, mean, std)."""
        runs = self.runs[(env, learner, sweep)]
        stacked = np.vstack([run.frame[column].to_numpy() for run in runs])
        return pd.DataFrame({"t": runs[0].frame["t"].to_numpy(), "mean": stacked.mean(axis=0),
                             "std": stacked.std(axis=0)})


def resolve_env(source: EnvSource, rng: Optional[np.random.Generator] = None) -> EnvironmentSchedule:
    if isinstance(source, EnvironmentSchedule):
        return source
    if isinstance(source, dict):
        return schedule_from_dict(source, rng)
    return load_schedule(source, rng)


def env_rng(seed: int) -> np.random.Generator:
    """Generator for per-replicate environment draws, independent of the run stream."""
    return np.random.default_rng([seed, ENV_STREAM])


def random_fcn_weights(seed: int, activation: str = "tanh", low: float = -1.0, high: float = 1.0) -> FCNWeights:
    """Untrained network with uniform weights, drawn from the seed's own stream."""
    values = np.random.default_rng([seed, RANDOM_FCN_STREAM]).uniform(low, high, FCN_PARAMETERS)
    return dataclasses.replace(FCNWeights.from_flat(values, activation), trained=False)


def run_single(seed: int, learner: str, env_source: EnvSource, params: EvoParams,
               settings: MetaSettings, meta_set: Sequence[str]) -> RunResult:
    """One replicate of one learner; picklable entry point for run_replicates."""
    env = resolve_env(env_source, env_rng(seed))
    rng = np.random.default_rng(seed)
    if learner == COMPETITION:
        result = run_competition(meta_set, env, params, rng, settings, seed)
    elif learner in ALG1_SLS:
        result = run_alg1(learner, env, params, rng, seed)
    elif learner == RANDOM_FCN:
        activation = settings.fcn_weights.activation if settings.fcn_weights is not None else "tanh"
        random_settings = dataclasses.replace(settings, fcn_weights=random_fcn_weights(seed, activation))
        result = run_lifetime(MetaKind.SL_NE, env, params, rng, random_settings, seed)
    else:
        result = run_lifetime(learner, env, params, rng, settings, seed)
    result.metadata["learner"] = learner
    result.metadata["change_points"] = list(env.change_log().change_points)
    return result


def dominant_age(result: RunResult) -> float:
    """Mean age of the kind with the highest final ratio (NaN outside competition runs)."""
    ratios = result.ratio_columns()
    if not ratios:
        return float("nan")
    final = result.frame.iloc[-1]
    top = max(ratios, key=lambda c: final[c])
    return float(final[top.replace("ratio:", "age:", 1)])


def summarise_run(result: RunResult, windows: Dict[str, Tuple[int, int]]) -> Dict[str, Any]:
    horizon = int(result.frame["t"].iloc[-1])
    row = {
        "seed": result.seed,
        "cumulative_psi": result.cumulative_psi,
        "mean_psi": float(result.psi.mean()),
        "cost": result.exploration_cost,
        "dominant_age": dominant_age(result),
        "final_sl_ratio": float(result.frame["sl_ratio"].iloc[-1]) if "sl_ratio" in result.frame else np.nan,
    }
    for label in ("post_change", "end_of_run"):
        lo, hi = windows.get(label, (horizon, horizon))
        row[label] = result.window_mean(lo, min(hi, horizon)) if lo <= horizon else np.nan
    for label, (lo, hi) in windows.items():
        if label not in row:
            row[label] = result.window_mean(lo, min(hi, horizon)) if lo <= horizon else np.nan
    return row


def _stats_key(env: str, spec: ExperimentSpec, value: Any) -> str:
    return env if value is None else f"{env}|{spec.sweep[0]}={value}"


def controller_provenance(learners: Sequence[str], settings: MetaSettings) -> Dict[str, Dict[str, Any]]:
    """Whether the SL-GA / SL-NE controllers used by ``learners`` were trained."""
    used = {MetaKind.parse(x).value for x in learners if x not in (COMPETITION, RANDOM_FCN) and x not in ALG1_SLS}
    if COMPETITION in learners:
        used |= {MetaKind.SL_GA.value, MetaKind.SL_NE.value}
    provenance = {}
    for kind, controller in ((MetaKind.SL_GA, settings.rule_table), (MetaKind.SL_NE, settings.fcn_weights)):
        if kind.value in used and controller is not None:
            provenance[kind.value] = {"trained": bool(controller.trained)}
    return provenance


def run_experiment(spec: ExperimentSpec, settings: Optional[MetaSettings] = None, seed: int = 0,
                   workers: int = 1, config: Optional[Dict] = None, alpha: float = 0.05) -> ExperimentResult:
    """
    Execute every cell of an experiment.

    Args:
        spec: Experiment definition
        settings: Controller settings of meta-strategy learners
        seed: Root seed of the replicate seed list
        workers: Process pool size for replicates
        config: Merged configuration (replicator settings, hashing)
        alpha: Significance level of the Nemenyi analysis

    Raises:
        ConfigurationError: If the experiment is inconsistent
    """
    spec.validate()
    config = config or {}
    settings = settings or MetaSettings()
    seeds = replicate_seeds(seed, spec.replicates)
    for kind, info in controller_provenance(spec.learners, settings).items():
        if not info["trained"]:
            logger.warning(f"{spec.name}: {kind} runs with an untrained reference controller")
    runs: Dict[Tuple[str, str, Any], List[RunResult]] = {}
    rows = []
    stats: Dict[str, StatsReport] = {}
    costs: Dict[str, CostLedger] = {}
    change_points: Dict[str, List[int]] = {}

    if not spec.replicator_only:
        for env_label, source in spec.envs.items():
            for value in spec.sweep_values():
                params = spec.params_for(value)
                key = _stats_key(env_label, spec, value)
                ledger = costs.setdefault(key, CostLedger())
                samples = {}
                for learner in spec.learners:
                    fn = partial(run_single, learner=learner, env_source=source, params=params,
                                 settings=settings, meta_set=spec.meta_set)
                    results = run_replicates(fn, seeds, workers)
                    runs[(env_label, learner, value)] = results
                    for result in results:
                        row = {"env": env_label, "learner": learner, "sweep": value}
                        row.update(summarise_run(result, spec.windows))
                        rows.append(row)
                        ledger.add(learner, result.frame["cost"].to_numpy())
                    change_points.setdefault(env_label, results[0].metadata["change_points"])
                    samples[learner] = [r[spec.metric] for r in rows[-len(results):]]
                    logger.info(f"{spec.name}: {env_label} / {learner}"
                                f"{'' if value is None else f' / {spec.sweep[0]}={value}'} "
                                f"mean {spec.metric}={np.nanmean(samples[learner]):.4f}")
                stats[key] = compare_learners(samples, spec.metric, alpha)

    summary = pd.DataFrame(rows, columns=["env", "learner", "sweep", "seed"] + list(METRICS)
                           + [w for w in spec.windows if w not in METRICS])
    result = ExperimentResult(spec, seeds, runs, summary, stats, costs, sweep_trends(spec, summary),
                              config_hash(config) if config else "", change_points=change_points,
                              settings=settings)
    if spec.post:
        POST_PROCESSORS[spec.post](spec, result, config)
    return result


def sweep_trends(spec: ExperimentSpec, summary: pd.DataFrame) -> pd.DataFrame:
    """Spearman trend of every metric in the swept parameter, per env and learner."""
    columns = ["env", "learner", "param", "metric", "rho", "p"]
    if spec.sweep is None or summary.empty:
        return pd.DataFrame(columns=columns)
    rows = []
    for (env, learner), group in summary.groupby(["env", "learner"], sort=False):
        for metric in ("mean_psi", "cumulative_psi", "end_of_run", "dominant_age"):
            values = group[[metric, "sweep"]].dropna()
            if len(values) < 3:
                continue
            rho, p = spearman_trend(values["sweep"], values[metric])
            rows.append({"env": env, "learner": learner, "param": spec.sweep[0], "metric": metric,
                         "rho": rho, "p": p})
    return pd.DataFrame(rows, columns=columns)


# ---------------------------------------------------------------------------
# Post-processing steps
# ---------------------------------------------------------------------------

def post_odpu_correlation(spec: ExperimentSpec, result: ExperimentResult, config: Dict) -> None:
    """Pearson r between grid-point ODPU and the conformist minus success-based score."""
    rows = []
    for label, value in spec.extra["odpu"].items():
        diff = (np.mean(result.samples(label, "conformist"))
                - np.mean(result.samples(label, "success")))
        rows.append({"env": label, "odpu": value, "difference": float(diff)})
    frame = pd.DataFrame(rows)
    result.extras["odpu_correlation"] = frame
    if len(frame) >= 3:
        r, p = pearson(frame["odpu"], frame["difference"])
        result.scalars.update({"pearson_r": r, "pearson_p": p})
        logger.info(f"ODPU correlation r={r:.4f} (p={p:.2e}) over {len(frame)} grid points")


def _dip(t: np.ndarray, sl: np.ndarray, at: float) -> float:
    """Lowest SL ratio after ``at`` minus the ratio at ``at``."""
    after = t >= at
    if not after.any():
        return 0.0
    return float(sl[after].min() - np.interp(at, t, sl))


def post_replicator_agreement(spec: ExperimentSpec, result: ExperimentResult, config: Dict) -> None:
    """Compare terminal and post-reversal social learner ratios of the ODE and the agents."""
    env_label = next(iter(spec.envs))
    env = resolve_env(spec.envs[env_label])
    reversal = float(env.change_log().change_points[0]) if env.change_log().change_points else 0.0
    dt = float(config.get("replicator", {}).get("dt", 0.1))
    payoff = payoff_from_schedule(env)
    rows = []
    for sls in [s for s in spec.learners if s in SLS_KINDS]:
        for value in spec.sweep_values():
            tau = value if spec.sweep and spec.sweep[0] == "tau" else spec.params.tau
            traj = integrate(config_from_settings(config, sls, payoff, tau=tau,
                                                  epsilon=spec.params.epsilon), env.horizon, dt)
            result.extras[f"ode:{sls}:tau={tau}"] = trajectory_frame(traj)
            curve = result.mean_curve(env_label, sls, "sl_ratio", value)
            ode_terminal = float(2 * traj.sl[-1] - 1)
            ea_terminal = float(2 * curve["mean"].iloc[-1] - 1)
            ode_dip = _dip(traj.t, traj.sl, reversal)
            ea_dip = _dip(curve["t"].to_numpy(dtype=float), curve["mean"].to_numpy(), reversal)
            rows.append({
                "sls": sls, "tau": tau,
                "ode_terminal": ode_terminal, "ea_terminal": ea_terminal,
                "terminal_agree": bool(np.sign(ode_terminal) == np.sign(ea_terminal)),
                "ode_dip": ode_dip, "ea_dip": ea_dip,
                "dip_agree": bool(np.sign(ode_dip) == np.sign(ea_dip)),
                "max_simplex_drift": traj.max_simplex_drift(),
            })
    result.extras["replicator_agreement"] = pd.DataFrame(rows)


def binary_copy_frequency(mu1: float, mu2: float, n: int, m: int, trials: int,
                          rng: np.random.Generator) -> Tuple[float, float]:
    """
    Share of success-based copies that pick arm 0 in a frozen population of
    n agents on arm 0 (Bernoulli mu1) and m agents on arm 1 (Bernoulli mu2).

    Trials in which nobody succeeds are skipped.

    Returns:
        (observed frequency, number of counted trials)
    """
    actions = np.array([0] * n + [1] * m)
    hits = 0
    counted = 0
    for _ in range(trials):
        # Shuffled ids make the lowest-id tie-break a uniform pick among successful agents
        order = rng.permutation(actions)
        rewards = (rng.random(order.size) < np.where(order == 0, mu1, mu2)).astype(float)
        if not rewards.any():
            continue
        info = SocialInfo.from_actions(1, order, rewards, 2)
        hits += int(info.actions[int(np.argmax(info.rewards))] == 0)
        counted += 1
    return (hits / counted if counted else float("nan")), counted


def post_binary_rewards(spec: ExperimentSpec, result: ExperimentResult, config: Dict) -> None:
    """Frozen-population copy frequencies against mu1 N / (mu1 N + mu2 M)."""
    rng = np.random.default_rng(result.seeds[0])
    n = m = spec.params.m // 2
    rows = []
    for label, (mu1, mu2) in spec.extra.get("binary_pairs", {}).items():
        expected = binary_success_copy_probability(mu1, mu2, n, m)
        observed, counted = binary_copy_frequency(mu1, mu2, n, m, int(spec.extra.get("copy_trials", 20000)), rng)
        se = binomial_standard_error(expected, counted)
        gap = float(np.mean(result.samples(label, "conformist")) - np.mean(result.samples(label, "success"))) \
            if label in spec.envs and not spec.replicator_only else float("nan")
        rows.append({"env": label, "mu1": mu1, "mu2": mu2, "expected": expected, "observed": observed,
                     "se": se, "within_3se": bool(abs(observed - expected) <= 3 * se),
                     "conformist_advantage": gap})
    result.extras["binary_rewards"] = pd.DataFrame(rows)


def post_basin_sweep(spec: ExperimentSpec, result: ExperimentResult, config: Dict) -> None:
    """Terminal mean-field states from a grid of initial social learner ratios."""
    env = resolve_env(next(iter(spec.envs.values())))
    section = config.get("replicator", {})
    grid = sl_ratio_grid(section.get("basin_ratios", (0.1, 0.3, 0.5, 0.7, 0.9)))
    payoff = payoff_from_schedule(env)
    for sls in [s for s in spec.learners if s in SLS_KINDS]:
        model = config_from_settings(config, sls, payoff, tau=spec.params.tau, epsilon=spec.params.epsilon)
        _, summary = basin_sweep(model, grid, env.horizon, float(section.get("dt", 0.1)))
        result.extras[f"basin:{sls}"] = summary


def rule_table_agreement(table: RuleTable) -> pd.DataFrame:
    """Per context state, the table's strategy against the SL-EC-Conf-Unc dispatch."""
    reference = rule_table_from_dispatcher(msl_ec_conf_unc)
    return pd.DataFrame({
        "state": np.arange(8),
        "table": [r.label for r in table.rules],
        "reference": [r.label for r in reference.rules],
        "match": [a == b for a, b in zip(table.rules, reference.rules)],
    })


def paired_win_share(a: np.ndarray, b: np.ndarray) -> float:
    """Share of replicates (same seeds) in which ``a`` scores strictly above ``b``."""
    if len(a) != len(b) or not len(a):
        raise ConfigurationError("win share needs two paired, non-empty samples")
    return float(np.mean(np.asarray(a) > np.asarray(b)))


def post_training_evaluation(spec: ExperimentSpec, result: ExperimentResult, config: Dict) -> None:
    """
    Trained controllers on environments they were not trained on.

    SL-NE is compared with random-weight networks (rank-sum on the metric)
    and paired with SL-EC-Conf-Unc for a win share; SL-GA is compared with
    SL-EC-Conf-Unc, where a p-value above alpha means indistinguishable.
    """
    alpha = float(config.get("harness", {}).get("alpha", 0.05))
    reference = MetaKind.SL_EC_CONF_UNC.value
    ne, ga = MetaKind.SL_NE.value, MetaKind.SL_GA.value
    rows = []
    for env in spec.envs:
        present = set(result.summary.loc[result.summary["env"] == env, "learner"])
        if ne in present and RANDOM_FCN in present:
            trained, baseline = result.samples(env, ne), result.samples(env, RANDOM_FCN)
            p = wilcoxon_rank_sum(trained, baseline)
            rows.append({"env": env, "controller": ne, "baseline": RANDOM_FCN,
                         "controller_median": float(np.median(trained)), "baseline_median": float(np.median(baseline)),
                         "p": p, "win_share": paired_win_share(trained, baseline),
                         "outcome": "better" if p < alpha and np.median(trained) > np.median(baseline) else "not better"})
        for kind in (ne, ga):
            if kind in present and reference in present:
                trained, baseline = result.samples(env, kind), result.samples(env, reference)
                p = wilcoxon_rank_sum(trained, baseline)
                rows.append({"env": env, "controller": kind, "baseline": reference,
                             "controller_median": float(np.median(trained)),
                             "baseline_median": float(np.median(baseline)),
                             "p": p, "win_share": paired_win_share(trained, baseline),
                             "outcome": "indistinguishable" if p >= alpha else "different"})
    frame = pd.DataFrame(rows, columns=["env", "controller", "baseline", "controller_median", "baseline_median",
                                        "p", "win_share", "outcome"])
    result.extras["training_evaluation"] = frame

    versus_random = frame[frame["baseline"] == RANDOM_FCN]
    if not versus_random.empty:
        result.scalars["fcn_better_than_random_envs"] = float((versus_random["outcome"] == "better").sum())
    gradual = frame[(frame["env"] == spec.extra.get("gradual_env", "gradual")) & (frame["controller"] == ne)
                    & (frame["baseline"] == reference)]
    if not gradual.empty:
        result.scalars["ne_gradual_win_share"] = float(gradual["win_share"].iloc[0])
    table = result.settings.rule_table if result.settings is not None else None
    if table is not None and ga in spec.learners:
        states = rule_table_agreement(table)
        result.extras["rule_table_states"] = states
        result.scalars["rule_states_matched"] = float(states["match"].sum())
    logger.info(f"Training evaluation over {len(spec.envs)} held-out environment(s): "
                + ", ".join(f"{k}={v:.3f}" for k, v in sorted(result.scalars.items())))


POST_PROCESSORS: Dict[str, Callable[[ExperimentSpec, ExperimentResult, Dict], None]] = {
    "odpu_correlation": post_odpu_correlation,
    "replicator_agreement": post_replicator_agreement,
    "binary_rewards": post_binary_rewards,
    "basin_sweep": post_basin_sweep,
    "training_evaluation": post_training_evaluation,
}


# ---------------------------------------------------------------------------
# Experiment catalogue
# ---------------------------------------------------------------------------

def load_experiments(path: str = EXPERIMENTS_FILE) -> Dict[str, Dict[str, Any]]:
    return load_yaml(path).get("experiments", {})


def list_experiments(path: str = EXPERIMENTS_FILE) -> List[str]:
    return list(load_experiments(path))


def _grid_envs(grid: Dict[str, Any]) -> Tuple[Dict[str, EnvSource], Dict[str, float]]:
    mu_opt, mu_sub = grid.get("mu", (1.0, 0.4))
    horizon = int(grid.get("horizon", 400))
    split = tuple(grid.get("split", (50, 50)))
    envs, odpu = {}, {}
    for s_opt in grid["sigma_opt"]:
        for s_sub in grid["sigma_sub"]:
            label = f"sopt={s_opt:g},ssub={s_sub:g}"
            envs[label] = make_reversal_schedule(mu_opt, s_opt, mu_sub, s_sub, horizon, label).to_dict()
            odpu[label] = odpu_quadrature(GroupSpec.from_arrays((mu_opt, mu_sub), (s_opt, s_sub), split))
    return envs, odpu


def build_experiment(name: str, config: Dict, replicates: Optional[int] = None, m: Optional[int] = None,
                     desk: bool = False, path: str = EXPERIMENTS_FILE,
                     envs: Optional[Dict[str, EnvSource]] = None) -> ExperimentSpec:
    """
    ExperimentSpec of a named experiment.

    Args:
        name: Key under ``experiments`` in the catalogue
        config: Merged configuration
        replicates: Override of the replicate count
        m: Override of the population size
        desk: Use the desk-scale preset (harness.desk_replicates, harness.desk_m)
        envs: Replace the environments of the experiment

    Raises:
        ConfigurationError: If the experiment is unknown or invalid
    """
    catalogue = load_experiments(path)
    if name not in catalogue:
        raise ConfigurationError(f"Unknown experiment {name!r}. Available: {', '.join(catalogue)}")
    entry = catalogue[name]
    harness = config.get("harness", {})
    competition = bool(entry.get("competition", False))

    if replicates is None:
        replicates = entry.get("replicates") or harness.get("replicates", 112)
        if desk:
            replicates = min(replicates, int(harness.get("desk_replicates", 24)))
    if m is None:
        default_m = config.get("evolution", {}).get("competition_m" if competition else "m",
                                                     5000 if competition else 100)
        m = int(entry.get("m") or default_m)
        if desk:
            m = min(m, int(harness.get("desk_m", 1000)))

    extra: Dict[str, Any] = {}
    spec_envs: Dict[str, EnvSource] = dict(entry.get("envs", {}))
    if "grid" in entry:
        spec_envs, extra["odpu"] = _grid_envs(entry["grid"])
    if "binary_pairs" in entry:
        horizon = int(entry.get("horizon", 400))
        extra["binary_pairs"] = {}
        for mu1, mu2 in entry["binary_pairs"]:
            label = f"binary_{mu1:g}_{mu2:g}"
            spec_envs[label] = make_binary_reversal_schedule(mu1, mu2, horizon, label).to_dict()
            extra["binary_pairs"][label] = (float(mu1), float(mu2))
    if "gradual_env" in entry:
        extra["gradual_env"] = str(entry["gradual_env"])
    if envs:
        spec_envs = dict(envs)

    sweep = None
    if entry.get("sweep"):
        sweep = (entry["sweep"]["param"], list(entry["sweep"]["values"]))

    windows = {label: (int(lo), int(hi)) for label, (lo, hi) in harness.get("windows", {}).items()}
    spec = ExperimentSpec(
        name=name,
        envs=spec_envs,
        learners=list(entry.get("learners", [])),
        replicates=int(replicates),
        params=EvoParams.from_config(config, competition=competition, m=int(m)),
        metric=entry.get("metric", "cumulative_psi"),
        windows=windows,
        sweep=sweep,
        meta_set=list(entry.get("meta_set", [k.value for k in ALL_META_KINDS])),
        post=entry.get("post"),
        replicator_only=bool(entry.get("replicator_only", False)),
        description=entry.get("description", ""),
        extra=extra,
    )
    spec.validate()
    return spec
