"""
High-level API for meta-social-learning

This module provides an object-oriented interface over the simulation engine:
named experiments, ad-hoc learner comparisons and sweeps, the meta-strategy
competition, controller training, the mean-field model and ODPU evaluation.
"""

import dataclasses
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .environment.reward_schedule import EnvironmentSchedule
from .evolution.population import ALG1_SLS, EvoParams
from .harness.experiments import (
    COMPETITION,
    RANDOM_FCN,
    ExperimentResult,
    ExperimentSpec,
    build_experiment,
    env_rng,
    list_experiments,
    resolve_env,
    run_experiment,
)
from .harness.reporting import emit_report, load_report_data, render_report
from .optimizers.differential_evolution import DeConfig, de_train
from .optimizers.fitness import FCN_SPACE, check_space, space_meta_kind
from .optimizers.genetic_algorithm import GaConfig, TrainingResult, best_of_runs, ga_train
from .replicator.replicator_model import (
    SLS_KINDS,
    Trajectory,
    config_from_settings,
    find_stationary_point,
    integrate,
    payoff_from_schedule,
    trajectory_frame,
)
from .strategies.meta_strategies import (
    ALL_META_KINDS,
    FCNWeights,
    MetaKind,
    MetaSettings,
    RuleTable,
    load_controller,
    save_controller,
)
from .uncertainty.odpu import GroupSpec, binomial_standard_error, odpu_grid, odpu_monte_carlo, odpu_quadrature
from .utils.config_validator import (
    ValidationResult,
    config_hash,
    load_config,
    require_valid,
    validate_output_directory,
    validate_parameters,
)
from .utils.errors import ConfigurationError, NumericError
from .utils.logging_config import get_logger, log_duration, setup_logging
from .utils.run_audit import RunAuditLogger

logger = get_logger(__name__)

TRAINING_ENV = "training"
TRAINING_EVALUATION = "training_evaluation"
TRAINING_ALGORITHMS = ("ga", "de")
SIMPLEX_DRIFT_LIMIT = 1e-6


class SocialLearningLab:
    """
    High-level interface for social learning simulations.

    The lab holds one merged configuration and remembers the last experiment,
    training run and trajectory it produced.

    Example:
        >>> SocialLearningLab.setup_logging(level="INFO")
        >>> lab = SocialLearningLab()
        >>> result = lab.run_experiment("uncertainty_invariance", desk=True)
        >>> result.stats["reversal_high"].p_value("success", "conformist")
    """

    def __init__(self, config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                 audit_log_file: Optional[str] = None, controller_path: Optional[str] = None):
        """
        Initialize the lab.

        Args:
            config_path: Optional user YAML merged over the packaged defaults
            overrides: Optional nested dictionary applied last
            audit_log_file: Optional path for audit logging
            controller_path: Optional trained controller (rule table or FCN
                weights) used by SL-GA or SL-NE agents

        Raises:
            ConfigurationError: If the merged configuration is invalid
        """
        self.config = load_config(config_path, overrides)
        validation = self.validate_config()
        for warning in validation.warnings:
            logger.warning(f"Configuration warning: {warning}")
        require_valid(validation)

        self.controller: Optional[Any] = None
        if controller_path:
            self.controller = load_controller(controller_path)
            logger.info(f"Loaded controller from {controller_path}")

        self.last_result: Optional[ExperimentResult] = None
        self.last_training: Optional[TrainingResult] = None
        self.last_trajectory: Optional[Trajectory] = None
        self.last_output_files: List[str] = []

        if audit_log_file:
            self.audit_logger = RunAuditLogger(audit_log_file)
            logger.info(f"Audit logging enabled: {audit_log_file}")
        else:
            self.audit_logger = None

        logger.info(f"SocialLearningLab initialized (config {self.config_hash})")

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def validate_config(self) -> ValidationResult:
        return validate_parameters(self.config)

    def settings(self) -> MetaSettings:
        """Controller settings; a loaded controller replaces the configured one of its kind."""
        rule_table = self.controller if isinstance(self.controller, RuleTable) else None
        fcn_weights = self.controller if isinstance(self.controller, FCNWeights) else None
        return MetaSettings.from_config(self.config, rule_table, fcn_weights)

    def load_environment(self, env: str, seed: int = 0) -> EnvironmentSchedule:
        """Environment by file path or packaged name; random schedules draw from the seed's env stream."""
        return resolve_env(env, env_rng(seed))

    def list_experiments(self) -> List[str]:
        return list_experiments()

    def _harness(self, key: str, default: Any) -> Any:
        return self.config.get("harness", {}).get(key, default)

    def _execute(self, spec: ExperimentSpec, seed: int, workers: Optional[int],
                 output_dir: Optional[str], settings: Optional[MetaSettings] = None) -> ExperimentResult:
        if output_dir:
            require_valid(validate_output_directory(output_dir), "Output directory")

        workers = int(workers or self._harness("workers", 1))
        digest = self.config_hash
        logger.info(f"Running {spec.name}: {len(spec.envs)} environment(s), {len(spec.learners)} learner(s), "
                    f"{spec.replicates} replicate(s), m={spec.params.m}")
        if self.audit_logger:
            self.audit_logger.log_run_start(spec.name, digest, [seed])

        try:
            with log_duration(logger, spec.name):
                result = run_experiment(spec, settings or self.settings(), seed, workers, self.config,
                                        float(self._harness("alpha", 0.05)))
        except (ConfigurationError, NumericError) as e:
            if self.audit_logger:
                self.audit_logger.log_run_failure(spec.name, str(e))
            raise

        if self.audit_logger:
            self.audit_logger.log_run_complete(spec.name, digest, spec.replicates)
        self.last_result = result

        if output_dir:
            self.last_output_files = self.emit_report(output_dir, result)
        logger.info(f"{spec.name} complete")
        return result

    def run_experiment(self, name: str, seed: int = 0, replicates: Optional[int] = None, m: Optional[int] = None,
                       desk: bool = False, workers: Optional[int] = None, envs: Optional[Sequence[str]] = None,
                       output_dir: Optional[str] = None) -> ExperimentResult:
        """
        Run a named experiment from the catalogue.

        Args:
            name: Experiment name (see ``list_experiments``)
            seed: Root seed of the replicate seed list
            replicates: Override of the replicate count
            m: Override of the population size
            desk: Use the desk-scale preset
            workers: Process pool size (defaults to harness.workers)
            envs: Replace the experiment's environments by these files
            output_dir: Write the report here when given

        Returns:
            ExperimentResult

        Raises:
            ConfigurationError: If the experiment or the overrides are invalid
        """
        env_map = {os.path.splitext(os.path.basename(e))[0]: e for e in envs} if envs else None
        spec = build_experiment(name, self.config, replicates, m, desk, envs=env_map)
        return self._execute(spec, seed, workers, output_dir)

    def compare(self, learners: Sequence[str], env: str, seed: int = 0, replicates: Optional[int] = None,
                m: Optional[int] = None, metric: str = "cumulative_psi", workers: Optional[int] = None,
                output_dir: Optional[str] = None, sweep: Optional[tuple] = None,
                name: Optional[str] = None) -> ExperimentResult:
        """
        Compare learners on one environment without a catalogue entry.

        Learners are SLS names, meta-strategy names or ``competition``.
        """
        competition = COMPETITION in learners
        windows = {label: (int(lo), int(hi)) for label, (lo, hi) in self._harness("windows", {}).items()}
        spec = ExperimentSpec(
            name=name or "compare",
            envs={os.path.splitext(os.path.basename(env))[0]: env},
            learners=list(learners),
            replicates=int(replicates or self._harness("replicates", 112)),
            params=EvoParams.from_config(self.config, competition=competition, m=m),
            metric=metric,
            windows=windows,
            sweep=sweep,
        )
        return self._execute(spec, seed, workers, output_dir)

    def sweep(self, param: str, values: Sequence[float], learners: Sequence[str], env: str,
              seed: int = 0, replicates: Optional[int] = None, m: Optional[int] = None,
              metric: str = "mean_psi", workers: Optional[int] = None,
              output_dir: Optional[str] = None) -> ExperimentResult:
        """
        Sweep one simulation parameter (an EvoParams field such as mr, s or tau).

        The result's ``trends`` table carries the Spearman trend of every
        metric in the swept parameter.
        """
        if not values:
            raise ConfigurationError("Sweep needs at least one value")
        return self.compare(learners, env, seed, replicates, m, metric, workers, output_dir,
                            sweep=(param, [float(v) for v in values]), name=f"sweep_{param}")

    def evolve_meta(self, env: Optional[str] = None, seed: int = 0, replicates: Optional[int] = None,
                    m: Optional[int] = None, desk: bool = False, meta_set: Optional[Sequence[str]] = None,
                    workers: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentResult:
        """Evolutionary competition among meta-strategies (all thirteen by default)."""
        spec = build_experiment(COMPETITION, self.config, replicates, m, desk,
                                envs={os.path.splitext(os.path.basename(env))[0]: env} if env else None)
        if meta_set:
            spec.meta_set = list(meta_set)
        return self._execute(spec, seed, workers, output_dir)

    def train(self, space: str, algo: str = "ga", env: str = TRAINING_ENV, runs: Optional[int] = None,
              seed: int = 0, replicates: Optional[int] = None, m: Optional[int] = None,
              workers: Optional[int] = None, output_dir: Optional[str] = None,
              max_generations: Optional[int] = None) -> TrainingResult:
        """
        Train an SL-GA rule table or SL-NE network and keep the best of ``runs``
        independent runs.

        All runs score candidates on the same fitness seed set; run ``i`` drives
        its operators from its own generator.

        Args:
            space: ``rule`` or ``fcn``
            algo: ``ga`` or ``de`` (DE only trains networks)
            env: Training environment
            runs: Independent runs (defaults to optimizers.runs)
            output_dir: Write ``<kind>_<algo>.yaml`` and ``<kind>_<algo>_trace.csv`` here

        Returns:
            TrainingResult merged over the runs
        """
        check_space(space)
        if algo not in TRAINING_ALGORITHMS:
            raise ConfigurationError(f"Unknown training algorithm {algo!r}. Use one of {TRAINING_ALGORITHMS}")
        if algo == "de" and space != FCN_SPACE:
            raise ConfigurationError("Differential evolution trains network weights only (space fcn)")
        if output_dir:
            require_valid(validate_output_directory(output_dir), "Output directory")

        section = self.config.get("optimizers", {})
        runs = int(runs or section.get("runs", 10))
        replicates = int(replicates or section.get("replicates", 24))
        params = EvoParams.from_config(self.config, m=int(m or section.get("m", 100)))
        activation = self.config.get("meta", {}).get("fcn_activation", "tanh")
        workers = int(workers or self._harness("workers", 1))
        train_env = self.load_environment(env, seed)
        settings = self.settings()

        logger.info(f"Training {space} controller with {algo.upper()}: {runs} run(s) on {train_env.name or env}")
        results = []
        for run in range(runs):
            rng = np.random.default_rng([seed, run])
            with log_duration(logger, f"{space} training run {run + 1}/{runs}"):
                if algo == "ga":
                    config = GaConfig.for_space(space, self.config)
                    if max_generations:
                        config = dataclasses.replace(config, max_generations=int(max_generations))
                    result = ga_train(space, config, train_env, rng, params, replicates, seed, settings,
                                      workers, activation)
                else:
                    config = DeConfig.from_config(self.config)
                    if max_generations:
                        config = dataclasses.replace(config, max_generations=int(max_generations))
                    result = de_train(config, train_env, rng, params, replicates, seed, settings, workers,
                                      activation)
            generations = int(result.trace["generation"].max())
            logger.info(f"Run {run + 1}/{runs}: best fitness {result.best_fitness:.4f} after {generations} generations")
            if self.audit_logger:
                self.audit_logger.log_training(space, algo, run, result.best_fitness, generations)
            results.append(result)

        merged = best_of_runs(results)
        self.last_training = merged

        if output_dir:
            os.makedirs(output_dir, exist_ok=True)
            stem = f"{space_meta_kind(space).value.lower()}_{algo}"
            controller_path = os.path.join(output_dir, f"{stem}.yaml")
            trace_path = os.path.join(output_dir, f"{stem}_trace.csv")
            save_controller(controller_path, merged.controller())
            merged.trace.to_csv(trace_path, index=False, float_format="%.6f", lineterminator="\n")
            self.last_output_files = [controller_path, trace_path]
            logger.info(f"Controller saved to {controller_path}")
        return merged

    def evaluate_training(self, training: Optional[TrainingResult] = None, seed: int = 0,
                          replicates: Optional[int] = None, m: Optional[int] = None, desk: bool = False,
                          workers: Optional[int] = None, output_dir: Optional[str] = None) -> ExperimentResult:
        """
        Evaluate controllers on the held-out environments of ``training_evaluation``.

        With ``training`` (defaults to the last training run) only its
        controller kind is evaluated: an SL-NE network against random-weight
        networks and SL-EC-Conf-Unc, or an SL-GA table against SL-EC-Conf-Unc.
        Without any training result the configured controllers are evaluated.

        Returns:
            ExperimentResult whose ``extras["training_evaluation"]`` holds the
            comparisons and whose ``scalars`` hold the summary values
        """
        training = training or self.last_training
        spec = build_experiment(TRAINING_EVALUATION, self.config, replicates, m, desk)
        settings = self.settings()
        if training is not None:
            controller = training.controller()
            if training.space == FCN_SPACE:
                settings = dataclasses.replace(settings, fcn_weights=controller)
                spec.learners = [MetaKind.SL_NE.value, RANDOM_FCN, MetaKind.SL_EC_CONF_UNC.value]
            else:
                settings = dataclasses.replace(settings, rule_table=controller)
                spec.learners = [MetaKind.SL_GA.value, MetaKind.SL_EC_CONF_UNC.value]
            logger.info(f"Evaluating trained {space_meta_kind(training.space).value} controller "
                        f"({training.algorithm.upper()}, fitness {training.best_fitness:.4f})")
        return self._execute(spec, seed, workers, output_dir, settings)

    def replicator(self, sls: str, env: str, tau: Optional[float] = None, epsilon: Optional[float] = None,
                   horizon: Optional[float] = None, dt: Optional[float] = None,
                   output_path: Optional[str] = None) -> Trajectory:
        """
        Integrate the mean-field replicator-mutator model on an environment.

        Raises:
            ConfigurationError: If ``sls`` is unknown
            NumericError: If the state leaves the simplex or becomes non-finite
        """
        if sls not in SLS_KINDS:
            raise ConfigurationError(f"Unknown social learning strategy {sls!r}. Use one of {SLS_KINDS}")
        schedule = self.load_environment(env)
        config = config_from_settings(self.config, sls, payoff_from_schedule(schedule), tau, epsilon)
        dt = float(dt or self.config.get("replicator", {}).get("dt", 0.1))
        horizon = float(horizon or schedule.horizon)

        logger.info(f"Integrating {sls} model on {schedule.name or env}: horizon {horizon}, dt {dt}, tau {config.tau}")
        trajectory = integrate(config, horizon, dt)
        drift = trajectory.max_simplex_drift()
        if drift > SIMPLEX_DRIFT_LIMIT:
            raise NumericError(f"Simplex drift {drift:.2e} exceeds {SIMPLEX_DRIFT_LIMIT:g}")
        logger.info(f"Terminal state a1={trajectory.a1[-1]:.4f} a2={trajectory.a2[-1]:.4f} sl={trajectory.sl[-1]:.4f}")
        self.last_trajectory = trajectory

        if output_path:
            directory = os.path.dirname(output_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            trajectory_frame(trajectory).to_csv(output_path, index=False, float_format="%.6f", lineterminator="\n")
            self.last_output_files = [output_path]
        return trajectory

    def stationary_point(self, sls: str, env: str, t: float = 0.0, tau: Optional[float] = None) -> np.ndarray:
        """Fixed point of the mean-field model with the payoffs frozen at time t."""
        schedule = self.load_environment(env)
        config = config_from_settings(self.config, sls, payoff_from_schedule(schedule), tau)
        return find_stationary_point(config, t)

    def odpu(self, mu: Sequence[float], sigma: Sequence[float], n: Sequence[int], mc_trials: int = 0,
             seed: int = 0) -> Dict[str, float]:
        """
        ODPU of a set of groups; index 0 must be the optimal arm.

        Returns:
            ``odpu`` (quadrature) and, with ``mc_trials`` > 0, ``monte_carlo``,
            ``standard_error`` and ``agree`` (within three standard errors)
        """
        spec = GroupSpec.from_arrays(mu, sigma, n)
        if max(g.mu for g in spec.groups) != spec.groups[0].mu:
            raise ConfigurationError("the first group must have the highest mean")
        result: Dict[str, float] = {"odpu": odpu_quadrature(spec)}
        if mc_trials > 0:
            estimate = odpu_monte_carlo(spec, mc_trials, np.random.default_rng(seed))
            se = binomial_standard_error(result["odpu"], mc_trials)
            result.update(monte_carlo=estimate, standard_error=se,
                          agree=float(abs(estimate - result["odpu"]) <= 3 * se + 1e-12))
        logger.info(f"ODPU = {result['odpu']:.6f}")
        return result

    def odpu_heatmap(self, mu: Sequence[float], sigma_opt: Sequence[float], sigma_sub: Sequence[float],
                     n: Sequence[int], output_path: Optional[str] = None) -> pd.DataFrame:
        """ODPU over a (sigma_opt, sigma_sub) grid as a long table."""
        if len(mu) != 2 or len(n) != 2:
            raise ConfigurationError("heat maps need exactly two groups")
        grid = odpu_grid((float(mu[0]), float(mu[1])), sigma_opt, sigma_sub, int(n[0]), int(n[1]))
        frame = pd.DataFrame([{"sigma_opt": s_opt, "sigma_sub": s_sub, "odpu": grid[i, j]}
                              for i, s_opt in enumerate(sigma_opt) for j, s_sub in enumerate(sigma_sub)])
        if output_path:
            frame.to_csv(output_path, index=False, float_format="%.6f", lineterminator="\n")
            self.last_output_files = [output_path]
        return frame

    def emit_report(self, output_dir: str, result: Optional[ExperimentResult] = None,
                    traces: bool = True) -> List[str]:
        """Write CSV, JSON and SVG output of ``result`` (default: the last experiment)."""
        result = result or self.last_result
        if result is None:
            raise ValueError("No experiment result available. Run an experiment first.")
        files = emit_report(result, output_dir, traces)
        if self.audit_logger:
            self.audit_logger.log_report(output_dir, len(files))
        logger.info(f"Report written to {output_dir} ({len(files)} files)")
        return files

    def rerender_report(self, source_dir: str, output_dir: Optional[str] = None) -> List[str]:
        """Re-render tables and plots from a saved report directory."""
        data = load_report_data(source_dir)
        output_dir = output_dir or source_dir
        files = render_report(data, output_dir)
        if self.audit_logger:
            self.audit_logger.log_report(output_dir, len(files))
        logger.info(f"Report re-rendered from {source_dir} into {output_dir}")
        return files

    @staticmethod
    def learner_names() -> List[str]:
        """Every learner name accepted by experiments."""
        return list(ALG1_SLS) + [k.value for k in ALL_META_KINDS] + [COMPETITION]


SocialLearningLab.setup_logging = staticmethod(setup_logging)
