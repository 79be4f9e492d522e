#!/usr/bin/env python3
"""
Command-line interface for meta-social-learning

Subcommands run named or ad-hoc experiments, parameter sweeps, the
meta-strategy competition, controller training, the mean-field model, ODPU
evaluation and report re-rendering.
"""

import argparse
import os
import sys
import traceback
from typing import List, Optional

from .api import TRAINING_ALGORITHMS, TRAINING_ENV, SocialLearningLab
from .harness.experiments import COMPETITION, METRICS, ExperimentResult
from .optimizers.fitness import SPACES
from .replicator.replicator_model import SLS_KINDS
from .utils.errors import EXIT_CONFIGURATION, EXIT_FAILURE, EXIT_NUMERIC, ConfigurationError, NumericError
from .utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def display_result(result: ExperimentResult, quiet: bool = False) -> None:
    """Print learner means, Nemenyi groups and post-processing scalars."""
    if quiet:
        return
    print(f"\n📈 {result.spec.name} (metric: {result.spec.metric}, config {result.config_hash or 'n/a'})")
    for key, report in result.stats.items():
        print(f"\n📋 {key}:")
        for name, mean in sorted(report.means.items(), key=lambda item: -item[1]):
            print(f"   {name:<18} {mean:10.4f}")
        if report.nemenyi is not None:
            print(f"   Nemenyi CD = {report.nemenyi.cd:.3f}")
            for group in report.nemenyi.groups:
                if len(group) > 1:
                    print(f"   🔗 {' ~ '.join(group)}")
        if key in result.costs and len(result.costs[key].names) > 1:
            ledger = result.costs[key]
            costliest = max(ledger.names, key=ledger.mean_total)
            print(f"   💸 Highest exploration cost: {costliest} "
                  f"({ledger.ratio_to_next(costliest):.2f}x the next)")
    if not result.trends.empty:
        print("\n📉 Sweep trends (Spearman):")
        for row in result.trends[result.trends.metric == result.spec.metric].itertuples():
            print(f"   {row.env} / {row.learner}: rho={row.rho:+.3f} p={row.p:.4f}")
    for name, value in result.scalars.items():
        print(f"   {name} = {value:.4f}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, help="Configuration YAML merged over the packaged defaults")
    parser.add_argument("--seed", type=int, default=0, help="Root random seed (default: 0)")
    parser.add_argument("--workers", type=int, help="Process pool size for replicates")
    parser.add_argument("--controller", type=str, help="Trained rule table or network weights file")
    parser.add_argument("--quiet", action="store_true", help="Minimal output")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="WARNING",
                        help="Logging level (default: WARNING)")
    parser.add_argument("--audit-log", type=str, help="Audit log file")


def _scale(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--replicates", type=int, help="Runs per cell")
    parser.add_argument("--m", type=int, help="Population size")
    parser.add_argument("--desk", action="store_true", help="Desk-scale preset (fewer runs, smaller populations)")
    parser.add_argument("--output", type=str, help="Report directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Meta-social learning on non-stationary bandits")
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    run_parser = subparsers.add_parser("run", help="Run a named experiment or compare learners")
    run_parser.add_argument("experiment", nargs="?", help="Experiment name from the catalogue")
    run_parser.add_argument("--list", action="store_true", help="List the named experiments")
    run_parser.add_argument("--meta", nargs="+", help="Learners to compare (meta-strategies or social strategies)")
    run_parser.add_argument("--env", type=str, action="append", help="Environment file or packaged name")
    run_parser.add_argument("--metric", choices=METRICS, default="cumulative_psi", help="Comparison metric")
    _scale(run_parser)
    _common(run_parser)

    sweep_parser = subparsers.add_parser("sweep", help="Sweep one simulation parameter")
    sweep_parser.add_argument("experiment", nargs="?", help="Named sweep experiment (e.g. mutation_rate)")
    sweep_parser.add_argument("--param", type=str, help="Parameter to sweep (mr, s, tau, epsilon, ...)")
    sweep_parser.add_argument("--values", type=float, nargs="+", help="Values of the swept parameter")
    sweep_parser.add_argument("--meta", nargs="+", help="Learners")
    sweep_parser.add_argument("--env", type=str, help="Environment file or packaged name")
    sweep_parser.add_argument("--metric", choices=METRICS, default="mean_psi", help="Comparison metric")
    _scale(sweep_parser)
    _common(sweep_parser)

    train_parser = subparsers.add_parser("train", help="Train an SL-GA rule table or SL-NE network")
    train_parser.add_argument("--space", choices=SPACES, required=True, help="Genotype space")
    train_parser.add_argument("--algo", choices=TRAINING_ALGORITHMS, default="ga", help="Training algorithm")
    train_parser.add_argument("--env", type=str, default=TRAINING_ENV, help="Training environment")
    train_parser.add_argument("--runs", type=int, help="Independent training runs")
    train_parser.add_argument("--replicates", type=int, help="Simulations per fitness evaluation")
    train_parser.add_argument("--m", type=int, help="Population size of the fitness simulations")
    train_parser.add_argument("--max-generations", type=int, help="Generation cap per run")
    train_parser.add_argument("--output", type=str, default="output", help="Directory for controller and trace")
    train_parser.add_argument("--evaluate", action="store_true",
                              help="Evaluate the trained controller on held-out environments (desk scale)")
    _common(train_parser)

    evolve_parser = subparsers.add_parser("evolve-meta", help="Evolutionary competition among meta-strategies")
    evolve_parser.add_argument("--env", type=str, help="Environment file or packaged name")
    evolve_parser.add_argument("--meta", nargs="+", help="Competing meta-strategies (default: all)")
    _scale(evolve_parser)
    _common(evolve_parser)

    replicator_parser = subparsers.add_parser("replicator", help="Integrate the mean-field model")
    replicator_parser.add_argument("--sls", choices=SLS_KINDS, required=True, help="Social learning strategy")
    replicator_parser.add_argument("--env", type=str, default="reversal_low", help="Environment")
    replicator_parser.add_argument("--tau", type=float, help="Social learning latency")
    replicator_parser.add_argument("--epsilon", type=float, help="Exploration rate")
    replicator_parser.add_argument("--horizon", type=float, help="End time (default: environment horizon)")
    replicator_parser.add_argument("--dt", type=float, help="Integration step")
    replicator_parser.add_argument("--output", type=str, help="Trajectory CSV")
    _common(replicator_parser)

    odpu_parser = subparsers.add_parser("odpu", help="Probability of deceptive social information")
    odpu_parser.add_argument("--mu", type=float, nargs="+", required=True, help="Group means, optimal first")
    odpu_parser.add_argument("--sigma", type=float, nargs="+", help="Group standard deviations")
    odpu_parser.add_argument("--n", type=int, nargs="+", required=True, help="Group sizes")
    odpu_parser.add_argument("--mc-trials", type=int, default=0, help="Monte Carlo cross-check trials")
    odpu_parser.add_argument("--sigma-opt", type=float, nargs="+", help="Heat map rows (optimal sigma)")
    odpu_parser.add_argument("--sigma-sub", type=float, nargs="+", help="Heat map columns (sub-optimal sigma)")
    odpu_parser.add_argument("--output", type=str, help="Heat map CSV")
    _common(odpu_parser)

    report_parser = subparsers.add_parser("report", help="Re-render a saved report")
    report_parser.add_argument("source", help="Directory holding report.json and the CSV tables")
    report_parser.add_argument("--output", type=str, help="Target directory (default: source)")
    _common(report_parser)

    return parser


def _run(args, lab: SocialLearningLab) -> None:
    if args.list:
        for name in lab.list_experiments():
            print(name)
        return
    if args.experiment:
        if not args.quiet:
            print(f"🧪 Running experiment {args.experiment} (seed {args.seed})...")
        result = lab.run_experiment(args.experiment, args.seed, args.replicates, args.m, args.desk,
                                    args.workers, args.env, args.output)
    elif args.meta and args.env:
        if len(args.env) != 1:
            raise ConfigurationError("Ad-hoc comparisons take exactly one --env")
        if not args.quiet:
            print(f"🧪 Comparing {', '.join(args.meta)} on {args.env[0]} (seed {args.seed})...")
        result = lab.compare(args.meta, args.env[0], args.seed, args.replicates, args.m, args.metric,
                             args.workers, args.output)
    else:
        raise ConfigurationError("run needs an experiment name, or --meta with --env")
    display_result(result, args.quiet)
    _report_written(args, lab)


def _sweep(args, lab: SocialLearningLab) -> None:
    if args.experiment:
        if not args.quiet:
            print(f"🔍 Running sweep {args.experiment}...")
        result = lab.run_experiment(args.experiment, args.seed, args.replicates, args.m, args.desk,
                                    args.workers, [args.env] if args.env else None, args.output)
    else:
        if not (args.param and args.values and args.meta and args.env):
            raise ConfigurationError("sweep needs an experiment name, or --param, --values, --meta and --env")
        if not args.quiet:
            print(f"🔍 Sweeping {args.param} over {args.values}...")
        result = lab.sweep(args.param, args.values, args.meta, args.env, args.seed, args.replicates, args.m,
                           args.metric, args.workers, args.output)
    display_result(result, args.quiet)
    _report_written(args, lab)


def _train(args, lab: SocialLearningLab) -> None:
    if not args.quiet:
        print(f"🧬 Training {args.space} controller with {args.algo.upper()} on {args.env}...")
    result = lab.train(args.space, args.algo, args.env, args.runs, args.seed, args.replicates, args.m,
                       args.workers, args.output, args.max_generations)
    if not args.quiet:
        for run, fitness in enumerate(result.run_best):
            print(f"   Run {run}: best fitness {fitness:.4f}")
        print(f"   ✅ Best fitness {result.best_fitness:.4f}")
        for path in lab.last_output_files:
            print(f"   💾 {path}")
    if args.evaluate:
        evaluation_dir = os.path.join(args.output, "evaluation")
        evaluation = lab.evaluate_training(result, args.seed, desk=True, workers=args.workers,
                                           output_dir=evaluation_dir)
        display_result(evaluation, args.quiet)
        if not args.quiet:
            print(f"\n💾 Evaluation written to {evaluation_dir} ({len(lab.last_output_files)} files)")


def _evolve(args, lab: SocialLearningLab) -> None:
    if not args.quiet:
        print(f"🧬 Meta-strategy competition (seed {args.seed})...")
    result = lab.evolve_meta(args.env, args.seed, args.replicates, args.m, args.desk, args.meta,
                             args.workers, args.output)
    if not args.quiet:
        runs = next(v for k, v in result.runs.items() if k[1] == COMPETITION)
        final = {}
        for run in runs:
            for column in run.ratio_columns():
                final.setdefault(column.split(":", 1)[1], []).append(float(run.frame[column].iloc[-1]))
        print("\n🏁 Mean terminal ratios:")
        for name, values in sorted(final.items(), key=lambda item: -sum(item[1])):
            print(f"   {name:<18} {sum(values) / len(values):.4f}")
    display_result(result, args.quiet)
    _report_written(args, lab)


def _replicator(args, lab: SocialLearningLab) -> None:
    trajectory = lab.replicator(args.sls, args.env, args.tau, args.epsilon, args.horizon, args.dt, args.output)
    if not args.quiet:
        print(f"📐 {args.sls} model on {args.env}")
        print(f"   Terminal state: a1={trajectory.a1[-1]:.4f} a2={trajectory.a2[-1]:.4f} sl={trajectory.sl[-1]:.4f}")
        print(f"   Max simplex drift: {trajectory.max_simplex_drift():.2e}")
        if args.output:
            print(f"   💾 {args.output}")


def _odpu(args, lab: SocialLearningLab) -> None:
    if args.sigma_opt or args.sigma_sub:
        if not (args.sigma_opt and args.sigma_sub):
            raise ConfigurationError("Heat maps need both --sigma-opt and --sigma-sub")
        frame = lab.odpu_heatmap(args.mu, args.sigma_opt, args.sigma_sub, args.n, args.output)
        if args.output:
            if not args.quiet:
                print(f"✅ ODPU heat map written to {args.output}")
        else:
            print(frame.to_csv(index=False, float_format="%.6f"), end="")
        return
    if not args.sigma:
        raise ConfigurationError("odpu needs --sigma (or --sigma-opt and --sigma-sub)")
    result = lab.odpu(args.mu, args.sigma, args.n, args.mc_trials, args.seed)
    print(f"{result['odpu']:.6f}")
    if args.mc_trials and not args.quiet:
        mark = "✅" if result["agree"] else "⚠️ "
        print(f"{mark} Monte Carlo {result['monte_carlo']:.6f} (SE {result['standard_error']:.2e})")


def _report(args, lab: SocialLearningLab) -> None:
    files = lab.rerender_report(args.source, args.output)
    if not args.quiet:
        print(f"✅ Report re-rendered: {len(files)} files in {args.output or args.source}")


def _report_written(args, lab: SocialLearningLab) -> None:
    if getattr(args, "output", None) and not args.quiet:
        print(f"\n💾 Report written to {args.output} ({len(lab.last_output_files)} files)")


COMMANDS = {
    "run": _run,
    "sweep": _sweep,
    "train": _train,
    "evolve-meta": _evolve,
    "replicator": _replicator,
    "odpu": _odpu,
    "report": _report,
}


def main(argv: Optional[List[str]] = None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command not in COMMANDS:
        parser.print_help()
        return

    setup_logging(level=args.log_level)

    try:
        lab = SocialLearningLab(args.config, audit_log_file=args.audit_log, controller_path=args.controller)
        COMMANDS[args.command](args, lab)
        if not args.quiet:
            print("\n🎉 Done")
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        print(f"❌ Configuration error: {e}")
        sys.exit(EXIT_CONFIGURATION)
    except NumericError as e:
        logger.error(f"Numeric failure: {e}")
        print(f"❌ Numeric failure: {e}")
        sys.exit(EXIT_NUMERIC)
    except Exception as e:
        error_msg = f"\n❌ Error during {args.command}: {e}"
        logger.error(error_msg)
        print(error_msg)
        if not args.quiet:
            traceback.print_exc()
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
