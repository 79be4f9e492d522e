"""
Harness module for meta-social-learning

Experiment catalogue and execution, statistics and report emission.
"""

from .statistics import (
    wilcoxon_rank_sum,
    pairwise_rank_sum,
    average_ranks,
    friedman,
    nemenyi_q,
    nemenyi_cd,
    NemenyiResult,
    pearson,
    spearman_trend,
    StatsReport,
    compare_learners,
    CostLedger,
)
from .experiments import (
    ExperimentSpec,
    ExperimentResult,
    run_experiment,
    run_single,
    build_experiment,
    list_experiments,
    load_experiments,
    resolve_env,
    summarise_run,
    dominant_age,
    binary_copy_frequency,
    random_fcn_weights,
    rule_table_agreement,
    paired_win_share,
    controller_provenance,
    RANDOM_FCN,
    POST_PROCESSORS,
)
from .reporting import (
    ReportData,
    collect_report_data,
    render_report,
    emit_report,
    load_report_data,
    write_run_traces,
)

__all__ = [
    "wilcoxon_rank_sum",
    "pairwise_rank_sum",
    "average_ranks",
    "friedman",
    "nemenyi_q",
    "nemenyi_cd",
    "NemenyiResult",
    "pearson",
    "spearman_trend",
    "StatsReport",
    "compare_learners",
    "CostLedger",
    "ExperimentSpec",
    "ExperimentResult",
    "run_experiment",
    "run_single",
    "build_experiment",
    "list_experiments",
    "load_experiments",
    "resolve_env",
    "summarise_run",
    "dominant_age",
    "binary_copy_frequency",
    "random_fcn_weights",
    "rule_table_agreement",
    "paired_win_share",
    "controller_provenance",
    "RANDOM_FCN",
    "POST_PROCESSORS",
    "ReportData",
    "collect_report_data",
    "render_report",
    "emit_report",
    "load_report_data",
    "write_run_traces",
]
