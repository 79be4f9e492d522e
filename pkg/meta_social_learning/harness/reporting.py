"""
Report emission

An experiment report is a directory of CSV tables, one JSON document and
SVG plots:

    summary.csv            one row per replicate (metrics per env/learner)
    curves.csv             mean/std of psi and cost per timestep and cell
    ratios.csv             mean kind ratios of competition cells
    extra_<name>.csv       post-processing tables
    runs/<cell>/seed_<n>.csv   per-replicate traces
    report.json            statistics, costs, trends and run metadata
    psi_<env>.svg, cd_<env>.svg, cost_<env>.svg, ratios_<env>.svg, ...

Plots are rendered from the rounded tables, so ``render_report`` on a saved
directory reproduces the same files.
"""

import json
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..utils.config_validator import require_valid, validate_output_directory  # noqa: E402
from ..utils.errors import ConfigurationError  # noqa: E402
from ..utils.logging_config import format_seeds, get_logger  # noqa: E402
from .experiments import ExperimentResult, controller_provenance  # noqa: E402

logger = get_logger(__name__)

FLOAT_FORMAT = "%.6f"
DECIMALS = 6
SVG_SALT = "meta-social-learning"
CURVE_COLUMNS = ["env", "learner", "sweep", "t", "psi_mean", "psi_std", "cost_mean"]


@dataclass
class ReportData:
    """Everything a report is rendered from."""
    summary: pd.DataFrame
    curves: pd.DataFrame
    ratios: pd.DataFrame
    document: Dict[str, Any]
    extras: Dict[str, pd.DataFrame] = field(default_factory=dict)

    def rounded(self) -> "ReportData":
        def rnd(frame: pd.DataFrame) -> pd.DataFrame:
            frame = frame.copy()
            if "sweep" in frame:
                frame["sweep"] = pd.to_numeric(frame["sweep"], errors="coerce").astype(float)
            return frame.round(DECIMALS)
        return ReportData(rnd(self.summary), rnd(self.curves), rnd(self.ratios), self.document,
                          {k: rnd(v) for k, v in self.extras.items()})


def _slug(text: Any) -> str:
    return re.sub(r"[^A-Za-z0-9_.=-]+", "_", str(text)).strip("_") or "none"


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if not np.isfinite(value) else round(value, 12)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return _json_ready(value.tolist())
    return value


def collect_report_data(result: ExperimentResult) -> ReportData:
    """Tables and the JSON document of an experiment result."""
    curve_frames = []
    ratio_frames = []
    for (env, learner, sweep), runs in result.runs.items():
        psi = np.vstack([run.frame["psi"].to_numpy() for run in runs])
        cost = np.vstack([run.frame["cost"].to_numpy() for run in runs])
        curve_frames.append(pd.DataFrame({
            "env": env, "learner": learner, "sweep": sweep, "t": runs[0].frame["t"].to_numpy(),
            "psi_mean": psi.mean(axis=0), "psi_std": psi.std(axis=0), "cost_mean": cost.mean(axis=0),
        }))
        ratio_columns = runs[0].ratio_columns()
        if ratio_columns:
            mean_ratios = sum(run.frame[ratio_columns].to_numpy() for run in runs) / len(runs)
            frame = pd.DataFrame(mean_ratios, columns=[c.split(":", 1)[1] for c in ratio_columns])
            frame.insert(0, "t", runs[0].frame["t"].to_numpy())
            frame.insert(0, "sweep", sweep)
            frame.insert(0, "env", env)
            ratio_frames.append(frame)
    curves = pd.concat(curve_frames, ignore_index=True) if curve_frames else pd.DataFrame(columns=CURVE_COLUMNS)
    ratios = pd.concat(ratio_frames, ignore_index=True) if ratio_frames else pd.DataFrame(columns=["env", "sweep", "t"])

    spec = result.spec
    document = {
        "experiment": spec.name,
        "description": spec.description,
        "config_hash": result.config_hash,
        "seeds": [int(s) for s in result.seeds],
        "replicates": spec.replicates,
        "m": spec.params.m,
        "metric": spec.metric,
        "learners": list(spec.learners),
        "sweep": {"param": spec.sweep[0], "values": list(spec.sweep[1])} if spec.sweep else None,
        "windows": {k: list(v) for k, v in spec.windows.items()},
        "change_points": result.change_points,
        "reconstructed": sorted({str(r.metadata.get("env")) for runs in result.runs.values()
                                 for r in runs if r.metadata.get("reconstructed")}),
        "stats": {key: report.to_dict() for key, report in result.stats.items()},
        "costs": {key: ledger.summary().to_dict(orient="records") for key, ledger in result.costs.items()},
        "trends": result.trends.to_dict(orient="records"),
        "scalars": dict(result.scalars),
        "controllers": controller_provenance(spec.learners, result.settings) if result.settings else {},
    }
    return ReportData(result.summary, curves, ratios, _json_ready(document), dict(result.extras))


def _write_csv(frame: pd.DataFrame, path: str) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _save_svg(fig, path: str, document: Dict[str, Any]) -> None:
    description = f"config={document.get('config_hash', '')} seeds={format_seeds(document.get('seeds', []))}"
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "meta-social-learning",
                                               "Title": document.get("experiment", ""),
                                               "Description": description})
    plt.close(fig)


def plot_psi(curves: pd.DataFrame, env: str, change_points: List[int], document: Dict[str, Any], path: str) -> None:
    """Mean psi per learner with vertical markers at the environment changes."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for (learner, sweep), group in curves[curves.env == env].groupby(["learner", "sweep"], sort=False, dropna=False):
        label = learner if pd.isna(sweep) else f"{learner} ({sweep})"
        ax.plot(group["t"], group["psi_mean"], label=label, linewidth=1.0)
    for point in change_points:
        ax.axvline(point, color="tab:orange", linestyle="--", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("mean population reward")
    ax.set_title(env)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    _save_svg(fig, path, document)


def plot_critical_difference(stats: Dict[str, Any], title: str, document: Dict[str, Any], path: str) -> None:
    """
    Critical difference diagram: learners on the rank axis in rank order,
    linked groups drawn as bold bars.
    """
    nemenyi = stats["nemenyi"]
    # report.json stores ranks with sorted keys
    ranks = sorted(nemenyi["ranks"].items(), key=lambda item: (item[1], item[0]))
    k = len(ranks)
    fig, ax = plt.subplots(figsize=(8, 1.2 + 0.3 * k))
    ax.set_xlim(1, max(k, 2))
    ax.set_ylim(0, k + 2)
    ax.invert_xaxis()
    ax.axhline(k + 1, color="black", linewidth=1.0)
    ax.plot([1, 1 + nemenyi["cd"]], [k + 1.6, k + 1.6], color="black", linewidth=2.0)
    ax.text(1 + nemenyi["cd"] / 2, k + 1.75, f"CD={nemenyi['cd']:.3f}", ha="center", fontsize=7)
    for i, (name, rank) in enumerate(ranks):
        y = k - i
        ax.plot([rank, rank], [k + 1, y], color="grey", linewidth=0.6)
        ax.text(rank, y, f"{name} ({rank:.2f})", fontsize=7, va="center",
                ha="right" if i < k / 2 else "left")
    names = [name for name, _ in ranks]
    for j, group in enumerate(g for g in nemenyi["groups"] if len(g) > 1):
        lo = min(nemenyi["ranks"][n] for n in group)
        hi = max(nemenyi["ranks"][n] for n in group)
        y = k + 0.8 - 0.15 * (j % 5)
        ax.plot([lo, hi], [y, y], color="black", linewidth=3.0)
    ax.set_yticks([])
    ax.set_title(title, fontsize=9)
    for side in ("left", "right", "top"):
        ax.spines[side].set_visible(False)
    fig.tight_layout()
    _save_svg(fig, path, document)
    logger.debug(f"CD diagram for {len(names)} learners written to {path}")


def plot_cost(summary: pd.DataFrame, env: str, metric: str, document: Dict[str, Any], path: str) -> None:
    """Exploration cost against performance, one point per learner."""
    rows = summary[summary.env == env].groupby("learner", sort=False)[["cost", metric]].mean()
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(rows["cost"], rows[metric], s=18)
    for learner, row in rows.iterrows():
        ax.annotate(learner, (row["cost"], row[metric]), fontsize=7, xytext=(3, 3), textcoords="offset points")
    ax.set_xlabel("exploration cost")
    ax.set_ylabel(metric)
    ax.set_title(env)
    fig.tight_layout()
    _save_svg(fig, path, document)


def plot_ratios(ratios: pd.DataFrame, env: str, change_points: List[int], document: Dict[str, Any],
                path: str) -> None:
    """Mean kind ratios of a competition over time."""
    frame = ratios[ratios.env == env]
    first_sweep = frame["sweep"].iloc[0]
    frame = frame[(frame["sweep"] == first_sweep) | frame["sweep"].isna()]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for column in [c for c in frame.columns if c not in ("env", "sweep", "t")]:
        if frame[column].notna().any():
            ax.plot(frame["t"], frame[column], label=column, linewidth=1.0)
    for point in change_points:
        ax.axvline(point, color="tab:orange", linestyle="--", linewidth=0.8)
    ax.set_xlabel("generation")
    ax.set_ylabel("ratio")
    ax.set_title(env)
    ax.legend(fontsize=6, ncol=3)
    fig.tight_layout()
    _save_svg(fig, path, document)


def plot_odpu_correlation(frame: pd.DataFrame, document: Dict[str, Any], path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(frame["odpu"], frame["difference"], s=14)
    ax.set_xlabel("ODPU")
    ax.set_ylabel("conformist - success-based")
    r = document.get("scalars", {}).get("pearson_r")
    if r is not None:
        ax.set_title(f"r = {r:.4f}")
    fig.tight_layout()
    _save_svg(fig, path, document)


def render_report(data: ReportData, out_dir: str) -> List[str]:
    """
    Write the tables, JSON document and plots of ``data``.

    Returns:
        Paths of the written files

    Raises:
        ConfigurationError: If the directory cannot be written
    """
    require_valid(validate_output_directory(out_dir), "Output directory")
    plt.rcParams["svg.hashsalt"] = SVG_SALT
    data = data.rounded()
    document = data.document
    written = []

    def path_of(name: str) -> str:
        path = os.path.join(out_dir, name)
        written.append(path)
        return path

    _write_csv(data.summary, path_of("summary.csv"))
    _write_csv(data.curves, path_of("curves.csv"))
    if not data.ratios.empty:
        _write_csv(data.ratios, path_of("ratios.csv"))
    for name, frame in sorted(data.extras.items()):
        _write_csv(frame, path_of(f"extra_{_slug(name)}.csv"))
    with open(path_of("report.json"), "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")

    change_points = document.get("change_points", {})
    for env in pd.unique(data.curves["env"]) if not data.curves.empty else []:
        plot_psi(data.curves, env, change_points.get(env, []), document, path_of(f"psi_{_slug(env)}.svg"))
        if data.summary[data.summary.env == env]["learner"].nunique() > 1:
            plot_cost(data.summary, env, document.get("metric", "cumulative_psi"), document,
                      path_of(f"cost_{_slug(env)}.svg"))
        if not data.ratios.empty and (data.ratios.env == env).any():
            plot_ratios(data.ratios, env, change_points.get(env, []), document, path_of(f"ratios_{_slug(env)}.svg"))
    for key, stats in document.get("stats", {}).items():
        if stats.get("nemenyi"):
            plot_critical_difference(stats, f"{key} ({stats['metric']})", document, path_of(f"cd_{_slug(key)}.svg"))
    if "odpu_correlation" in data.extras:
        plot_odpu_correlation(data.extras["odpu_correlation"], document, path_of("odpu_correlation.svg"))

    logger.info(f"Report with {len(written)} files written to {out_dir}")
    return written


def write_run_traces(result: ExperimentResult, out_dir: str) -> List[str]:
    """Per-replicate CSV traces under runs/."""
    written = []
    for (env, learner, sweep), runs in result.runs.items():
        cell = _slug(env) + "__" + _slug(learner) + ("" if sweep is None else f"__{_slug(sweep)}")
        directory = os.path.join(out_dir, "runs", cell)
        os.makedirs(directory, exist_ok=True)
        for run in runs:
            path = os.path.join(directory, f"seed_{run.seed}.csv")
            _write_csv(run.frame, path)
            written.append(path)
    return written


def emit_report(result: ExperimentResult, out_dir: str, traces: bool = True) -> List[str]:
    """
    Write the full report of an experiment.

    Args:
        result: Experiment result
        out_dir: Target directory (created when missing)
        traces: Also write per-replicate traces

    Returns:
        Paths of the written files
    """
    written = render_report(collect_report_data(result), out_dir)
    if traces:
        written += write_run_traces(result, out_dir)
    return written


def load_report_data(out_dir: str) -> ReportData:
    """
    Read back the tables and JSON document of a saved report.

    Raises:
        ConfigurationError: If the directory holds no report
    """
    document_path = os.path.join(out_dir, "report.json")
    if not os.path.exists(document_path):
        raise ConfigurationError(f"No report.json in {out_dir}")
    with open(document_path) as f:
        document = json.load(f)

    def read(name: str, columns: Optional[List[str]] = None) -> pd.DataFrame:
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            return pd.DataFrame(columns=columns or [])
        return pd.read_csv(path)

    extras = {}
    for name in sorted(os.listdir(out_dir)):
        if name.startswith("extra_") and name.endswith(".csv"):
            extras[name[len("extra_"):-len(".csv")]] = pd.read_csv(os.path.join(out_dir, name))
    return ReportData(read("summary.csv"), read("curves.csv", CURVE_COLUMNS),
                      read("ratios.csv", ["env", "sweep", "t"]), document, extras)
