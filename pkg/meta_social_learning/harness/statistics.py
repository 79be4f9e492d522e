"""
Statistics for comparing learners across replicates

Rank-sum tests between pairs, Friedman omnibus test with Nemenyi critical
differences for many learners, correlation and trend tests for sweeps, and
the exploration cost ledger.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import stats

from ..utils.errors import ConfigurationError
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt(2)),
# indexed by the number of compared learners k.
NEMENYI_Q = {
    0.05: {
        2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102,
        10: 3.164, 11: 3.219, 12: 3.268, 13: 3.313, 14: 3.354, 15: 3.391, 16: 3.426,
        17: 3.458, 18: 3.489, 19: 3.517, 20: 3.544,
    },
    0.10: {
        2: 1.645, 3: 2.052, 4: 2.291, 5: 2.459, 6: 2.589, 7: 2.693, 8: 2.780, 9: 2.855,
        10: 2.920,
    },
}

EXACT_RANK_SUM_LIMIT = 10


def wilcoxon_rank_sum(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Two-sided Wilcoxon rank-sum (Mann-Whitney U) p-value.

    Exact for samples of at most 10 without ties, otherwise the normal
    approximation with tie correction.  Identical constant samples give p = 1.

    Raises:
        ConfigurationError: If a sample has fewer than two values
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or y.size < 2:
        raise ConfigurationError("rank-sum test needs at least two values per sample")
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    exact = max(x.size, y.size) <= EXACT_RANK_SUM_LIMIT and np.unique(pooled).size == pooled.size
    result = stats.mannwhitneyu(x, y, alternative="two-sided", method="exact" if exact else "asymptotic")
    return float(min(max(result.pvalue, 0.0), 1.0))


def pairwise_rank_sum(samples: Mapping[str, Sequence[float]]) -> pd.DataFrame:
    """Rank-sum p-values for every pair of named samples (columns a, b, p)."""
    rows = [{"a": a, "b": b, "p": wilcoxon_rank_sum(samples[a], samples[b])}
            for a, b in combinations(samples.keys(), 2)]
    return pd.DataFrame(rows, columns=["a", "b", "p"])


def average_ranks(results: np.ndarray, higher_is_better: bool = True) -> np.ndarray:
    """
    Mean rank of each column of a runs x learners matrix; rank 1 is best and
    ties share the average rank.
    """
    results = np.asarray(results, dtype=float)
    if results.ndim != 2:
        raise ConfigurationError("results must be a runs x learners matrix")
    ranks = stats.rankdata(-results if higher_is_better else results, axis=1)
    return ranks.mean(axis=0)


def friedman(results: np.ndarray) -> Tuple[float, float]:
    """
    Friedman chi-square statistic and p-value.

    Needs three learners; fewer, or no variation at all, gives (nan, 1.0).
    """
    results = np.asarray(results, dtype=float)
    if results.ndim != 2 or results.shape[1] < 3 or results.shape[0] < 2:
        return float("nan"), 1.0
    if np.all(results == results.flat[0]):
        return 0.0, 1.0
    stat, p = stats.friedmanchisquare(*results.T)
    if not np.isfinite(stat):
        return float("nan"), 1.0
    return float(stat), float(p)


def nemenyi_q(k: int, alpha: float = 0.05) -> float:
    """Critical value q_alpha for k learners (table value when available)."""
    if k < 2:
        raise ConfigurationError("Nemenyi test needs at least two learners")
    table = NEMENYI_Q.get(round(alpha, 4), {})
    if k in table:
        return table[k]
    return float(stats.studentized_range.ppf(1.0 - alpha, k, np.inf) / np.sqrt(2.0))


@dataclass
class NemenyiResult:
    """Average ranks, critical difference and linked groups."""
    names: List[str]
    ranks: np.ndarray
    cd: float
    groups: List[List[str]]

    def rank_order(self) -> List[Tuple[str, float]]:
        order = np.argsort(self.ranks, kind="stable")
        return [(self.names[i], float(self.ranks[i])) for i in order]

    def linked(self, a: str, b: str) -> bool:
        return any(a in group and b in group for group in self.groups)


def nemenyi_cd(results: np.ndarray, alpha: float = 0.05, names: Optional[Sequence[str]] = None,
               higher_is_better: bool = True) -> NemenyiResult:
    """
    Nemenyi post-hoc analysis.

    CD = q_alpha * sqrt(k (k + 1) / (6 n)).  Learners whose average ranks
    differ by less than CD are linked; the groups are the maximal cliques of
    that relation, ordered by mean rank.
    """
    results = np.asarray(results, dtype=float)
    if results.ndim != 2 or results.shape[0] < 2 or results.shape[1] < 2:
        raise ConfigurationError("Nemenyi test needs at least two runs and two learners")
    n, k = results.shape
    names = list(names) if names is not None else [str(i) for i in range(k)]
    if len(names) != k:
        raise ConfigurationError(f"{len(names)} names for {k} learners")

    ranks = average_ranks(results, higher_is_better)
    cd = nemenyi_q(k, alpha) * np.sqrt(k * (k + 1) / (6.0 * n))

    graph = nx.Graph()
    graph.add_nodes_from(range(k))
    for i, j in combinations(range(k), 2):
        if abs(ranks[i] - ranks[j]) < cd:
            graph.add_edge(i, j)
    cliques = sorted((sorted(c, key=lambda i: ranks[i]) for c in nx.find_cliques(graph)),
                     key=lambda c: (np.mean(ranks[c]), c))
    groups = [[names[i] for i in clique] for clique in cliques]
    return NemenyiResult(names, ranks, float(cd), groups)


def pearson(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Pearson r and two-sided p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ConfigurationError("correlation needs two samples of equal size >= 3")
    r, p = stats.pearsonr(x, y)
    return float(r), float(p)


def spearman_trend(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float]:
    """Spearman rho and two-sided p-value of a monotone trend of y in x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or x.size != y.size:
        raise ConfigurationError("trend test needs two samples of equal size >= 3")
    if np.all(y == y[0]) or np.all(x == x[0]):
        return 0.0, 1.0
    rho, p = stats.spearmanr(x, y)
    return float(rho), float(p)


@dataclass
class StatsReport:
    """Comparison of learners on one environment."""
    metric: str
    names: List[str]
    means: Dict[str, float]
    pairwise: pd.DataFrame
    friedman_stat: float
    friedman_p: float
    nemenyi: Optional[NemenyiResult] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def p_value(self, a: str, b: str) -> float:
        rows = self.pairwise[((self.pairwise.a == a) & (self.pairwise.b == b))
                             | ((self.pairwise.a == b) & (self.pairwise.b == a))]
        if rows.empty:
            raise KeyError(f"No comparison between {a} and {b}")
        return float(rows.p.iloc[0])

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "metric": self.metric,
            "means": {k: float(v) for k, v in self.means.items()},
            "pairwise": self.pairwise.to_dict(orient="records"),
            "friedman": {"statistic": self.friedman_stat, "p": self.friedman_p},
        }
        if self.nemenyi is not None:
            data["nemenyi"] = {
                "cd": self.nemenyi.cd,
                "ranks": {name: rank for name, rank in self.nemenyi.rank_order()},
                "groups": self.nemenyi.groups,
            }
        data.update(self.extra)
        return data


def compare_learners(samples: Mapping[str, Sequence[float]], metric: str,
                     alpha: float = 0.05) -> StatsReport:
    """
    Pairwise rank-sum tests, Friedman and Nemenyi over paired replicates.

    ``samples`` maps learner names to one value per replicate; replicate i of
    every learner shares its seed.
    """
    names = list(samples.keys())
    if not names:
        raise ConfigurationError("no learners to compare")
    means = {name: float(np.mean(samples[name])) for name in names}
    pairwise = pairwise_rank_sum(samples) if len(names) > 1 else pd.DataFrame(columns=["a", "b", "p"])
    lengths = {len(samples[name]) for name in names}
    nemenyi = None
    stat, p = float("nan"), 1.0
    if len(names) > 1 and len(lengths) == 1 and lengths.pop() >= 2:
        matrix = np.column_stack([np.asarray(samples[name], dtype=float) for name in names])
        stat, p = friedman(matrix)
        nemenyi = nemenyi_cd(matrix, alpha, names)
    return StatsReport(metric, names, means, pairwise, stat, p, nemenyi)


class CostLedger:
    """
    Exploration cost per learner: cumulative cost trace of every replicate.

    Traces must be non-decreasing.
    """

    def __init__(self):
        self._traces: Dict[str, List[np.ndarray]] = {}

    def add(self, name: str, trace: Sequence[float]) -> None:
        trace = np.asarray(trace, dtype=float)
        if trace.size and np.any(np.diff(trace) < -1e-9):
            raise ConfigurationError(f"cost trace of {name} decreases")
        self._traces.setdefault(name, []).append(trace)

    @property
    def names(self) -> List[str]:
        return list(self._traces)

    def totals(self, name: str) -> np.ndarray:
        return np.array([trace[-1] if trace.size else 0.0 for trace in self._traces[name]])

    def mean_total(self, name: str) -> float:
        return float(self.totals(name).mean())

    def mean_trace(self, name: str) -> np.ndarray:
        return np.mean(np.vstack(self._traces[name]), axis=0)

    def ratio_to_next(self, name: str) -> float:
        """Mean total of ``name`` divided by the largest mean total among the others."""
        others = [self.mean_total(n) for n in self.names if n != name]
        if not others or max(others) <= 0:
            return float("inf")
        return self.mean_total(name) / max(others)

    def summary(self) -> pd.DataFrame:
        rows = [{"learner": name, "mean_cost": self.mean_total(name), "std_cost": float(self.totals(name).std()),
                 "runs": len(self._traces[name])} for name in self.names]
        return pd.DataFrame(rows, columns=["learner", "mean_cost", "std_cost", "runs"])
