"""
Paired statistics for QIE-vs-best-classical comparisons: paired t test,
exact Wilcoxon signed-rank test, paired Cohen's d and t-based intervals.
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sp_stats

from .errors import InputValidationError, PairingError
from .methods import method_kind
from .numerics import student_t_ppf, student_t_two_sided

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
WILCOXON_EXACT_MAX = 20
SELECTION_METRICS = ("accuracy", "macro_f1")


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int
    degenerate: bool = False


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    p: float
    n_used: int
    exact: bool
    degenerate: bool = False


@dataclass(frozen=True)
class EffectSize:
    d: float
    infinite: bool = False


@dataclass(frozen=True)
class PairedComparison:
    """One QIE method against the best classical baseline on one dataset, paired by seed."""

    dataset: str
    method: str
    baseline: str
    metric: str
    seeds: Tuple[int, ...]
    method_scores: Tuple[float, ...]
    baseline_scores: Tuple[float, ...]
    t_statistic: float
    t_pvalue: float
    df: int
    wilcoxon_statistic: float
    wilcoxon_pvalue: float
    wilcoxon_exact: bool
    cohens_d: float
    mean_difference: float
    ci95: Tuple[Optional[float], Optional[float]]
    significant: bool
    outcome: str
    flags: Tuple[str, ...] = field(default_factory=tuple)


def _differences(a: Sequence[float], b: Sequence[float]) -> np.ndarray:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InputValidationError(f"paired samples must be 1-D and equally long, got {x.shape} and {y.shape}")
    return x - y


def paired_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """
    t = mean(d) / (sd(d) / sqrt(n)) on d = a - b with the n-1 denominator.
    All-zero differences are degenerate (t=0, p=1); constant nonzero differences
    give an infinite t with p=0, also flagged degenerate.
    """
    d = _differences(a, b)
    n = d.size
    if n < 2:
        raise InputValidationError(f"paired t test needs at least 2 pairs, got {n}")
    df = n - 1
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if np.all(d == 0):
        return TTestResult(t=0.0, p=1.0, df=df, degenerate=True)
    if sd == 0.0:
        return TTestResult(t=math.copysign(math.inf, mean), p=0.0, df=df, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t=float(t), p=student_t_two_sided(t, df), df=df)


def _exact_signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """
    Number of sign assignments giving each value of 2*W+, counted over all
    2^m assignments (subset-sum counting; ranks are doubled so ties stay integral).
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> WilcoxonResult:
    """
    Two-sided Wilcoxon signed-rank test on a - b. Zero differences are dropped,
    tied magnitudes get average ranks. Exact for up to 20 nonzero differences,
    normal approximation with tie correction above that.
    """
    d = _differences(a, b)
    d = d[d != 0]
    m = d.size
    if m == 0:
        return WilcoxonResult(W=0.0, p=1.0, n_used=0, exact=True, degenerate=True)

    ranks = sp_stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    if m <= WILCOXON_EXACT_MAX:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _exact_signed_rank_counts(doubled)
        probs = counts / counts.sum()
        observed = int(round(2 * w_plus))
        lower = probs[: observed + 1].sum()
        upper = probs[observed:].sum()
        p = min(1.0, 2.0 * min(lower, upper))
        return WilcoxonResult(W=statistic, p=float(p), n_used=m, exact=True)

    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    mean_w = m * (m + 1) / 4.0
    var_w = m * (m + 1) * (2 * m + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    z = (w_plus - mean_w) / math.sqrt(var_w)
    p = 2.0 * sp_stats.norm.sf(abs(z))
    return WilcoxonResult(W=statistic, p=float(min(1.0, p)), n_used=m, exact=False)


def cohens_d_paired(a: Sequence[float], b: Sequence[float]) -> EffectSize:
    """mean(a - b) / sd(a - b); 0 for all-zero differences, signed infinity (flagged) for zero spread."""
    d = _differences(a, b)
    if d.size < 2:
        raise InputValidationError(f"Cohen's d needs at least 2 pairs, got {d.size}")
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if np.all(d == 0):
        return EffectSize(d=0.0)
    if sd == 0.0:
        return EffectSize(d=math.copysign(math.inf, mean), infinite=True)
    return EffectSize(d=mean / sd)


def mean_difference_ci(a: Sequence[float], b: Sequence[float], level: float = 0.95) -> Tuple[float, float]:
    """t-based confidence interval for the mean of a - b."""
    d = _differences(a, b)
    n = d.size
    if n < 2:
        raise InputValidationError(f"confidence interval needs at least 2 pairs, got {n}")
    half = student_t_ppf(0.5 + level / 2.0, n - 1) * float(d.std(ddof=1)) / math.sqrt(n)
    mean = float(d.mean())
    return mean - half, mean + half


def _score(cell, metric: str) -> float:
    return float(getattr(cell, metric))


def _scores_by_seed(cells: Iterable, dataset: str, method: str, metric: str) -> Dict[int, float]:
    scores = {c.seed: _score(c, metric) for c in cells if c.dataset == dataset and c.method == method}
    return dict(sorted(scores.items()))


def compare_to_best(cells: Iterable, metric: str = "accuracy", alpha: float = DEFAULT_ALPHA) -> List[PairedComparison]:
    """
    For each dataset pick the classical method with the highest mean score
    (ties broken by name) and compare every QIE method against it, seed by seed.

    Cells whose status is not "ok" are ignored; the mean-difference sign follows
    "QIE minus baseline", so negative means the QIE method is worse.
    """
    if metric not in SELECTION_METRICS:
        raise InputValidationError(f"selection metric must be one of {', '.join(SELECTION_METRICS)}, got {metric!r}")
    usable = [c for c in cells if getattr(c, "status", "ok") == "ok"]
    by_dataset = defaultdict(set)
    for cell in usable:
        by_dataset[cell.dataset].add(cell.method)

    comparisons: List[PairedComparison] = []
    for dataset in sorted(by_dataset):
        methods = by_dataset[dataset]
        classical = sorted(m for m in methods if method_kind(m) == "classical")
        qie = sorted(m for m in methods if method_kind(m) == "qie")
        if not classical or not qie:
            logger.warning(f"{dataset}: need at least one QIE and one classical method to compare, skipping")
            continue

        means = {m: float(np.mean(list(_scores_by_seed(usable, dataset, m, metric).values()))) for m in classical}
        baseline = max(classical, key=lambda m: (means[m], _reverse_name(m)))
        baseline_scores = _scores_by_seed(usable, dataset, baseline, metric)

        for method in qie:
            method_scores = _scores_by_seed(usable, dataset, method, metric)
            comparisons.append(_compare(dataset, method, baseline, metric, method_scores, baseline_scores, alpha))
    return comparisons


def _reverse_name(name: str) -> Tuple[int, ...]:
    # max() picks the alphabetically first name among equal means
    return tuple(-ord(ch) for ch in name)


def _compare(
    dataset: str,
    method: str,
    baseline: str,
    metric: str,
    method_scores: Dict[int, float],
    baseline_scores: Dict[int, float],
    alpha: float,
) -> PairedComparison:
    missing_method = sorted(set(baseline_scores) - set(method_scores))
    missing_baseline = sorted(set(method_scores) - set(baseline_scores))
    if missing_method or missing_baseline:
        gaps = [f"{method} lacks seeds {missing_method}"] if missing_method else []
        gaps += [f"{baseline} lacks seeds {missing_baseline}"] if missing_baseline else []
        raise PairingError(f"{dataset}: cannot pair {method} with {baseline}: {'; '.join(gaps)}")

    seeds = tuple(sorted(method_scores))
    a = [method_scores[s] for s in seeds]
    b = [baseline_scores[s] for s in seeds]
    flags = []

    t_result = paired_t(a, b)
    wilcoxon = wilcoxon_signed_rank(a, b)
    effect = cohens_d_paired(a, b)
    mean_diff = float(np.mean(np.subtract(a, b)))
    if t_result.degenerate:
        flags.append("zero_difference" if mean_diff == 0.0 else "zero_variance")
    if effect.infinite:
        flags.append("infinite_effect")
    if not wilcoxon.exact:
        flags.append("wilcoxon_normal_approx")

    ci = mean_difference_ci(a, b)
    significant = t_result.p < alpha
    if significant and mean_diff > 0:
        outcome = "better"
    elif significant and mean_diff < 0:
        outcome = "worse"
    else:
        outcome = "tie"

    if flags:
        logger.warning(f"{dataset}/{method} vs {baseline}: {', '.join(flags)}")
    return PairedComparison(
        dataset=dataset,
        method=method,
        baseline=baseline,
        metric=metric,
        seeds=seeds,
        method_scores=tuple(a),
        baseline_scores=tuple(b),
        t_statistic=t_result.t,
        t_pvalue=t_result.p,
        df=t_result.df,
        wilcoxon_statistic=wilcoxon.W,
        wilcoxon_pvalue=wilcoxon.p,
        wilcoxon_exact=wilcoxon.exact,
        cohens_d=effect.d,
        mean_difference=mean_diff,
        ci95=ci,
        significant=significant,
        outcome=outcome,
        flags=tuple(flags),
    )


def summarize_comparisons(comparisons: Sequence[PairedComparison]) -> Dict[str, int]:
    """Counts of significantly better / worse / tied comparisons."""
    summary = {"comparisons": len(comparisons), "better": 0, "worse": 0, "tie": 0}
    for comparison in comparisons:
        summary[comparison.outcome] += 1
    return summary
