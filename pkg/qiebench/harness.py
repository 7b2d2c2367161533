"""
Benchmark orchestration: datasets x methods x seeds, one shared split per
(dataset, seed), probe training, diagnostics, CKA and paired comparisons.
"""

import logging
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._version import SCHEMA_VERSION, __version__
from .config import RunConfig, load_dataset
from .data import Dataset, Split, Standardizer, split_counts, stratified_split
from .diagnostics import linear_cka, spectral_report, subsample_rows
from .errors import InfeasibleError, InputValidationError, PairingError
from .methods import QIE_METHODS, MethodContext, cell_label, fit_method, method_kind
from .numerics import derive_stream
from .probe import compute_metrics, predict, train_logistic
from .stats import PairedComparison, compare_to_best, summarize_comparisons

logger = logging.getLogger(__name__)

TIMING_FIELDS = ("encode_time_ms", "fit_time_ms", "train_time_s")


@dataclass(frozen=True)
class CellResult:
    """One (dataset, method, seed) evaluation. Metrics are None unless status is "ok"."""

    dataset: str
    method: str
    kind: str
    seed: int
    status: str
    split_digest: str
    n_train: int
    n_test: int
    accuracy: Optional[float] = None
    macro_f1: Optional[float] = None
    output_dim: Optional[int] = None
    effective_rank: Optional[float] = None
    normalized_erank: Optional[float] = None
    condition_number: Optional[float] = None
    condition_capped: Optional[bool] = None
    log10_kappa: Optional[float] = None
    probe_iterations: Optional[int] = None
    probe_converged: Optional[bool] = None
    encode_time_ms: float = 0.0
    fit_time_ms: float = 0.0
    train_time_s: float = 0.0
    message: str = ""

    @property
    def key(self) -> Tuple[str, str, int]:
        return (self.dataset, self.method, self.seed)

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data = asdict(self)
        if not include_timing:
            for name in TIMING_FIELDS:
                data.pop(name)
        return data


@dataclass(frozen=True)
class CkaEntry:
    """Linear CKA between two representations of one dataset, averaged over seeds."""

    dataset: str
    method_a: str
    method_b: str
    mean: float
    sd: float
    values: Tuple[float, ...]
    sample_count: int


@dataclass(frozen=True)
class SplitRecord:
    dataset: str
    seed: int
    split: Split
    train_class_counts: Tuple[int, ...]
    test_class_counts: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "digest": self.split.digest(),
            "n_train": int(self.split.train_indices.size),
            "n_test": int(self.split.test_indices.size),
            "train_class_counts": list(self.train_class_counts),
            "test_class_counts": list(self.test_class_counts),
        }


@dataclass
class Report:
    config: RunConfig
    cells: List[CellResult] = field(default_factory=list)
    comparisons: List[PairedComparison] = field(default_factory=list)
    cka: List[CkaEntry] = field(default_factory=list)
    splits: List[SplitRecord] = field(default_factory=list)
    errors: List[Dict[str, str]] = field(default_factory=list)
    dataset_dims: Dict[str, int] = field(default_factory=dict)
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    @property
    def summary(self) -> Dict[str, Any]:
        statuses = [c.status for c in self.cells]
        return {
            "cells": len(self.cells),
            "ok": statuses.count("ok"),
            "infeasible": statuses.count("infeasible"),
            "error": statuses.count("error"),
            "dataset_errors": len(self.errors),
            **summarize_comparisons(self.comparisons),
        }

    def cell(self, dataset: str, method: str, seed: int) -> CellResult:
        for c in self.cells:
            if c.key == (dataset, method, seed):
                return c
        raise KeyError(f"no cell for {dataset}/{method}/{seed}")

    def to_dict(self) -> Dict[str, Any]:
        """Everything except wall-clock timings, in canonical order."""
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "config": self.config.to_dict(),
            "datasets": [{"name": name, "d": dim} for name, dim in sorted(self.dataset_dims.items())],
            "splits": [s.to_dict() for s in self.splits],
            "cells": [c.to_dict() for c in self.cells],
            "comparisons": [asdict(c) for c in self.comparisons],
            "cka": [asdict(c) for c in self.cka],
            "errors": list(self.errors),
            "summary": self.summary,
        }


def time_encoding(feature_map, X, repeats: int = 3) -> float:
    """Median wall-clock of ``feature_map.transform(X)`` in milliseconds; fitting is not timed."""
    if repeats < 1:
        raise InputValidationError(f"repeats must be >= 1, got {repeats}")
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        feature_map.transform(X)
        samples.append((time.perf_counter() - start) * 1000.0)
    return max(0.0, float(statistics.median(samples)))


def _run_cell(dataset: Dataset, split: Split, method: str, seed: int, config: RunConfig) -> Tuple[CellResult, Optional[np.ndarray]]:
    xtr = dataset.features[split.train_indices]
    ytr = dataset.labels[split.train_indices]
    xte = dataset.features[split.test_indices]
    yte = dataset.labels[split.test_indices]
    base = dict(
        dataset=dataset.name,
        method=method,
        kind=method_kind(method),
        seed=seed,
        split_digest=split.digest(),
        n_train=int(split.train_indices.size),
        n_test=int(split.test_indices.size),
    )
    context = MethodContext(
        dataset=dataset.name,
        seed=seed,
        rff_dim=config.rff_dim,
        rff_sigma=config.rff_sigma,
        pca_dim=config.pca_dim,
        poly_max_features=config.poly_max_features,
    )

    try:
        start = time.perf_counter()
        pipeline = fit_method(method, xtr, context)
        fit_ms = (time.perf_counter() - start) * 1000.0

        ztr = pipeline.transform(xtr)
        zte = pipeline.transform(xte)
        encode_ms = time_encoding(pipeline, dataset.features, config.timing_repeats)

        start = time.perf_counter()
        model = train_logistic(ztr, ytr, l2_lambda=config.probe_lambda, max_iter=config.probe_max_iter, tol=config.probe_tol, class_count=dataset.class_count)
        train_s = time.perf_counter() - start

        metrics = compute_metrics(yte, predict(model, zte), dataset.class_count)
    except InfeasibleError as e:
        logger.warning(f"{dataset.name}/{method}/{seed}: infeasible: {e}")
        return CellResult(status="infeasible", message=str(e), **base), None
    except Exception as e:
        logger.error(f"{dataset.name}/{method}/{seed}: cell failed: {e}", exc_info=True)
        return CellResult(status="error", message=str(e), **base), None

    if not model.converged:
        logger.warning(f"{dataset.name}/{method}/{seed}: probe stopped after {model.iterations} iterations, gradient norm {model.gradient_norm:.3g}")
    logger.info(f"{dataset.name}/{method}/{seed}: accuracy={metrics.accuracy:.4f} macro_f1={metrics.macro_f1:.4f} dim={pipeline.output_dim}")

    diagnostics = {}
    try:
        spectral = spectral_report(ztr)
        diagnostics = dict(
            effective_rank=spectral.effective_rank,
            normalized_erank=spectral.normalized_erank,
            condition_number=spectral.condition_number,
            condition_capped=spectral.condition_capped,
            log10_kappa=spectral.log10_kappa,
        )
    except InputValidationError as e:
        logger.warning(f"{dataset.name}/{method}/{seed}: spectral diagnostics undefined: {e}")

    cell = CellResult(
        status="ok",
        accuracy=metrics.accuracy,
        macro_f1=metrics.macro_f1,
        output_dim=pipeline.output_dim,
        probe_iterations=model.iterations,
        probe_converged=model.converged,
        encode_time_ms=encode_ms,
        fit_time_ms=fit_ms,
        train_time_s=train_s,
        **diagnostics,
        **base,
    )
    return cell, ztr if method in QIE_METHODS else None


def cka_pairs(methods: Sequence[str]) -> List[Tuple[str, str]]:
    """QIE x QIE pairs, then each QIE method against the standardized raw features."""
    qie = [m for m in QIE_METHODS if m in methods]
    pairs = [(a, b) for i, a in enumerate(qie) for b in qie[i + 1 :]]
    return pairs + [(m, "raw") for m in qie]


def _seed_cka(dataset: Dataset, split: Split, seed: int, encoded: Dict[str, np.ndarray], config: RunConfig) -> Dict[Tuple[str, str], Tuple[float, int]]:
    if not encoded:
        return {}
    xtr = dataset.features[split.train_indices]
    reps = dict(encoded)
    reps["raw"] = Standardizer().fit(xtr).transform(xtr)

    stream = derive_stream(seed, cell_label(dataset.name, "cka", seed, "subsample"))
    rows = subsample_rows(xtr.shape[0], stream, config.cka_max_rows)

    values = {}
    for a, b in cka_pairs(list(encoded)):
        if a not in reps or b not in reps:
            continue
        try:
            result = linear_cka(reps[a][rows], reps[b][rows], max_rows=rows.size)
        except InputValidationError as e:
            logger.warning(f"{dataset.name}/{seed}: CKA({a}, {b}) undefined: {e}")
            continue
        values[(a, b)] = (result.value, result.sample_count)
    return values


def _run_unit(dataset: Dataset, split: Split, seed: int, config: RunConfig):
    """All methods for one (dataset, seed); they share the split."""
    cells = []
    encoded = {}
    for method in config.methods:
        cell, ztr = _run_cell(dataset, split, method, seed, config)
        cells.append(cell)
        if ztr is not None:
            encoded[method] = ztr
    return cells, _seed_cka(dataset, split, seed, encoded, config)


def _aggregate_cka(dataset: str, per_seed: List[Dict[Tuple[str, str], Tuple[float, int]]]) -> List[CkaEntry]:
    collected: Dict[Tuple[str, str], List[Tuple[float, int]]] = {}
    for values in per_seed:
        for pair, value in values.items():
            collected.setdefault(pair, []).append(value)

    entries = []
    for (a, b), samples in collected.items():
        vals = tuple(v for v, _ in samples)
        entries.append(
            CkaEntry(
                dataset=dataset,
                method_a=a,
                method_b=b,
                mean=float(np.mean(vals)),
                sd=float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
                values=vals,
                sample_count=min(n for _, n in samples),
            )
        )
    return entries


def _load_all(config: RunConfig, report: Report) -> List[Tuple[Dataset, List[SplitRecord]]]:
    loaded = []
    for spec in config.datasets:
        try:
            dataset = load_dataset(spec, config.data_seed)
            records = []
            for seed in config.seeds:
                split = stratified_split(dataset, config.test_fraction, derive_stream(seed, cell_label(dataset.name, "*", seed, "split")))
                counts = split_counts(dataset, split)
                records.append(SplitRecord(dataset.name, seed, split, tuple(counts["train"]), tuple(counts["test"])))
        except (ValueError, OSError) as e:
            logger.error(f"Dataset {spec.name} aborted: {e}", exc_info=True)
            report.errors.append({"dataset": spec.name, "error": type(e).__name__, "message": str(e)})
            continue
        report.dataset_dims[dataset.name] = dataset.d
        report.splits.extend(records)
        loaded.append((dataset, records))
    return loaded


def _compare(report: Report, config: RunConfig):
    if len(config.seeds) < 2:
        logger.warning("Paired comparisons need at least two seeds; skipping")
        return
    for dataset in sorted(report.dataset_dims):
        cells = [c for c in report.cells if c.dataset == dataset]
        try:
            report.comparisons.extend(compare_to_best(cells, metric=config.baseline_metric, alpha=config.alpha))
        except (PairingError, InputValidationError) as e:
            logger.error(f"{dataset}: comparisons skipped: {e}")
            report.errors.append({"dataset": dataset, "error": type(e).__name__, "message": str(e)})


def run_benchmark(config: RunConfig, jobs: Optional[int] = None) -> Report:
    """
    Evaluate every (dataset, method, seed) cell of a validated config.

    Args:
        config: run configuration
        jobs: worker threads (defaults to config.jobs); results do not depend on it

    Returns:
        Report with cells in (dataset, method, seed) order
    """
    config.validate()
    workers = jobs or config.jobs
    report = Report(config=config)
    loaded = _load_all(config, report)

    units = [(dataset, record.split, record.seed) for dataset, records in loaded for record in records]
    logger.info(f"Running {len(units) * len(config.methods)} cells across {len(loaded)} dataset(s) with {workers} worker(s)")

    if workers == 1:
        outputs = [_run_unit(ds, split, seed, config) for ds, split, seed in units]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_unit, ds, split, seed, config) for ds, split, seed in units]
            outputs = [f.result() for f in futures]

    cka_by_dataset: Dict[str, List[Dict]] = {}
    for (dataset, _, _), (cells, cka_values) in zip(units, outputs):
        report.cells.extend(cells)
        cka_by_dataset.setdefault(dataset.name, []).append(cka_values)

    report.cells.sort(key=lambda c: c.key)
    report.splits.sort(key=lambda s: (s.dataset, s.seed))
    report.errors.sort(key=lambda e: (e["dataset"], e["error"]))
    for name in sorted(cka_by_dataset):
        report.cka.extend(_aggregate_cka(name, cka_by_dataset[name]))
    report.cka.sort(key=lambda e: (e.dataset, e.method_a, e.method_b))

    _compare(report, config)
    report.comparisons.sort(key=lambda c: (c.dataset, c.method))
    logger.info(f"Benchmark finished: {report.summary}")
    return report
