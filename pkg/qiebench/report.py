"""
Report emission: canonical results.json, CSV tables and markdown rendering.

Every table except timing.csv is derived from the canonical results dict, so
the same renderers serve a fresh run and a results.json read back from disk.
"""

import csv
import io
import json
import logging
import math
import os
from collections import defaultdict
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import InputValidationError, ReportWriteError
from .methods import QIE_METHODS, method_kind

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12

CELL_COLUMNS = (
    "dataset",
    "method",
    "kind",
    "seed",
    "status",
    "accuracy",
    "macro_f1",
    "output_dim",
    "effective_rank",
    "normalized_erank",
    "condition_number",
    "log10_kappa",
    "condition_capped",
    "probe_iterations",
    "probe_converged",
    "split_digest",
    "n_train",
    "n_test",
    "message",
)
COMPARISON_COLUMNS = (
    "dataset",
    "method",
    "baseline",
    "metric",
    "n_seeds",
    "method_mean",
    "baseline_mean",
    "mean_difference",
    "ci_low",
    "ci_high",
    "t_statistic",
    "t_pvalue",
    "wilcoxon_statistic",
    "wilcoxon_pvalue",
    "wilcoxon_exact",
    "cohens_d",
    "significant",
    "outcome",
    "flags",
)
CKA_COLUMNS = ("dataset", "method_a", "method_b", "mean", "sd", "n_seeds", "sample_count")
FOREST_COLUMNS = ("method", "dataset", "d", "ci_low", "ci_high")
SPECTRAL_COLUMNS = (
    "dataset",
    "method",
    "kind",
    "output_dim",
    "effective_rank",
    "normalized_erank",
    "log10_kappa",
    "condition_capped",
    "accuracy",
    "gap_vs_best_classical",
    "gap_vs_raw",
)
TIMING_COLUMNS = ("dataset", "method", "seed", "encode_time_ms", "fit_time_ms", "train_time_s")


def _round(value: float) -> Optional[float]:
    if not math.isfinite(value):
        return None
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def canonicalize(obj: Any) -> Any:
    """Plain JSON types only: floats rounded, non-finite floats as null, tuples as lists."""
    if isinstance(obj, dict):
        return {str(k): canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonicalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonicalize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    return obj


def to_json(data: Dict[str, Any]) -> str:
    return json.dumps(canonicalize(data), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def _csv_text(columns: Sequence[str], rows: Iterable[Dict[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in columns])
    return buffer.getvalue()


def _finite(values: Iterable[Optional[float]]) -> List[float]:
    return [float(v) for v in values if v is not None and math.isfinite(v)]


def _mean(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = _finite(values)
    return float(np.mean(vals)) if vals else None


def _sd(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = _finite(values)
    if not vals:
        return None
    return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0


def _ok_cells(data: Dict[str, Any]) -> List[Dict[str, Any]]:
    return [c for c in data["cells"] if c["status"] == "ok"]


def _by_method(data: Dict[str, Any]) -> Dict[tuple, List[Dict[str, Any]]]:
    groups = defaultdict(list)
    for cell in _ok_cells(data):
        groups[(cell["dataset"], cell["method"])].append(cell)
    return groups


def _best_classical(groups: Dict[tuple, List[Dict[str, Any]]], dataset: str, metric: str = "accuracy") -> Optional[str]:
    means = {m: _mean(c[metric] for c in cells) for (ds, m), cells in groups.items() if ds == dataset and method_kind(m) == "classical"}
    means = {m: v for m, v in means.items() if v is not None}
    if not means:
        return None
    return sorted(means, key=lambda m: (-means[m], m))[0]


def comparison_rows(data: Dict[str, Any]) -> List[Dict[str, Any]]:
    rows = []
    for c in data["comparisons"]:
        ci = c.get("ci95") or [None, None]
        rows.append(
            {
                **c,
                "n_seeds": len(c["seeds"]),
                "method_mean": _mean(c["method_scores"]),
                "baseline_mean": _mean(c["baseline_scores"]),
                "ci_low": ci[0],
                "ci_high": ci[1],
            }
        )
    return rows


def cka_rows(data: Dict[str, Any]) -> List[Dict[str, Any]]:
    return [{**e, "n_seeds": len(e["values"])} for e in data["cka"]]


def forest_rows(data: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Cohen's d per comparison with the mean-difference CI rescaled into d units."""
    rows = []
    for c in data["comparisons"]:
        diffs = np.subtract(c["method_scores"], c["baseline_scores"])
        sd = float(np.std(diffs, ddof=1)) if diffs.size > 1 else 0.0
        ci = c.get("ci95") or [None, None]
        low = high = None
        if sd > 0 and ci[0] is not None and ci[1] is not None:
            low, high = ci[0] / sd, ci[1] / sd
        rows.append({"method": c["method"], "dataset": c["dataset"], "d": c["cohens_d"], "ci_low": low, "ci_high": high})
    return rows


def spectral_rows(data: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Per (dataset, method) seed means of the spectral diagnostics and accuracy gaps."""
    groups = _by_method(data)
    rows = []
    for (dataset, method), cells in sorted(groups.items()):
        accuracy = _mean(c["accuracy"] for c in cells)
        best = _best_classical(groups, dataset)
        best_acc = _mean(c["accuracy"] for c in groups[(dataset, best)]) if best else None
        raw_cells = groups.get((dataset, "raw"))
        raw_acc = _mean(c["accuracy"] for c in raw_cells) if raw_cells else None
        rows.append(
            {
                "dataset": dataset,
                "method": method,
                "kind": cells[0]["kind"],
                "output_dim": cells[0]["output_dim"],
                "effective_rank": _mean(c["effective_rank"] for c in cells),
                "normalized_erank": _mean(c["normalized_erank"] for c in cells),
                "log10_kappa": _mean(c["log10_kappa"] for c in cells),
                "condition_capped": any(c["condition_capped"] for c in cells),
                "accuracy": accuracy,
                "gap_vs_best_classical": accuracy - best_acc if best_acc is not None else None,
                "gap_vs_raw": accuracy - raw_acc if raw_acc is not None else None,
            }
        )
    return rows


def render_csv(data: Dict[str, Any]) -> str:
    """The cells table of a results dict."""
    return _csv_text(CELL_COLUMNS, data["cells"])


def _write(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        raise ReportWriteError(path, e.strerror or str(e)) from e


def emit_report(report, out_dir: str) -> List[str]:
    """
    Write results.json, cells.csv, comparisons.csv, cka.csv, forest.csv,
    spectral.csv and timing.csv into out_dir.

    The config is validated before anything is written. results.json holds
    no wall-clock values, so identical configs give identical bytes.

    Returns:
        paths written, in the order above
    """
    report.config.validate()
    data = canonicalize(report.to_dict())
    timings = [c.to_dict(include_timing=True) for c in report.cells if c.status == "ok"]

    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise ReportWriteError(out_dir, e.strerror or str(e)) from e

    outputs = {
        "results.json": to_json(data),
        "cells.csv": render_csv(data),
        "comparisons.csv": _csv_text(COMPARISON_COLUMNS, comparison_rows(data)),
        "cka.csv": _csv_text(CKA_COLUMNS, cka_rows(data)),
        "forest.csv": _csv_text(FOREST_COLUMNS, forest_rows(data)),
        "spectral.csv": _csv_text(SPECTRAL_COLUMNS, spectral_rows(data)),
        "timing.csv": _csv_text(TIMING_COLUMNS, timings),
    }
    written = []
    for filename, text in outputs.items():
        path = os.path.join(out_dir, filename)
        _write(path, text)
        written.append(path)
    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written


def load_report_json(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Results file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as e:
            raise InputValidationError(f"{path} is not valid JSON: {e}") from None
    missing = [key for key in ("schema_version", "cells", "comparisons", "cka") if key not in data]
    if missing:
        raise InputValidationError(f"{path} is not a results file (missing {', '.join(missing)})")
    return data


def load_timing_csv(path: str) -> List[Dict[str, Any]]:
    """Rows of a timing.csv with numeric columns parsed; empty when the file is absent."""
    if not os.path.isfile(path):
        return []
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    for row in rows:
        for col in TIMING_COLUMNS[3:]:
            row[col] = float(row[col])
    return rows


def _pm(values: Iterable[Optional[float]], digits: int = 3) -> str:
    values = list(values)
    mean, sd = _mean(values), _sd(values)
    if mean is None:
        return "n/a"
    return f"{mean:.{digits}f} ± {sd:.{digits}f}"


def _num(value: Optional[float], digits: int = 3) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    lines += ["| " + " | ".join(str(v) for v in row) + " |" for row in rows]
    return lines + [""]


def render_markdown(data: Dict[str, Any], timing_rows: Optional[List[Dict[str, Any]]] = None) -> str:
    """Human-readable summary tables of a results dict."""
    groups = _by_method(data)
    datasets = sorted({c["dataset"] for c in data["cells"]})
    methods = sorted({c["method"] for c in data["cells"]}, key=lambda m: (method_kind(m) != "qie", m))
    qie = [m for m in QIE_METHODS if m in methods]
    lines = [f"# qiebench results (version {data.get('version', '?')})", ""]

    lines += ["## Accuracy", ""]
    rows = []
    for ds in datasets:
        best = _best_classical(groups, ds)
        row = [ds] + [_pm(c["accuracy"] for c in groups.get((ds, m), [])) for m in qie]
        row.append(f"{_pm(c['accuracy'] for c in groups[(ds, best)])} ({best})" if best else "n/a")
        rows.append(row)
    lines += _table(["dataset", *qie, "best classical"], rows)

    lines += ["## All methods", ""]
    rows = []
    for ds in datasets:
        for m in methods:
            cells = groups.get((ds, m))
            if not cells:
                rows.append([ds, m, "n/a", "n/a", "n/a"])
                continue
            rows.append([ds, m, cells[0]["output_dim"], _pm(c["accuracy"] for c in cells), _pm(c["macro_f1"] for c in cells)])
    lines += _table(["dataset", "method", "dim", "accuracy", "macro F1"], rows)

    if "amplitude" in qie:
        lines += ["## Amplitude spectrum", ""]
        dims = {d["name"]: d["d"] for d in data.get("datasets", [])}
        rows = []
        for ds in datasets:
            cells = groups.get((ds, "amplitude"), [])
            if cells:
                rows.append(
                    [
                        ds,
                        dims.get(ds, "?"),
                        cells[0]["output_dim"],
                        _pm((c["effective_rank"] for c in cells), 2),
                        _pm((c["normalized_erank"] for c in cells), 3),
                        _pm((c["log10_kappa"] for c in cells), 2),
                    ]
                )
        lines += _table(["dataset", "d", "dim", "erank", "erank / dim", "log10 kappa"], rows)

    cka = {(e["dataset"], e["method_a"], e["method_b"]): e for e in data["cka"]}
    if "angle" in qie:
        lines += ["## CKA(angle, raw)", ""]
        rows = [[ds, f"{_num(e['mean'])} ± {_num(e['sd'])}"] for ds in datasets if (e := cka.get((ds, "angle", "raw")))]
        lines += _table(["dataset", "CKA"], rows)

    pairs = [(a, b) for i, a in enumerate(qie) for b in qie[i + 1 :]]
    if pairs:
        lines += ["## Pairwise QIE CKA", ""]
        rows = []
        for ds in datasets:
            row = [ds]
            for a, b in pairs:
                e = cka.get((ds, a, b))
                row.append(f"{_num(e['mean'])} ± {_num(e['sd'])}" if e else "n/a")
            rows.append(row)
        lines += _table(["dataset", *(f"{a}/{b}" for a, b in pairs)], rows)

    if data["comparisons"]:
        lines += ["## Comparisons against the best classical baseline", ""]
        rows = []
        for r in comparison_rows(data):
            ci = f"[{_num(r['ci_low'], 4)}, {_num(r['ci_high'], 4)}]"
            rows.append(
                [
                    r["dataset"],
                    r["method"],
                    r["baseline"],
                    _num(r["mean_difference"], 4),
                    ci,
                    _num(r["t_pvalue"], 4),
                    _num(r["wilcoxon_pvalue"], 4),
                    _num(r["cohens_d"], 2),
                    r["outcome"],
                ]
            )
        lines += _table(["dataset", "method", "baseline", "mean diff", "95% CI", "t p", "Wilcoxon p", "d", "outcome"], rows)
        summary = data.get("summary", {})
        lines += [f"{summary.get('worse', 0)} of {summary.get('comparisons', 0)} significantly worse, {summary.get('better', 0)} better.", ""]

    if timing_rows:
        lines += ["## Overhead", ""]
        by_method = defaultdict(list)
        for row in timing_rows:
            by_method[row["method"]].append(row)
        rows = [
            [
                m,
                _num(_mean(r["encode_time_ms"] for r in by_method[m]), 2),
                _num(_mean(r["fit_time_ms"] for r in by_method[m]), 2),
                _num(_mean(r["train_time_s"] for r in by_method[m]), 3),
            ]
            for m in sorted(by_method, key=lambda m: (method_kind(m) != "qie", m))
        ]
        lines += _table(["method", "encode ms", "fit ms", "probe s"], rows)

    if data.get("errors"):
        lines += ["## Errors", ""]
        lines += [f"- {e['dataset']}: {e['error']}: {e['message']}" for e in data["errors"]]
        lines.append("")
    return "\n".join(lines)
