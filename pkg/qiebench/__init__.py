"""qiebench: classical benchmarking of quantum-inspired feature encodings."""

from ._version import SCHEMA_VERSION, __version__
from .config import DatasetSpec, RunConfig, load_config, load_dataset
from .errors import (
    ConfigError,
    CsvParseError,
    DatasetNotFoundError,
    InfeasibleError,
    InputValidationError,
    NotFittedError,
    PairingError,
    QieBenchError,
    ReportWriteError,
    StratificationError,
    UnknownLabelError,
)
from .harness import CellResult, Report, run_benchmark, time_encoding
from .report import emit_report, load_report_json, render_csv, render_markdown

__all__ = [
    "SCHEMA_VERSION",
    "__version__",
    "CellResult",
    "ConfigError",
    "CsvParseError",
    "DatasetNotFoundError",
    "DatasetSpec",
    "InfeasibleError",
    "InputValidationError",
    "NotFittedError",
    "PairingError",
    "QieBenchError",
    "Report",
    "ReportWriteError",
    "RunConfig",
    "StratificationError",
    "UnknownLabelError",
    "emit_report",
    "load_config",
    "load_dataset",
    "load_report_json",
    "render_csv",
    "render_markdown",
    "run_benchmark",
    "time_encoding",
]
