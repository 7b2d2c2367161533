"""
Run configuration.

A run config is a dotenv-style key-value file (parsed with python-dotenv);
process-level defaults come from QIEBENCH_* environment variables.

Example::

    DATASETS=wine,breast_cancer,parity,highrank
    METHODS=amplitude,angle,basis,raw,rff,poly2,pca
    SEEDS=7,42,99,1337,2026
    DATASET_DRYBEAN_SOURCE=csv
    DATASET_DRYBEAN_PATH=data/Dry_Bean.csv
    DATASET_DRYBEAN_LABEL=Class
"""

import logging
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values

from .data import CsvSchema, Dataset, gen_high_rank_noise, gen_parity, load_builtin, load_csv
from .errors import ConfigError
from .methods import DEFAULT_METHODS, validate_methods
from .numerics import derive_stream
from .stats import SELECTION_METRICS

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (7, 42, 99, 1337, 2026)
EXTENDED_SEEDS = (100, 200, 300, 400, 500)
DATASET_SOURCES = ("builtin", "csv", "parity", "highrank")
IMPLIED_SOURCES = {"wine": "builtin", "breast_cancer": "builtin", "parity": "parity", "highrank": "highrank"}


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_list(value: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in value.split(",") if item.strip())


def _parse_ints(value: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in _parse_list(value))


@dataclass(frozen=True)
class DatasetSpec:
    """Where one dataset comes from: a bundled table, a CSV file or a synthetic generator."""

    name: str
    source: str
    path: Optional[str] = None
    label_column: Optional[str] = None
    feature_columns: Optional[Tuple[str, ...]] = None
    class_names: Optional[Tuple[str, ...]] = None
    n: Optional[int] = None
    d: Optional[int] = None
    k: Optional[int] = None
    label_noise: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    datasets: Tuple[DatasetSpec, ...]
    methods: Tuple[str, ...] = DEFAULT_METHODS
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    test_fraction: float = 0.2
    data_seed: int = 0
    probe_lambda: float = 1.0
    probe_max_iter: int = 500
    probe_tol: float = 1e-6
    baseline_metric: str = "accuracy"
    alpha: float = 0.05
    poly_max_features: int = 10000
    rff_dim: Optional[int] = None
    rff_sigma: Optional[float] = None
    pca_dim: Optional[int] = None
    cka_max_rows: int = 2000
    timing_repeats: int = 3
    out_dir: str = "results"
    jobs: int = 1
    extras: Dict[str, str] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        """Raise ConfigError on the first invalid setting; returns self for chaining."""
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        validate_methods(self.methods)
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError(f"duplicate methods in {', '.join(self.methods)}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {', '.join(str(s) for s in self.seeds)}")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate datasets in {', '.join(names)}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"TEST_FRACTION must lie in (0, 1), got {self.test_fraction}")
        if self.baseline_metric not in SELECTION_METRICS:
            raise ConfigError(f"BASELINE_METRIC must be one of {', '.join(SELECTION_METRICS)}")
        if self.probe_lambda < 0 or self.probe_max_iter < 1 or self.probe_tol <= 0:
            raise ConfigError("probe settings need PROBE_LAMBDA >= 0, PROBE_MAX_ITER >= 1, PROBE_TOL > 0")
        if self.jobs < 1 or self.timing_repeats < 1 or self.cka_max_rows < 2:
            raise ConfigError("JOBS and TIMING_REPEATS must be >= 1, CKA_MAX_ROWS >= 2")
        if self.rff_sigma is not None and self.rff_sigma <= 0:
            raise ConfigError(f"RFF_SIGMA must be > 0, got {self.rff_sigma}")
        for spec in self.datasets:
            if spec.source not in DATASET_SOURCES:
                raise ConfigError(f"dataset {spec.name}: unknown source {spec.source!r}")
            if spec.source == "csv" and (not spec.path or not spec.label_column):
                raise ConfigError(f"dataset {spec.name}: csv source needs DATASET_{spec.name.upper()}_PATH and _LABEL")
            for size in ("n", "d", "k"):
                value = getattr(spec, size)
                if value is not None and value < 1:
                    raise ConfigError(f"dataset {spec.name}: {size} must be a positive integer, got {value}")
            if not 0.0 <= spec.label_noise < 0.5:
                raise ConfigError(f"dataset {spec.name}: label noise must lie in [0, 0.5), got {spec.label_noise}")
        return self

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides (from the CLI) and re-validate."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes).validate() if changes else self

    def select_datasets(self, names: Optional[List[str]]) -> "RunConfig":
        if not names:
            return self
        known = {d.name: d for d in self.datasets}
        unknown = [n for n in names if n not in known]
        if unknown:
            raise ConfigError(f"datasets not in config: {', '.join(unknown)}")
        return replace(self, datasets=tuple(known[n] for n in names)).validate()

    def to_dict(self) -> Dict[str, Any]:
        """Echo for the report; excludes settings that do not affect results (out_dir, jobs)."""
        data = asdict(self)
        data.pop("out_dir")
        data.pop("jobs")
        data.pop("extras")
        data["datasets"] = [{k: v for k, v in asdict(d).items() if v is not None} for d in self.datasets]
        return data


# Top-level key -> (RunConfig field, cast), the same table-driven loading as the rest of the settings
CONFIG_MAP: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "METHODS": ("methods", _parse_list),
    "SEEDS": ("seeds", _parse_ints),
    "TEST_FRACTION": ("test_fraction", float),
    "DATA_SEED": ("data_seed", int),
    "PROBE_LAMBDA": ("probe_lambda", float),
    "PROBE_MAX_ITER": ("probe_max_iter", int),
    "PROBE_TOL": ("probe_tol", float),
    "BASELINE_METRIC": ("baseline_metric", str),
    "ALPHA": ("alpha", float),
    "POLY_MAX_FEATURES": ("poly_max_features", int),
    "RFF_DIM": ("rff_dim", int),
    "RFF_SIGMA": ("rff_sigma", float),
    "PCA_DIM": ("pca_dim", int),
    "CKA_MAX_ROWS": ("cka_max_rows", int),
    "TIMING_REPEATS": ("timing_repeats", int),
    "OUT_DIR": ("out_dir", str),
    "JOBS": ("jobs", int),
}

DATASET_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "SOURCE": ("source", str),
    "PATH": ("path", str),
    "LABEL": ("label_column", str),
    "FEATURES": ("feature_columns", _parse_list),
    "CLASSES": ("class_names", _parse_list),
    "N": ("n", int),
    "D": ("d", int),
    "K": ("k", int),
    "LABEL_NOISE": ("label_noise", float),
}

ENV_DEFAULTS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "QIEBENCH_OUT_DIR": ("out_dir", str),
    "QIEBENCH_JOBS": ("jobs", int),
}


def _cast(key: str, raw: str, cast: Callable[[str], Any]) -> Any:
    try:
        return cast(raw)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"Invalid value for {key}: {raw!r} ({e})") from None


def _dataset_spec(name: str, values: Mapping[str, str], base_dir: str) -> DatasetSpec:
    prefix = f"DATASET_{name.upper()}_"
    fields: Dict[str, Any] = {"name": name, "source": IMPLIED_SOURCES.get(name)}
    for suffix, (attr, cast) in DATASET_KEYS.items():
        raw = values.get(prefix + suffix)
        if raw is not None and raw.strip() != "":
            fields[attr] = _cast(prefix + suffix, raw, cast)
    if fields["source"] is None:
        raise ConfigError(f"dataset {name}: set {prefix}SOURCE to one of {', '.join(DATASET_SOURCES)}")
    if fields.get("path") and not os.path.isabs(fields["path"]):
        fields["path"] = os.path.normpath(os.path.join(base_dir, fields["path"]))
    return DatasetSpec(**fields)


def config_from_values(values: Mapping[str, Optional[str]], base_dir: str = ".", environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Build a RunConfig from parsed key-value pairs; environment defaults apply first."""
    values = {k: v for k, v in values.items() if v is not None}
    environ = os.environ if environ is None else environ
    settings: Dict[str, Any] = {}

    for key, (attr, cast) in ENV_DEFAULTS.items():
        raw = environ.get(key)
        if raw:
            settings[attr] = _cast(key, raw, cast)

    for key, (attr, cast) in CONFIG_MAP.items():
        raw = values.get(key)
        if raw is not None and raw.strip() != "":
            settings[attr] = _cast(key, raw, cast)

    if "EXTENDED_SEEDS" in values and _cast("EXTENDED_SEEDS", values["EXTENDED_SEEDS"], _parse_bool):
        settings["seeds"] = extend_seeds(settings.get("seeds", DEFAULT_SEEDS))

    dataset_names = _parse_list(values.get("DATASETS", ""))
    settings["datasets"] = tuple(_dataset_spec(name, values, base_dir) for name in dataset_names)

    known = set(CONFIG_MAP) | {"DATASETS", "EXTENDED_SEEDS"}
    extras = {k: v for k, v in values.items() if k not in known and not k.startswith("DATASET_")}
    if extras:
        logger.warning(f"Ignoring unknown config keys: {', '.join(sorted(extras))}")
    settings["extras"] = extras
    return RunConfig(**settings).validate()


def load_config(path: str, environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Read a key-value run config file."""
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    values = dotenv_values(path)
    config = config_from_values(values, base_dir=os.path.dirname(os.path.abspath(path)), environ=environ)
    logger.info(f"Loaded config {path}: {len(config.datasets)} dataset(s), {len(config.methods)} method(s), {len(config.seeds)} seed(s)")
    return config


def extend_seeds(seeds: Tuple[int, ...]) -> Tuple[int, ...]:
    """Append the extension seeds that are not already present."""
    return tuple(seeds) + tuple(s for s in EXTENDED_SEEDS if s not in seeds)


def parse_seed_list(text: str) -> Tuple[int, ...]:
    return _cast("--seeds", text, _parse_ints)


def _given(value: Optional[int], default: int) -> int:
    return default if value is None else value


def load_dataset(spec: DatasetSpec, data_seed: int = 0) -> Dataset:
    """Materialise a DatasetSpec; synthetic generators draw from (data_seed, "<name>/generate")."""
    if spec.source == "builtin":
        return load_builtin(spec.name)
    if spec.source == "csv":
        schema = CsvSchema(label_column=spec.label_column, feature_columns=spec.feature_columns, class_names=spec.class_names)
        return load_csv(spec.path, schema, name=spec.name)

    stream = derive_stream(data_seed, f"{spec.name}/generate")
    if spec.source == "parity":
        return gen_parity(n=_given(spec.n, 10000), d=_given(spec.d, 20), k=_given(spec.k, 10), stream=stream, name=spec.name)
    if spec.source == "highrank":
        return gen_high_rank_noise(n=_given(spec.n, 5000), d=_given(spec.d, 200), stream=stream, label_noise=spec.label_noise, name=spec.name)
    raise ConfigError(f"dataset {spec.name}: unknown source {spec.source!r}")
