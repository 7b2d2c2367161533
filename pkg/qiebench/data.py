"""
Datasets: CSV ingestion, bundled UCI tables, synthetic control tasks,
stratified splits and the train-fitted scalers used by every feature map.
"""

import csv
import hashlib
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.preprocessing import MinMaxScaler as SkMinMaxScaler

from .errors import CsvParseError, DatasetNotFoundError, InputValidationError, NotFittedError, StratificationError, UnknownLabelError
from .numerics import RandomStream, as_matrix

logger = logging.getLogger(__name__)

# Columns whose spread falls below this are treated as constant
CONSTANT_TOLERANCE = 1e-12

BUILTIN_DATASETS = ("wine", "breast_cancer")


@dataclass(frozen=True)
class Dataset:
    """A named feature matrix with integer class ids in [0, class_count)."""

    name: str
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    class_names: Tuple[str, ...] = ()
    feature_names: Tuple[str, ...] = ()

    def __post_init__(self):
        features = as_matrix(np.array(self.features, dtype=np.float64), name=f"{self.name} features")
        labels = np.array(self.labels)
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise InputValidationError(f"{self.name}: expected {features.shape[0]} labels, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise InputValidationError(f"{self.name}: labels must be integers, got {labels.dtype}")
        labels = labels.astype(np.int64)
        if self.class_count < 2:
            raise InputValidationError(f"{self.name}: at least 2 classes are required, got {self.class_count}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise InputValidationError(f"{self.name}: label ids must lie in [0, {self.class_count})")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if not self.class_names:
            object.__setattr__(self, "class_names", tuple(str(c) for c in range(self.class_count)))
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{j}" for j in range(features.shape[1])))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)


@dataclass(frozen=True)
class CsvSchema:
    """Which CSV columns hold features and labels, plus an optional ordered class-name list."""

    label_column: str
    feature_columns: Optional[Tuple[str, ...]] = None
    class_names: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class Split:
    """Disjoint sorted train/test row indices covering every row of a dataset."""

    train_indices: np.ndarray
    test_indices: np.ndarray

    def __post_init__(self):
        self.train_indices.setflags(write=False)
        self.test_indices.setflags(write=False)

    def digest(self) -> str:
        """Short fingerprint of the split, identical for identical index sets."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.train_indices, dtype=np.int64).tobytes())
        h.update(b"|")
        h.update(np.ascontiguousarray(self.test_indices, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def _label_order(values: Sequence[str]) -> List[str]:
    unique = sorted(set(values))
    try:
        return sorted(unique, key=lambda v: float(v))
    except ValueError:
        return unique


def load_csv(path: str, schema: CsvSchema, name: Optional[str] = None) -> Dataset:
    """
    Load a header-first UTF-8 CSV file into a Dataset.

    Args:
        path: CSV file path
        schema: label column, optional feature column order and class names
        name: dataset name (defaults to the file stem)

    Returns:
        Dataset whose feature columns follow the schema order
    """
    if not os.path.isfile(path):
        raise DatasetNotFoundError(f"Dataset file not found: {path}")

    name = name or os.path.splitext(os.path.basename(path))[0]
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if schema.label_column not in header:
            raise InputValidationError(f"{path}: label column {schema.label_column!r} not in header")
        feature_columns = list(schema.feature_columns) if schema.feature_columns else [c for c in header if c != schema.label_column]
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise InputValidationError(f"{path}: feature columns missing from header: {', '.join(missing)}")
        if not feature_columns:
            raise InputValidationError(f"{path}: no feature columns")

        rows: List[List[float]] = []
        raw_labels: List[str] = []
        for row_number, record in enumerate(reader, start=1):
            values = []
            for column in feature_columns:
                cell = (record.get(column) or "").strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise CsvParseError(path, row_number, column, cell) from None
                if not math.isfinite(value):
                    raise CsvParseError(path, row_number, column, cell)
                values.append(value)
            rows.append(values)
            raw_labels.append((record.get(schema.label_column) or "").strip())

    if not rows:
        raise InputValidationError(f"{path}: no data rows")

    class_names = list(schema.class_names) if schema.class_names else _label_order(raw_labels)
    class_index = {label: i for i, label in enumerate(class_names)}
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, value in enumerate(raw_labels):
        if value not in class_index:
            raise UnknownLabelError(path, i + 1, value)
        labels[i] = class_index[value]

    dataset = Dataset(
        name=name,
        features=np.array(rows, dtype=np.float64),
        labels=labels,
        class_count=len(class_names),
        class_names=tuple(class_names),
        feature_names=tuple(feature_columns),
    )
    logger.info(f"Loaded {name} from {path}: {dataset.n}x{dataset.d}, {dataset.class_count} classes")
    return dataset


def load_builtin(name: str) -> Dataset:
    """UCI Wine or Breast Cancer as shipped with scikit-learn (no download)."""
    from sklearn import datasets as sk_datasets

    loaders = {"wine": sk_datasets.load_wine, "breast_cancer": sk_datasets.load_breast_cancer}
    if name not in loaders:
        raise InputValidationError(f"Unknown built-in dataset {name!r}; choose from {', '.join(BUILTIN_DATASETS)}")
    bunch = loaders[name]()
    dataset = Dataset(
        name=name,
        features=np.asarray(bunch.data, dtype=np.float64),
        labels=np.asarray(bunch.target, dtype=np.int64),
        class_count=len(bunch.target_names),
        class_names=tuple(str(c) for c in bunch.target_names),
        feature_names=tuple(str(c) for c in bunch.feature_names),
    )
    logger.info(f"Loaded built-in {name}: {dataset.n}x{dataset.d}, {dataset.class_count} classes")
    return dataset


def write_csv(dataset: Dataset, path: str, label_column: str = "label"):
    """Write features plus a label column, header first."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([*dataset.feature_names, label_column])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    logger.info(f"Wrote {dataset.name} ({dataset.n}x{dataset.d}) to {path}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: Dataset, test_fraction: float, stream: RandomStream) -> Split:
    """
    Per-class random split; each class sends round(count * test_fraction) rows to test,
    clamped so both sides keep at least one row of every class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InputValidationError(f"test_fraction must lie in (0, 1), got {test_fraction}")

    counts = ds.class_counts()
    too_small = [str(ds.class_names[c]) for c in range(ds.class_count) if 0 < counts[c] < 2]
    if too_small:
        raise StratificationError(f"{ds.name}: classes with fewer than 2 samples cannot be stratified: {', '.join(too_small)}")

    test_parts = []
    for c in range(ds.class_count):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        n_test = min(max(_round_half_up(members.size * test_fraction), 1), members.size - 1)
        order = stream.permutation(members.size)
        test_parts.append(members[order[:n_test]])

    test = np.sort(np.concatenate(test_parts))
    mask = np.ones(ds.n, dtype=bool)
    mask[test] = False
    return Split(train_indices=np.flatnonzero(mask), test_indices=test)


def gen_parity(n: int = 10000, d: int = 20, k: int = 10, stream: Optional[RandomStream] = None, name: str = "parity") -> Dataset:
    """
    Uniform +-1 vectors labelled by the parity of their first k coordinates:
    label 1 iff the product of those coordinates is negative.
    """
    if k > d:
        raise InputValidationError(f"parity order k={k} exceeds dimension d={d}")
    if k < 1 or n < 2:
        raise InputValidationError(f"parity needs k >= 1 and n >= 2, got k={k}, n={n}")
    if stream is None:
        raise InputValidationError("gen_parity requires a RandomStream")
    features = stream.integers(0, 2, size=(n, d)).astype(np.float64) * 2.0 - 1.0
    labels = (np.prod(features[:, :k], axis=1) < 0).astype(np.int64)
    return Dataset(name=name, features=features, labels=labels, class_count=2, class_names=("even", "odd"))


def gen_high_rank_noise(
    n: int = 5000, d: int = 200, stream: Optional[RandomStream] = None, label_noise: float = 0.0, name: str = "highrank"
) -> Dataset:
    """
    Isotropic standard-normal features labelled by the side of a random hyperplane
    through the origin, with an optional fraction of flipped labels.
    """
    if stream is None:
        raise InputValidationError("gen_high_rank_noise requires a RandomStream")
    if not 0.0 <= label_noise < 0.5:
        raise InputValidationError(f"label_noise must lie in [0, 0.5), got {label_noise}")
    if n <= d:
        logger.warning(f"high-rank noise with n={n} <= d={d} cannot fill the feature space")
    direction = stream.normal(size=d)
    direction /= np.linalg.norm(direction)
    features = stream.normal(size=(n, d))
    labels = (features @ direction > 0).astype(np.int64)
    if label_noise > 0:
        flip = stream.uniform(size=n) < label_noise
        labels = np.where(flip, 1 - labels, labels)
    return Dataset(name=name, features=features, labels=labels, class_count=2)


def _fit_rows(train, what: str) -> np.ndarray:
    x = np.asarray(train, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InputValidationError(f"{what} needs a non-empty 2-D training matrix")
    if x.shape[0] < 2:
        raise InputValidationError(f"{what} needs at least 2 training rows, got {x.shape[0]}")
    return as_matrix(x)


def _check_width(X, expected: int, what: str) -> np.ndarray:
    x = as_matrix(X)
    if x.shape[1] != expected:
        raise InputValidationError(f"{what} was fitted on {expected} columns, got {x.shape[1]}")
    return x


class Standardizer:
    """Per-column (x - mean) / sample std, fitted on training rows; constant columns map to 0."""

    def __init__(self):
        self.mean_: Optional[np.ndarray] = None
        self.scale_: Optional[np.ndarray] = None
        self.constant_: Optional[np.ndarray] = None

    @property
    def is_fitted(self) -> bool:
        return self.mean_ is not None

    @property
    def input_dim(self) -> int:
        self._require_fit()
        return self.mean_.shape[0]

    @property
    def output_dim(self) -> int:
        return self.input_dim

    def _require_fit(self):
        if not self.is_fitted:
            raise NotFittedError("Standardizer.transform called before fit")

    def fit(self, train) -> "Standardizer":
        x = _fit_rows(train, "Standardizer")
        std = x.std(axis=0, ddof=1)
        self.mean_ = x.mean(axis=0)
        self.constant_ = std < CONSTANT_TOLERANCE
        self.scale_ = np.where(self.constant_, 1.0, std)
        return self

    def transform(self, X) -> np.ndarray:
        self._require_fit()
        x = _check_width(X, self.input_dim, "Standardizer")
        out = (x - self.mean_) / self.scale_
        out[:, self.constant_] = 0.0
        return out


class MinMaxScaler:
    """Maps the training min/max of each column to -1/+1; values outside the range are clamped."""

    def __init__(self):
        self.scaler_: Optional[SkMinMaxScaler] = None
        self.constant_: Optional[np.ndarray] = None

    @property
    def is_fitted(self) -> bool:
        return self.scaler_ is not None

    @property
    def min_(self) -> Optional[np.ndarray]:
        return None if self.scaler_ is None else self.scaler_.data_min_

    @property
    def max_(self) -> Optional[np.ndarray]:
        return None if self.scaler_ is None else self.scaler_.data_max_

    @property
    def input_dim(self) -> int:
        self._require_fit()
        return int(self.scaler_.n_features_in_)

    @property
    def output_dim(self) -> int:
        return self.input_dim

    def _require_fit(self):
        if not self.is_fitted:
            raise NotFittedError("MinMaxScaler.transform called before fit")

    def fit(self, train) -> "MinMaxScaler":
        x = _fit_rows(train, "MinMaxScaler")
        self.scaler_ = SkMinMaxScaler(feature_range=(-1.0, 1.0), clip=True).fit(x)
        self.constant_ = self.scaler_.data_range_ < CONSTANT_TOLERANCE
        return self

    def transform(self, X) -> np.ndarray:
        self._require_fit()
        x = _check_width(X, self.input_dim, "MinMaxScaler")
        scaled = self.scaler_.transform(x)
        scaled[:, self.constant_] = 0.0
        return scaled


def fit_standardizer(train) -> Standardizer:
    return Standardizer().fit(train)


def standardize(s: Standardizer, X) -> np.ndarray:
    return s.transform(X)


def fit_minmax(train) -> MinMaxScaler:
    return MinMaxScaler().fit(train)


def minmax_transform(s: MinMaxScaler, X) -> np.ndarray:
    return s.transform(X)


def split_counts(ds: Dataset, split: Split) -> Dict[str, List[int]]:
    """Per-class row counts on each side of a split."""
    return {
        "train": np.bincount(ds.labels[split.train_indices], minlength=ds.class_count).tolist(),
        "test": np.bincount(ds.labels[split.test_indices], minlength=ds.class_count).tolist(),
    }
