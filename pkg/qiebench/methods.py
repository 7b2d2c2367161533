"""
Method registry: every representation the benchmark can evaluate, its kind
(QIE or classical) and how it is fitted on a training matrix.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .classical_maps import DEFAULT_POLY_MAX_FEATURES, PCAMap, PolyMap, RFFMap
from .data import Standardizer
from .encodings import AmplitudeMap, AngleMap, BasisMap
from .errors import ConfigError
from .numerics import as_matrix, derive_stream

logger = logging.getLogger(__name__)

QIE_METHODS = ("amplitude", "angle", "basis")
CLASSICAL_METHODS = ("raw", "rff", "poly2", "poly3", "pca")
ALL_METHODS = QIE_METHODS + CLASSICAL_METHODS
DEFAULT_METHODS = ("amplitude", "angle", "basis", "raw", "rff", "poly2", "pca")


def method_kind(method: str) -> str:
    if method in QIE_METHODS:
        return "qie"
    if method in CLASSICAL_METHODS:
        return "classical"
    raise ConfigError(f"Unknown method {method!r}; choose from {', '.join(ALL_METHODS)}")


def validate_methods(methods: Sequence[str]) -> List[str]:
    for method in methods:
        method_kind(method)
    return list(methods)


def cell_label(dataset: str, method: str, seed: int, purpose: str) -> str:
    """Stream label for one cell; adding methods never shifts another cell's randomness."""
    return f"{dataset}/{method}/{seed}/{purpose}"


@dataclass(frozen=True)
class MethodContext:
    """Per-cell settings that a method may need while fitting."""

    dataset: str
    seed: int
    rff_dim: Optional[int] = None
    rff_sigma: Optional[float] = None
    pca_dim: Optional[int] = None
    poly_max_features: Optional[int] = DEFAULT_POLY_MAX_FEATURES


class FittedPipeline:
    """A chain of fitted maps applied left to right."""

    def __init__(self, method: str, steps: list):
        self.method = method
        self.steps = steps

    @property
    def kind(self) -> str:
        return method_kind(self.method)

    @property
    def output_dim(self) -> int:
        return self.steps[-1].output_dim

    def transform(self, X) -> np.ndarray:
        out = as_matrix(X)
        for step in self.steps:
            out = step.transform(out)
        return out

    def __repr__(self) -> str:
        return f"FittedPipeline({self.method!r}, steps={[type(s).__name__ for s in self.steps]})"


def matched_dim(input_dim: int) -> int:
    """Default target size for RFF and PCA: the angle encoding's 2d."""
    return 2 * input_dim


def fit_method(method: str, train, context: MethodContext) -> FittedPipeline:
    """
    Fit the named representation on training rows.

    QIE encodings consume raw features. Classical maps consume standardized
    features, the same preprocessing as the raw-linear baseline.
    """
    method_kind(method)
    x = as_matrix(train)
    if method == "amplitude":
        return FittedPipeline(method, [AmplitudeMap().fit(x)])
    if method == "angle":
        return FittedPipeline(method, [AngleMap().fit(x)])
    if method == "basis":
        return FittedPipeline(method, [BasisMap().fit(x)])

    scaler = Standardizer().fit(x)
    if method == "raw":
        return FittedPipeline(method, [scaler])

    z = scaler.transform(x)
    if method == "rff":
        stream = derive_stream(context.seed, cell_label(context.dataset, method, context.seed, "fit"))
        rff = RFFMap(context.rff_dim or matched_dim(x.shape[1]), sigma=context.rff_sigma).fit(z, stream)
        return FittedPipeline(method, [scaler, rff])
    if method in ("poly2", "poly3"):
        poly = PolyMap(int(method[-1]), max_features=context.poly_max_features).fit(z)
        return FittedPipeline(method, [scaler, poly])
    pca = PCAMap(context.pca_dim or matched_dim(x.shape[1])).fit(z)
    return FittedPipeline(method, [scaler, pca])
