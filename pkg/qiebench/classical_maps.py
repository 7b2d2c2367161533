"""
Classical comparison feature maps: random Fourier features, polynomial
expansion and PCA, each with an output size chosen to match a QIE map.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist
from sklearn.preprocessing import PolynomialFeatures

from .errors import InfeasibleError, InputValidationError, NotFittedError
from .numerics import RandomStream, as_matrix, svd

logger = logging.getLogger(__name__)

MEDIAN_HEURISTIC_ROWS = 1000
PCA_RANK_TOLERANCE = 1e-10
DEFAULT_POLY_MAX_FEATURES = 10000


def median_heuristic_sigma(train, stream: RandomStream, max_rows: int = MEDIAN_HEURISTIC_ROWS) -> float:
    """Median pairwise Euclidean distance over a stream-chosen subsample of training rows."""
    x = as_matrix(train)
    rows = stream.choice_without_replacement(x.shape[0], max_rows)
    distances = pdist(x[rows])
    sigma = float(np.median(distances)) if distances.size else 0.0
    if sigma <= 0.0:
        logger.warning("Median pairwise distance is zero; falling back to sigma=1.0")
        return 1.0
    return sigma


class RFFMap:
    """
    Random Fourier features z(x)_j = sqrt(2/D) cos(w_j . x + b_j) with
    w_j ~ N(0, I / sigma^2) and b_j ~ U[0, 2 pi); <z(x), z(y)> estimates
    exp(-||x - y||^2 / (2 sigma^2)).
    """

    name = "rff"

    def __init__(self, output_dim: int, sigma: Optional[float] = None):
        if output_dim < 1:
            raise InputValidationError(f"RFF output_dim must be >= 1, got {output_dim}")
        if sigma is not None and not sigma > 0:
            raise InputValidationError(f"RFF bandwidth sigma must be > 0, got {sigma}")
        self.output_dim = int(output_dim)
        self.sigma = sigma
        self.omega_: Optional[np.ndarray] = None
        self.phase_: Optional[np.ndarray] = None

    @property
    def is_fitted(self) -> bool:
        return self.omega_ is not None

    @property
    def input_dim(self) -> int:
        if not self.is_fitted:
            raise NotFittedError("RFFMap used before fit")
        return self.omega_.shape[0]

    def draw(self, input_dim: int, stream: RandomStream) -> "RFFMap":
        if self.sigma is None:
            raise InputValidationError("RFF bandwidth must be set before drawing projections")
        self.omega_ = stream.normal(size=(input_dim, self.output_dim)) / self.sigma
        self.phase_ = stream.uniform(size=self.output_dim, low=0.0, high=2.0 * math.pi)
        return self

    def fit(self, train, stream: RandomStream) -> "RFFMap":
        x = as_matrix(train)
        if self.sigma is None:
            self.sigma = median_heuristic_sigma(x, stream)
            logger.debug(f"RFF bandwidth from median heuristic: {self.sigma:.4g}")
        return self.draw(x.shape[1], stream)

    def transform(self, X) -> np.ndarray:
        x = as_matrix(X)
        if x.shape[1] != self.input_dim:
            raise InputValidationError(f"RFFMap expects {self.input_dim} columns, got {x.shape[1]}")
        return math.sqrt(2.0 / self.output_dim) * np.cos(x @ self.omega_ + self.phase_)


def fit_rff(d: int, D: int, sigma: float, stream: RandomStream) -> RFFMap:
    if sigma is None or not sigma > 0:
        raise InputValidationError(f"RFF bandwidth sigma must be > 0, got {sigma}")
    return RFFMap(D, sigma).draw(d, stream)


def rff_transform(rff_map: RFFMap, X) -> np.ndarray:
    return rff_map.transform(X)


def poly_output_dim(d: int, degree: int) -> int:
    """Number of monomials of total degree 1..degree in d variables."""
    return math.comb(d + degree, degree) - 1


class PolyMap:
    """All monomials of degree 1..degree, graded lexicographic order, no constant term."""

    def __init__(self, degree: int, max_features: Optional[int] = DEFAULT_POLY_MAX_FEATURES):
        if degree not in (2, 3):
            raise InputValidationError(f"polynomial degree must be 2 or 3, got {degree}")
        self.degree = degree
        self.max_features = max_features
        self._expander: Optional[PolynomialFeatures] = None

    @property
    def name(self) -> str:
        return f"poly{self.degree}"

    @property
    def is_fitted(self) -> bool:
        return self._expander is not None

    @property
    def output_dim(self) -> int:
        if not self.is_fitted:
            raise NotFittedError("PolyMap used before fit")
        return int(self._expander.n_output_features_)

    def fit(self, train) -> "PolyMap":
        x = as_matrix(train)
        out_dim = poly_output_dim(x.shape[1], self.degree)
        if self.max_features is not None and out_dim > self.max_features:
            raise InfeasibleError(f"degree-{self.degree} expansion of {x.shape[1]} features gives {out_dim} columns, budget is {self.max_features}")
        self._expander = PolynomialFeatures(degree=self.degree, include_bias=False).fit(x)
        return self

    def transform(self, X) -> np.ndarray:
        if not self.is_fitted:
            raise NotFittedError("PolyMap.transform called before fit")
        return self._expander.transform(as_matrix(X))


def poly_expand(X, degree: int, max_features: Optional[int] = DEFAULT_POLY_MAX_FEATURES) -> np.ndarray:
    x = as_matrix(X)
    return PolyMap(degree, max_features).fit(x).transform(x)


class PCAMap:
    """Centered projection onto the top-k right singular vectors of the training matrix."""

    name = "pca"

    def __init__(self, target_dim: int):
        if target_dim < 1:
            raise InputValidationError(f"PCA target_dim must be >= 1, got {target_dim}")
        self.target_dim = int(target_dim)
        self.mean_: Optional[np.ndarray] = None
        self.components_: Optional[np.ndarray] = None
        self.explained_variance_: Optional[np.ndarray] = None
        self.rank_: Optional[int] = None

    @property
    def is_fitted(self) -> bool:
        return self.components_ is not None

    @property
    def output_dim(self) -> int:
        if not self.is_fitted:
            raise NotFittedError("PCAMap used before fit")
        return self.components_.shape[0]

    def fit(self, train) -> "PCAMap":
        x = as_matrix(train)
        if x.shape[0] < 2:
            raise InputValidationError(f"PCA needs at least 2 training rows, got {x.shape[0]}")
        self.mean_ = x.mean(axis=0)
        decomposition = svd(x - self.mean_)
        s = decomposition.singular_values
        self.rank_ = int(np.sum(s > PCA_RANK_TOLERANCE * s[0])) if s[0] > 0 else 0
        k = max(1, min(self.target_dim, self.rank_))
        if k < self.target_dim:
            logger.info(f"PCA target {self.target_dim} capped at numerical rank {self.rank_}")
        self.components_ = np.array(decomposition.right_vectors[:, :k].T)
        self.explained_variance_ = s[:k] ** 2 / (x.shape[0] - 1)
        return self

    def transform(self, X) -> np.ndarray:
        if not self.is_fitted:
            raise NotFittedError("PCAMap.transform called before fit")
        x = as_matrix(X)
        if x.shape[1] != self.mean_.shape[0]:
            raise InputValidationError(f"PCAMap expects {self.mean_.shape[0]} columns, got {x.shape[1]}")
        return (x - self.mean_) @ self.components_.T

    def inverse_transform(self, Z) -> np.ndarray:
        return as_matrix(Z) @ self.components_ + self.mean_


def fit_pca(train, target_dim: int) -> PCAMap:
    return PCAMap(target_dim).fit(train)


def pca_transform(pca_map: PCAMap, X) -> np.ndarray:
    return pca_map.transform(X)
