"""
Quantum-inspired encodings implemented as deterministic classical feature maps.

All three follow the same fit/transform protocol as the classical maps:
statistics come from the training rows only, transform is pure.
"""

import logging
import math
from typing import Optional

import numpy as np

from .data import CONSTANT_TOLERANCE, MinMaxScaler
from .errors import InputValidationError, NotFittedError
from .numerics import as_matrix

logger = logging.getLogger(__name__)

AMPLITUDE_EPSILON = 1e-12
BITS_PER_FEATURE = 8
QUANT_LEVELS = 2**BITS_PER_FEATURE - 1


def next_power_of_two(d: int) -> int:
    """2^ceil(log2 d) for d >= 1."""
    if d < 1:
        raise InputValidationError(f"dimension must be >= 1, got {d}")
    return 1 << (d - 1).bit_length()


class _FittedMap:
    """Shared fit bookkeeping for the encoding maps."""

    name = "map"

    def __init__(self):
        self.input_dim_: Optional[int] = None

    @property
    def is_fitted(self) -> bool:
        return self.input_dim_ is not None

    @property
    def input_dim(self) -> int:
        self._require_fit()
        return self.input_dim_

    def _require_fit(self):
        if not self.is_fitted:
            raise NotFittedError(f"{type(self).__name__}.transform called before fit")

    def _check_input(self, X) -> np.ndarray:
        self._require_fit()
        x = as_matrix(X)
        if x.shape[1] != self.input_dim_:
            raise InputValidationError(f"{type(self).__name__} expects {self.input_dim_} columns, got {x.shape[1]}")
        return x


class AmplitudeMap(_FittedMap):
    """
    Row-wise L2 normalisation x / (||x|| + eps) followed by zero padding to the
    next power of two. Magnitude information is erased by construction.
    """

    name = "amplitude"

    def __init__(self, epsilon: float = AMPLITUDE_EPSILON):
        super().__init__()
        self.epsilon = epsilon

    @property
    def output_dim(self) -> int:
        return next_power_of_two(self.input_dim)

    def fit(self, train) -> "AmplitudeMap":
        # No statistics: only the width is recorded
        self.input_dim_ = as_matrix(train).shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        x = self._check_input(X)
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        out = np.zeros((x.shape[0], self.output_dim))
        out[:, : x.shape[1]] = x / (norms + self.epsilon)
        return out


class AngleMap(_FittedMap):
    """
    Each min-max scaled feature x~ in [-1, 1] becomes the pair
    (cos(theta/2), sin(theta/2)) with theta = pi * x~.
    """

    name = "angle"

    def __init__(self):
        super().__init__()
        self.scaler_: Optional[MinMaxScaler] = None

    @property
    def output_dim(self) -> int:
        return 2 * self.input_dim

    def fit(self, train) -> "AngleMap":
        self.scaler_ = MinMaxScaler().fit(train)
        self.input_dim_ = self.scaler_.input_dim
        return self

    def transform(self, X) -> np.ndarray:
        x = self._check_input(X)
        half_theta = 0.5 * math.pi * self.scaler_.transform(x)
        out = np.empty((x.shape[0], self.output_dim))
        out[:, 0::2] = np.cos(half_theta)
        out[:, 1::2] = np.sin(half_theta)
        return out


class BasisMap(_FittedMap):
    """
    8-bit quantisation of every feature against its training range, emitted
    most significant bit first. Outputs are exactly 0.0 or 1.0.
    """

    name = "basis"

    def __init__(self):
        super().__init__()
        self.min_: Optional[np.ndarray] = None
        self.max_: Optional[np.ndarray] = None

    @property
    def output_dim(self) -> int:
        return BITS_PER_FEATURE * self.input_dim

    def fit(self, train) -> "BasisMap":
        x = as_matrix(train)
        if x.shape[0] < 2:
            raise InputValidationError(f"BasisMap needs at least 2 training rows, got {x.shape[0]}")
        self.min_ = x.min(axis=0)
        self.max_ = x.max(axis=0)
        self.input_dim_ = x.shape[1]
        return self

    def quantize(self, X) -> np.ndarray:
        """Integer levels in [0, 255]; round half up, out-of-range values clamp, constant columns give 0."""
        x = self._check_input(X)
        span = self.max_ - self.min_
        constant = span < CONSTANT_TOLERANCE
        levels = np.floor(QUANT_LEVELS * (x - self.min_) / np.where(constant, 1.0, span) + 0.5)
        levels = np.clip(levels, 0, QUANT_LEVELS).astype(np.int64)
        levels[:, constant] = 0
        return levels

    def transform(self, X) -> np.ndarray:
        levels = self.quantize(X)
        shifts = np.arange(BITS_PER_FEATURE - 1, -1, -1)
        bits = (levels[:, :, None] >> shifts) & 1
        return bits.reshape(levels.shape[0], self.output_dim).astype(np.float64)


def fit_amplitude(train) -> AmplitudeMap:
    return AmplitudeMap().fit(train)


def amplitude_encode(amp_map: AmplitudeMap, X) -> np.ndarray:
    return amp_map.transform(X)


def fit_angle(train) -> AngleMap:
    return AngleMap().fit(train)


def angle_encode(angle_map: Optional[AngleMap], X) -> np.ndarray:
    if angle_map is None:
        raise NotFittedError("angle_encode needs a map returned by fit_angle")
    return angle_map.transform(X)


def fit_basis(train) -> BasisMap:
    return BasisMap().fit(train)


def basis_encode(basis_map: Optional[BasisMap], X) -> np.ndarray:
    if basis_map is None:
        raise NotFittedError("basis_encode needs a map returned by fit_basis")
    return basis_map.transform(X)
