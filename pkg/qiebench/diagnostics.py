"""
Representation geometry: effective rank, condition number and linear CKA.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputValidationError
from .numerics import RandomStream, as_matrix, derive_stream, singular_values

logger = logging.getLogger(__name__)

ERANK_FLOOR = 1e-15
KAPPA_RELATIVE_THRESHOLD = 1e-12
KAPPA_CAP = 1e15
CKA_MAX_ROWS = 2000
DEFAULT_SUBSAMPLE_LABEL = "cka/subsample"


@dataclass(frozen=True)
class ConditionNumber:
    value: float
    capped: bool

    @property
    def log10(self) -> float:
        return math.log10(self.value)


@dataclass(frozen=True)
class SpectralReport:
    effective_rank: float
    condition_number: float
    condition_capped: bool
    log10_kappa: float
    normalized_erank: float
    output_dim: int


@dataclass(frozen=True)
class CkaValue:
    value: float
    sample_count: int


def _nonzero_spectrum(X) -> np.ndarray:
    s = singular_values(X)
    if s[0] <= 0.0:
        raise InputValidationError("spectral diagnostics are undefined for an all-zero matrix")
    return s


def effective_rank(X) -> float:
    """exp of the Shannon entropy of the singular values normalised to sum to one."""
    return _effective_rank_from(_nonzero_spectrum(X))


def _effective_rank_from(s: np.ndarray) -> float:
    p = s / s.sum()
    p = p[p >= ERANK_FLOOR]
    return float(math.exp(-np.sum(p * np.log(p))))


def condition_number(X) -> ConditionNumber:
    """
    sigma_max / sigma_min over singular values >= 1e-12 * sigma_max. When only
    sigma_max survives in a matrix with more than one singular value, the value
    is capped at 1e15 and flagged.
    """
    return _condition_from(_nonzero_spectrum(X))


def _condition_from(s: np.ndarray) -> ConditionNumber:
    kept = s[s >= KAPPA_RELATIVE_THRESHOLD * s[0]]
    if kept.size == 1 and s.size > 1:
        return ConditionNumber(value=KAPPA_CAP, capped=True)
    return ConditionNumber(value=float(kept[0] / kept[-1]), capped=False)


def spectral_report(X) -> SpectralReport:
    """Effective rank and conditioning of an encoded matrix, uncentered (as the probe sees it)."""
    x = as_matrix(X)
    s = _nonzero_spectrum(x)
    erank = _effective_rank_from(s)
    kappa = _condition_from(s)
    return SpectralReport(
        effective_rank=erank,
        condition_number=kappa.value,
        condition_capped=kappa.capped,
        log10_kappa=kappa.log10,
        normalized_erank=erank / x.shape[1],
        output_dim=x.shape[1],
    )


def subsample_rows(n: int, stream: Optional[RandomStream], max_rows: int = CKA_MAX_ROWS) -> np.ndarray:
    """Row indices to use for CKA; all rows when n <= max_rows. Without a stream a fixed one is used."""
    if max_rows < 2:
        raise InputValidationError(f"CKA needs max_rows >= 2, got {max_rows}")
    if n <= max_rows:
        return np.arange(n)
    if stream is None:
        stream = derive_stream(0, DEFAULT_SUBSAMPLE_LABEL)
    return stream.choice_without_replacement(n, max_rows)


def linear_cka(X, Y, stream: Optional[RandomStream] = None, max_rows: int = CKA_MAX_ROWS) -> CkaValue:
    """
    Linear centered kernel alignment between two representations of the same rows:
    ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F) with column-centred Xc, Yc.
    """
    x = as_matrix(X, name="X")
    y = as_matrix(Y, name="Y")
    if x.shape[0] != y.shape[0]:
        raise InputValidationError(f"CKA needs matching rows, got {x.shape[0]} and {y.shape[0]}")
    rows = subsample_rows(x.shape[0], stream, max_rows)
    xc = x[rows] - x[rows].mean(axis=0)
    yc = y[rows] - y[rows].mean(axis=0)
    norm_x = np.linalg.norm(xc.T @ xc)
    norm_y = np.linalg.norm(yc.T @ yc)
    if norm_x == 0.0 or norm_y == 0.0:
        raise InputValidationError("CKA is undefined for a zero-variance representation")
    cross = np.linalg.norm(yc.T @ xc) ** 2
    value = float(np.clip(cross / (norm_x * norm_y), 0.0, 1.0))
    return CkaValue(value=value, sample_count=int(rows.size))
