"""
Numerical foundations: matrix validation, thin SVD, seeded random streams
and the Student t distribution used by the paired tests.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import stats as sp_stats

from .errors import InputValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, list, tuple]


def as_matrix(x: ArrayLike, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a 2-D float64 array, rejecting empty or non-finite input."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise InputValidationError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise InputValidationError(f"{name} must have at least one row and one column, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputValidationError(f"{name} contains non-finite entries")
    return m


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``m = U diag(s) V^T`` with ``s`` sorted nonincreasing."""

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def __post_init__(self):
        for arr in (self.singular_values, self.left_vectors, self.right_vectors):
            _readonly(arr)

    def reconstruct(self) -> np.ndarray:
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


def svd(m: ArrayLike) -> SvdResult:
    """
    Thin singular value decomposition.

    Args:
        m: finite matrix with at least one row and column

    Returns:
        SvdResult with min(rows, cols) singular values
    """
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return SvdResult(singular_values=np.array(s), left_vectors=np.array(u), right_vectors=np.array(vt.T))


def singular_values(m: ArrayLike) -> np.ndarray:
    """Singular values only, sorted nonincreasing."""
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def _label_words(label: str) -> Tuple[int, ...]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


class RandomStream:
    """
    Deterministic random source keyed by (seed, label).

    Backed by numpy's counter-based Philox bit generator, so any number of
    streams can be derived independently without shared state.
    """

    def __init__(self, seed: int, label: str):
        if seed < 0:
            raise InputValidationError(f"seed must be nonnegative, got {seed}")
        self.seed = int(seed)
        self.label = label
        seed_seq = np.random.SeedSequence(entropy=[self.seed, *_label_words(label)])
        self._generator = np.random.Generator(np.random.Philox(seed_seq))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, label={self.label!r})"

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform reals in [low, high)."""
        return self._generator.uniform(low, high, size=size)

    def normal(self, size=None, loc: float = 0.0, scale: float = 1.0):
        return self._generator.normal(loc, scale, size=size)

    def integers(self, low: int, high: Optional[int] = None, size=None):
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        """A uniformly random ordering of range(n)."""
        return self._generator.permutation(n)

    def shuffle(self, items: np.ndarray) -> np.ndarray:
        """Return a shuffled copy of ``items``."""
        items = np.asarray(items)
        return items[self.permutation(len(items))]

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from range(n), sorted ascending."""
        if k >= n:
            return np.arange(n)
        return np.sort(self._generator.choice(n, size=k, replace=False))


def derive_stream(seed: int, label: str) -> RandomStream:
    """Identical (seed, label) pairs always produce identical draws."""
    return RandomStream(seed, label)


def _check_df(df: int):
    if df < 1:
        raise InputValidationError(f"degrees of freedom must be >= 1, got {df}")


def student_t_sf(t: float, df: int) -> float:
    """One-sided survival probability P(T > t) of Student's t with ``df`` degrees of freedom."""
    _check_df(df)
    # scipy evaluates this through the regularized incomplete beta function
    return float(sp_stats.t.sf(t, df))


def student_t_two_sided(t: float, df: int) -> float:
    """Two-sided p-value 2 * min(sf, 1 - sf)."""
    sf = student_t_sf(t, df)
    return float(min(1.0, 2.0 * min(sf, 1.0 - sf)))


def student_t_ppf(q: float, df: int) -> float:
    """Quantile function of Student's t."""
    _check_df(df)
    if not 0.0 < q < 1.0:
        raise InputValidationError(f"quantile must lie in (0, 1), got {q}")
    return float(sp_stats.t.ppf(q, df))
