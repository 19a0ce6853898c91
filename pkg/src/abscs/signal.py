"""Sparse sources, Gaussian sensing matrices and the NMSE distortion metric."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateColumnError,
    InvalidInputError,
    InvalidShapeError,
    InvalidSparsityError,
)

COLUMN_NORM_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SparseSignal:
    """A length-M vector with at most ``sparsity_k`` nonzeros.

    ``support`` is the sorted tuple of positions the generator drew; a value
    sampled as exactly zero stays in the support.
    """

    values: np.ndarray
    support: tuple[int, ...]
    sparsity_k: int

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise InvalidShapeError("signal values must be a 1-D vector")
        support = tuple(sorted(int(i) for i in self.support))
        m = values.size
        if not 0 < self.sparsity_k < m:
            raise InvalidSparsityError(f"need 0 < k < m, got k={self.sparsity_k}, m={m}")
        if len(set(support)) != len(support) or len(support) > self.sparsity_k:
            raise InvalidSparsityError("support larger than sparsity level")
        if support and (support[0] < 0 or support[-1] >= m):
            raise InvalidSparsityError("support index out of range")
        off = np.ones(m, dtype=bool)
        off[list(support)] = False
        if np.any(values[off] != 0.0):
            raise InvalidSparsityError("nonzero value outside the support")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)

    @property
    def m(self) -> int:
        return self.values.size

    @property
    def energy(self) -> float:
        return float(self.values @ self.values)


@dataclass(frozen=True)
class SensingMatrix:
    """An N x M matrix with unit-norm columns and N < M.

    Pass ``check_shape=False`` to admit square or tall matrices (identity
    operators in tests); the column-norm invariant is always enforced.
    """

    entries: np.ndarray
    check_shape: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2:
            raise InvalidShapeError("sensing matrix must be 2-D")
        n, m = entries.shape
        if n < 1 or m < 1:
            raise InvalidShapeError("empty sensing matrix")
        if self.check_shape and not n < m:
            raise InvalidShapeError(f"sensing matrix must be under-determined, got {n}x{m}")
        norms = np.linalg.norm(entries, axis=0)
        if np.any(np.abs(norms - 1.0) > COLUMN_NORM_RTOL):
            raise DegenerateColumnError("columns must have unit Euclidean norm")
        object.__setattr__(self, "entries", np.ascontiguousarray(entries))

    @property
    def rows_n(self) -> int:
        return self.entries.shape[0]

    @property
    def cols_m(self) -> int:
        return self.entries.shape[1]

    @property
    def alpha(self) -> float:
        return self.rows_n / self.cols_m


def as_array(phi) -> np.ndarray:
    """Return the C-contiguous float64 matrix behind ``phi``."""
    if isinstance(phi, SensingMatrix):
        return phi.entries
    a = np.ascontiguousarray(phi, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidShapeError("sensing matrix must be 2-D")
    return a


def _vector(x) -> np.ndarray:
    if isinstance(x, SparseSignal):
        return x.values
    return np.asarray(x, dtype=np.float64)


def gen_sparse_signal(rng: np.random.Generator, m: int, k: int) -> SparseSignal:
    """Draw a K-sparse vector with uniformly random support and N(0, 1) nonzeros."""
    if not 0 < k < m:
        raise InvalidSparsityError(f"need 0 < k < m, got k={k}, m={m}")
    support = np.sort(rng.choice(m, size=k, replace=False))
    values = np.zeros(m)
    values[support] = rng.standard_normal(k)
    return SparseSignal(values, tuple(support.tolist()), k)


def gen_sensing_matrix(rng: np.random.Generator, n: int, m: int) -> SensingMatrix:
    """Draw entries i.i.d. N(0, 1/n), then rescale every column to unit norm."""
    if not 0 < n < m:
        raise InvalidShapeError(f"need 0 < n < m, got n={n}, m={m}")
    entries = rng.normal(0.0, math.sqrt(1.0 / n), size=(n, m))
    norms = np.sqrt(np.einsum("ij,ij->j", entries, entries))
    if np.any(norms == 0.0):
        raise DegenerateColumnError("sampled an all-zero column")
    return SensingMatrix(entries / norms)


def measure(phi, x) -> np.ndarray:
    a = as_array(phi)
    v = _vector(x)
    if v.ndim != 1 or a.shape[1] != v.size:
        raise InvalidShapeError(f"cannot apply {a.shape} matrix to length-{v.size} signal")
    return a @ v


def nmse(originals: Sequence, estimates: Sequence) -> float:
    """Ratio of summed squared errors to summed signal energies.

    Sums are exactly rounded (``math.fsum``), so the result does not depend on
    the order of the pairs.
    """
    if len(originals) != len(estimates):
        raise InvalidInputError("originals and estimates differ in length")
    if len(originals) == 0:
        raise InvalidInputError("need at least one pair")
    err, energy = [], []
    for x, xh in zip(originals, estimates):
        x, xh = _vector(x), _vector(xh)
        if x.shape != xh.shape:
            raise InvalidInputError(f"dimension mismatch {x.shape} vs {xh.shape}")
        d = x - xh
        err.append(math.fsum(d * d))
        energy.append(math.fsum(x * x))
    total = math.fsum(energy)
    if total == 0.0:
        raise ZeroDivisionError("all originals have zero energy")
    return math.fsum(err) / total
