"""Sparse reconstruction: OMP as the default decoder and an exhaustive oracle.

Any callable ``recon(phi, y, k) -> x_hat`` that returns a length-M vector with
at most ``k`` nonzeros and is deterministic can stand in for
:func:`omp_reconstruct` wherever a ``recon`` argument is accepted.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._backend import kernels
from .errors import InstanceTooLargeError, InvalidShapeError, InvalidSparsityError
from .signal import as_array

ReconstructionFn = Callable[..., np.ndarray]

ORACLE_MAX_SUPPORTS = 10**6


class _Diagnostics:
    """Process-wide count of rank-deficient least-squares events in OMP."""

    def __init__(self):
        self._lock = threading.Lock()
        self.rank_deficient = 0

    def add(self, count: int) -> None:
        if count:
            with self._lock:
                self.rank_deficient += int(count)

    def reset(self) -> None:
        with self._lock:
            self.rank_deficient = 0


diagnostics = _Diagnostics()


@dataclass(frozen=True)
class OmpInfo:
    support: np.ndarray
    residual_norms: np.ndarray
    rank_deficient: bool

    @property
    def iterations(self) -> int:
        return int(self.support.size)


def _check(a: np.ndarray, y: np.ndarray, k: int) -> None:
    if y.ndim != 1 or y.size != a.shape[0]:
        raise InvalidShapeError(f"measurement length {y.size} != matrix rows {a.shape[0]}")
    if k <= 0:
        raise InvalidSparsityError(f"sparsity must be positive, got {k}")


def omp_reconstruct(phi, y, k: int, *, return_info: bool = False):
    """Recover a ``k``-sparse estimate from ``y`` by orthogonal matching pursuit.

    Each iteration picks the unselected column with the largest absolute
    correlation with the residual (lowest index on ties) and refits least
    squares on the accumulated support. Stops after ``k`` iterations, when
    the residual falls below ``1e-12 * ||y||``, or after ``n`` iterations if
    ``k`` exceeds the number of measurements (the residual is then zero).

    Parameters
    ----------
    phi : SensingMatrix or ndarray of shape (n, m)
    y : ndarray of shape (n,)
    k : int
        Sparsity level, positive.
    return_info : bool
        Also return an :class:`OmpInfo` with the support in selection order
        and the residual norm before the first and after every iteration.

    Returns
    -------
    x_hat : ndarray of shape (m,)
    info : OmpInfo, only when ``return_info`` is true
    """
    a = as_array(phi)
    y = np.ascontiguousarray(y, dtype=np.float64)
    _check(a, y, k)
    x, support, norms, deficient = kernels.omp(a, y, int(k))
    diagnostics.add(deficient)
    if return_info:
        return x, OmpInfo(support, norms, bool(deficient))
    return x


def oracle_best_ksparse(phi, y, k: int) -> np.ndarray:
    """Best ``k``-term least-squares fit by enumerating every support.

    Ties in the residual go to the lexicographically smallest support. Only
    meant for small instances: ``C(m, k)`` may not exceed 10**6.
    """
    a = as_array(phi)
    y = np.asarray(y, dtype=np.float64)
    _check(a, y, k)
    m = a.shape[1]
    k = min(k, m)
    if math.comb(m, k) > ORACLE_MAX_SUPPORTS:
        raise InstanceTooLargeError(f"C({m}, {k}) supports exceeds {ORACLE_MAX_SUPPORTS}")
    best_res, best_cols, best_coef = np.inf, None, None
    for cols in itertools.combinations(range(m), k):
        sub = a[:, cols]
        coef = np.linalg.lstsq(sub, y, rcond=None)[0]
        r = y - sub @ coef
        res = float(np.sqrt(r @ r))
        if res < best_res:
            best_res, best_cols, best_coef = res, cols, coef
    x = np.zeros(m)
    x[list(best_cols)] = best_coef
    return x


def residual_norm(phi, y, x_hat) -> float:
    r = np.asarray(y, dtype=np.float64) - as_array(phi) @ x_hat
    return float(np.sqrt(r @ r))
