"""Analysis-by-synthesis quantization of CS measurements.

Each measurement index is chosen by synthesizing the decoder's reconstruction
for every candidate codepoint and keeping the one whose reconstruction lands
closest to a local estimate ``x_tilde`` of the source. Entries are revisited
one at a time (a coordinate-descent sweep) until the objective settles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ._backend import kernels
from .errors import InstanceTooLargeError, InvalidShapeError
from .quantization import Codebook, QuantizedVector, decode, encode_nearest
from .reconstruction import diagnostics as recon_diagnostics
from .reconstruction import omp_reconstruct
from .signal import as_array

JOINT_MAX_COMBINATIONS = 2**20
INIT_MODES = ("random-codepoint", "nearest-neighbor")


def surrogate_objective(x_hat, x_tilde) -> float:
    """``||x_hat||^2 - 2 x_tilde . x_hat``, i.e. ``||x_tilde - x_hat||^2`` minus a constant."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x_hat.shape != x_tilde.shape:
        raise InvalidShapeError("x_hat and x_tilde differ in shape")
    return float(x_hat @ x_hat - 2.0 * (x_tilde @ x_hat))


@dataclass(frozen=True)
class AbsConfig:
    gamma: float = 1e-6
    max_outer_iters: int = 20
    init_mode: str = "random-codepoint"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass
class AbsState:
    """Synthesized quantized measurements ``z`` and their codebook indexes.

    ``incumbent`` and ``winner`` hold, per entry, the objective of the
    codepoint held before the latest visit and of the one chosen by it.
    """

    z: np.ndarray
    indexes: np.ndarray
    objective: float = float("nan")
    recon_calls: int = 0
    incumbent: np.ndarray | None = field(default=None, repr=False)
    winner: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_indexes(cls, indexes, codebooks: Sequence[Codebook]) -> "AbsState":
        idx = np.array(indexes, dtype=np.intp)
        z = np.array([cb.codepoints[i] for i, cb in zip(idx, codebooks)])
        return cls(z, idx)

    def quantized(self, codebooks: Sequence[Codebook]) -> QuantizedVector:
        return QuantizedVector(self.indexes, tuple(cb.bits for cb in codebooks))


@dataclass
class AbsDiagnostics:
    iterations: int
    recon_calls: int
    objective_trace: list[float]
    sweep_calls: list[int]
    x_tilde: np.ndarray = field(repr=False)
    x_hat: np.ndarray = field(repr=False)
    coordinate_trace: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)


def _flatten(codebooks: Sequence[Codebook]):
    sizes = np.array([cb.levels for cb in codebooks], dtype=np.intp)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
    flat = np.ascontiguousarray(np.concatenate([cb.codepoints for cb in codebooks]))
    return flat, offsets


def abs_sweep(codebooks: Sequence[Codebook], x_tilde, state: AbsState, recon=omp_reconstruct,
              phi=None, k: int | None = None) -> AbsState:
    """Revisit every entry once, in ascending order, and return the new state.

    For entry ``n`` every codepoint of ``codebooks[n]`` is substituted into
    ``z[n]`` with the other entries held, the reconstruction ``recon(phi, z, k)``
    is synthesized and scored with :func:`surrogate_objective`; the lowest
    score wins (lowest index on ties) and is written back before moving on.
    Exactly ``sum(2**bits)`` reconstructions are performed.
    """
    if phi is None or k is None:
        raise TypeError("abs_sweep needs phi and k")
    a = as_array(phi)
    x_tilde = np.ascontiguousarray(x_tilde, dtype=np.float64)
    n = a.shape[0]
    if len(codebooks) != n or state.z.size != n or x_tilde.size != a.shape[1]:
        raise InvalidShapeError("codebooks, state and phi disagree on dimensions")
    z = np.array(state.z, dtype=np.float64)
    idx = np.array(state.indexes, dtype=np.intp)

    if recon is omp_reconstruct:
        flat, offsets = _flatten(codebooks)
        incumbent, winner, calls, deficient = kernels.abs_sweep_omp(
            a, flat, offsets, x_tilde, z, idx, int(k))
        recon_diagnostics.add(deficient)
    else:
        incumbent, winner, calls = _sweep_generic(codebooks, x_tilde, z, idx, recon, a, k)
    return AbsState(z, idx, float(winner[-1]), state.recon_calls + int(calls), incumbent, winner)


def _sweep_generic(codebooks, x_tilde, z, idx, recon, a, k):
    n = z.size
    incumbent, winner = np.empty(n), np.empty(n)
    calls = 0
    for e, cb in enumerate(codebooks):
        held = idx[e]
        best, best_val = 0, np.inf
        for i, c in enumerate(cb.codepoints):
            z[e] = c
            val = surrogate_objective(recon(a, z, k), x_tilde)
            calls += 1
            if i == held:
                incumbent[e] = val
            if val < best_val:
                best, best_val = i, val
        z[e] = cb.codepoints[best]
        idx[e] = best
        winner[e] = best_val
    return incumbent, winner, calls


def initial_state(y, codebooks: Sequence[Codebook], mode: str, rng: np.random.Generator | None) -> AbsState:
    if mode == "nearest-neighbor":
        return AbsState.from_indexes(encode_nearest(y, codebooks).indexes, codebooks)
    if mode == "random-codepoint":
        if rng is None:
            raise ValueError("random-codepoint initialisation needs an rng")
        sizes = np.array([cb.levels for cb in codebooks], dtype=np.int64)
        return AbsState.from_indexes(rng.integers(0, sizes), codebooks)
    raise ValueError(f"unknown init_mode {mode!r}")


def abs_quantize(y, phi, k: int, codebooks: Sequence[Codebook], cfg: AbsConfig | None = None,
                 recon=omp_reconstruct, rng: np.random.Generator | None = None):
    """Quantize ``y`` by sequential analysis-by-synthesis.

    The local estimate ``x_tilde = recon(phi, y, k)`` is computed once. The
    objective before the first sweep is the score of the initial ``z``, which
    the first sweep evaluates anyway as entry 0's incumbent, so it costs no
    extra reconstruction. Sweeps repeat until two consecutive objectives
    differ by at most ``cfg.gamma`` or ``cfg.max_outer_iters`` sweeps ran.

    Returns ``(QuantizedVector, AbsDiagnostics)``.
    """
    cfg = cfg or AbsConfig()
    y = np.asarray(y, dtype=np.float64)
    if len(codebooks) != y.size:
        raise InvalidShapeError(f"{len(codebooks)} codebooks for {y.size} measurements")
    x_tilde = np.asarray(recon(phi, y, k), dtype=np.float64)
    state = initial_state(y, codebooks, cfg.init_mode, rng)
    state = replace(state, recon_calls=1)

    trace: list[float] = []
    sweep_calls: list[int] = []
    coords = []
    for _ in range(cfg.max_outer_iters):
        before = state.recon_calls
        state = abs_sweep(codebooks, x_tilde, state, recon, phi, k)
        sweep_calls.append(state.recon_calls - before)
        coords.append((state.incumbent, state.winner))
        if not trace:
            trace.append(float(state.incumbent[0]))
        trace.append(state.objective)
        if abs(trace[-1] - trace[-2]) <= cfg.gamma:
            break

    x_hat = recon(phi, state.z, k)
    diag = AbsDiagnostics(
        iterations=len(sweep_calls),
        recon_calls=state.recon_calls,
        objective_trace=trace,
        sweep_calls=sweep_calls,
        x_tilde=x_tilde,
        x_hat=np.asarray(x_hat, dtype=np.float64),
        coordinate_trace=coords,
    )
    return state.quantized(codebooks), diag


def encoding_objective(q: QuantizedVector, codebooks: Sequence[Codebook], phi, k: int, x_tilde,
                       recon=omp_reconstruct) -> float:
    """Surrogate objective reached by decoding ``q`` and reconstructing."""
    return surrogate_objective(recon(phi, decode(q, codebooks), k), x_tilde)


def exhaustive_joint_encode(y, phi, k: int, codebooks: Sequence[Codebook],
                            recon=omp_reconstruct, x_tilde=None) -> QuantizedVector:
    """Jointly optimal indexes for the surrogate objective, by enumeration.

    Every index tuple is decoded and reconstructed; the minimiser wins, with
    ties going to the lexicographically smallest tuple. Capped at 2**20
    tuples. ``x_tilde`` defaults to ``recon(phi, y, k)``.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(codebooks) != y.size:
        raise InvalidShapeError(f"{len(codebooks)} codebooks for {y.size} measurements")
    total = 1
    for cb in codebooks:
        total *= cb.levels
    if total > JOINT_MAX_COMBINATIONS:
        raise InstanceTooLargeError(f"{total} index combinations exceed {JOINT_MAX_COMBINATIONS}")
    a = as_array(phi)
    if x_tilde is None:
        x_tilde = recon(a, y, k)
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    best, best_val = None, np.inf
    z = np.empty(y.size)
    for combo in itertools.product(*(range(cb.levels) for cb in codebooks)):
        for e, (i, cb) in enumerate(zip(combo, codebooks)):
            z[e] = cb.codepoints[i]
        val = surrogate_objective(recon(a, z, k), x_tilde)
        if best is None or val < best_val:
            best, best_val = combo, val
    return QuantizedVector(np.array(best, dtype=np.intp), tuple(cb.bits for cb in codebooks))
