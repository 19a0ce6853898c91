"""Scalar codebooks, bit allocation, Lloyd training and nearest-neighbor coding."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .errors import (
    BudgetTooSmallError,
    CorruptIndexError,
    DegenerateTrainingError,
    InvalidBudgetError,
    InvalidLevelsError,
    InvalidShapeError,
)

SPLIT_OFFSET = 1e-6
DISTORTION_SLACK = 1e-9


def as_fraction(value) -> Fraction:
    """Exact rational for ints, Fractions, decimal strings and floats.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, (Rational, int)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def _is_power_of_two(v: int) -> bool:
    return v >= 1 and v & (v - 1) == 0


@dataclass(frozen=True, eq=False)
class Codebook:
    """Strictly ascending reproduction values of a ``bits``-bit scalar quantizer."""

    codepoints: np.ndarray
    bits: int

    def __post_init__(self):
        c = np.array(self.codepoints, dtype=np.float64, copy=True)
        if c.ndim != 1:
            raise InvalidShapeError("codepoints must be 1-D")
        if self.bits < 0 or c.size != 1 << self.bits:
            raise InvalidLevelsError(f"{c.size} codepoints do not match {self.bits} bits")
        if not np.all(np.isfinite(c)):
            raise InvalidLevelsError("codepoints must be finite")
        if np.any(np.diff(c) <= 0):
            raise InvalidLevelsError("codepoints must be strictly increasing")
        c.flags.writeable = False
        object.__setattr__(self, "codepoints", c)

    @property
    def levels(self) -> int:
        return self.codepoints.size

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return self.bits == other.bits and np.array_equal(self.codepoints, other.codepoints)

    def __hash__(self):
        return hash((self.bits, self.codepoints.tobytes()))

    def nearest(self, values) -> np.ndarray:
        """Index of the nearest codepoint for each value; exact ties pick the lower index."""
        v = np.asarray(values, dtype=np.float64)
        c = self.codepoints
        if c.size == 1:
            return np.zeros(v.shape, dtype=np.intp)
        mid = 0.5 * (c[:-1] + c[1:])
        idx = np.searchsorted(mid, v, side="left")
        # the rounded midpoint can sit one ulp off the true one; settle
        # against the neighbours by the same |v - c| comparison a scan would use
        lo = np.maximum(idx - 1, 0)
        hi = np.minimum(idx + 1, c.size - 1)
        best = lo.copy()
        best_d = np.abs(v - c[lo])
        for cand in (idx, hi):
            d = np.abs(v - c[cand])
            better = (d < best_d) | ((d == best_d) & (cand < best))
            best = np.where(better, cand, best)
            best_d = np.where(better, d, best_d)
        return best

    def to_dict(self) -> dict:
        return {"bits": self.bits, "codepoints": [float(c) for c in self.codepoints]}

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        return cls(np.array([float(c) for c in data["codepoints"]]), int(data["bits"]))


def save_codebook(codebook: Codebook, path: str | os.PathLike) -> None:
    """Write ``{"bits": b, "codepoints": [...]}`` with 17 significant digits per value."""
    points = ",\n    ".join(f"{c:.17g}" for c in codebook.codepoints)
    text = f'{{\n  "bits": {codebook.bits},\n  "codepoints": [\n    {points}\n  ]\n}}\n'
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_codebook(path: str | os.PathLike) -> Codebook:
    with open(path, encoding="utf-8") as fh:
        return Codebook.from_dict(json.load(fh))


@dataclass(frozen=True)
class RateAllocation:
    total_bits: int
    per_entry_bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.per_entry_bits)
        if sum(bits) != self.total_bits:
            raise InvalidBudgetError("per-entry bits do not sum to the budget")
        if bits and (max(bits) - min(bits) > 1 or any(a < b for a, b in zip(bits, bits[1:]))):
            raise InvalidBudgetError("allocation must be non-increasing and differ by at most 1")
        object.__setattr__(self, "per_entry_bits", bits)

    @property
    def n(self) -> int:
        return len(self.per_entry_bits)


def split_bits(total: int, n: int) -> tuple[int, ...]:
    """Floor-plus-remainder split: the first ``total % n`` entries get one extra bit."""
    base, extra = divmod(total, n)
    return (base + 1,) * extra + (base,) * (n - extra)


def allocate_bits(m: int, r_x, n: int) -> RateAllocation:
    """Spread the ``m * r_x`` bit budget over ``n`` measurement entries."""
    if n < 1:
        raise InvalidBudgetError(f"need at least one entry, got n={n}")
    total = as_fraction(r_x) * m
    if total.denominator != 1 or total <= 0:
        raise InvalidBudgetError(f"m * r_x = {total} is not a positive integer")
    total = int(total)
    if total < n:
        raise BudgetTooSmallError(f"{total} bits cannot give each of {n} entries one bit")
    return RateAllocation(total, split_bits(total, n))


@dataclass(frozen=True)
class QuantizedVector:
    """Per-entry codebook indexes together with each entry's bit width."""

    indexes: np.ndarray
    bits: tuple[int, ...]

    def __post_init__(self):
        idx = np.array(self.indexes, dtype=np.intp, copy=True)
        bits = tuple(int(b) for b in self.bits)
        if idx.ndim != 1 or idx.size != len(bits):
            raise InvalidShapeError("one index per entry required")
        if np.any(idx < 0) or np.any(idx >= (1 << np.array(bits, dtype=np.int64))):
            raise CorruptIndexError("index outside its codebook")
        idx.flags.writeable = False
        object.__setattr__(self, "indexes", idx)
        object.__setattr__(self, "bits", bits)


def _check_codebooks(n: int, codebooks: Sequence[Codebook]) -> None:
    if len(codebooks) != n:
        raise InvalidShapeError(f"{len(codebooks)} codebooks for {n} entries")


def encode_nearest(y, codebooks: Sequence[Codebook]) -> QuantizedVector:
    y = np.asarray(y, dtype=np.float64)
    _check_codebooks(y.size, codebooks)
    idx = np.array([int(cb.nearest(v)) for v, cb in zip(y, codebooks)], dtype=np.intp)
    return QuantizedVector(idx, tuple(cb.bits for cb in codebooks))


def decode(q: QuantizedVector, codebooks: Sequence[Codebook]) -> np.ndarray:
    _check_codebooks(q.indexes.size, codebooks)
    out = np.empty(q.indexes.size)
    for n, (i, cb) in enumerate(zip(q.indexes, codebooks)):
        if not 0 <= i < cb.levels:
            raise CorruptIndexError(f"index {i} out of range for entry {n}")
        out[n] = cb.codepoints[i]
    return out


def codebooks_for(allocation: RateAllocation | Sequence[int], by_bits: dict[int, Codebook]) -> list[Codebook]:
    """Per-entry codebook list drawn from one shared codebook per bit width."""
    bits = allocation.per_entry_bits if isinstance(allocation, RateAllocation) else allocation
    return [by_bits[b] for b in bits]


def _partition(s: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Cell end offsets into sorted samples; a sample on a midpoint joins the lower cell."""
    mid = 0.5 * (c[:-1] + c[1:])
    return np.concatenate([np.searchsorted(s, mid, side="right"), [s.size]])


def _distortion(s: np.ndarray, c: np.ndarray, counts: np.ndarray) -> float:
    d = s - np.repeat(c, counts)
    return float(d @ d) / s.size


def lloyd_train(samples, levels: int, tol: float = 1e-9, max_iter: int = 1000,
                *, return_trace: bool = False):
    """Train a minimum-MSE scalar codebook with the Lloyd algorithm.

    Starts from the ``(2i + 1) / (2 * levels)`` sample quantiles and alternates
    nearest-codepoint partitioning with centroid updates until the relative
    drop in mean squared error is below ``tol`` or ``max_iter`` is reached. An
    empty cell is dropped and the cell with the largest distortion is split
    in two at its mean plus and minus ``1e-6`` sample standard deviations.

    Returns the :class:`Codebook`, plus the per-iteration distortion list when
    ``return_trace`` is set.
    """
    if not isinstance(levels, (int, np.integer)) or not _is_power_of_two(int(levels)):
        raise InvalidLevelsError(f"levels must be a power of two, got {levels}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    levels = int(levels)
    s = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    if s.size < levels:
        raise DegenerateTrainingError(f"{s.size} samples for {levels} levels")
    if not np.all(np.isfinite(s)):
        raise DegenerateTrainingError("samples must be finite")
    if 1 + np.count_nonzero(np.diff(s) > 0) < levels:
        raise DegenerateTrainingError("fewer distinct samples than levels")
    bits = levels.bit_length() - 1

    csum = np.concatenate([[0.0], np.cumsum(s)])
    offset = SPLIT_OFFSET * s.std()
    c = np.quantile(s, (2 * np.arange(levels) + 1) / (2 * levels))
    trace: list[float] = []
    for _ in range(max_iter):
        c = np.sort(c)
        ends = _partition(s, c)
        counts = np.diff(np.concatenate([[0], ends]))
        for _repair in range(levels):
            if np.all(counts > 0):
                break
            c = _split_worst_cell(s, c, ends, counts, offset)
            ends = _partition(s, c)
            counts = np.diff(np.concatenate([[0], ends]))
        else:
            raise DegenerateTrainingError("could not repair empty Lloyd cells")
        starts = ends - counts
        c = (csum[ends] - csum[starts]) / counts
        dist = _distortion(s, c, counts)
        if trace:
            prev = trace[-1]
            assert dist <= prev + DISTORTION_SLACK * prev, "Lloyd distortion increased"
            trace.append(dist)
            if prev == 0.0 or (prev - dist) / prev < tol:
                break
        else:
            trace.append(dist)
            if dist == 0.0:
                break
    cb = Codebook(c, bits)
    return (cb, trace) if return_trace else cb


def _split_worst_cell(s, c, ends, counts, offset):
    starts = ends - counts
    worst, worst_d, worst_mean = -1, -1.0, 0.0
    for i in np.flatnonzero(counts > 0):
        cell = s[starts[i]:ends[i]]
        mean = cell.mean()
        d = float(((cell - mean) ** 2).sum())
        if d > worst_d:
            worst, worst_d, worst_mean = i, d, mean
    keep = [c[i] for i in range(c.size) if counts[i] > 0 and i != worst]
    empty = int(np.count_nonzero(counts == 0))
    # every empty cell but one is dropped now and repaired on a later pass
    fill = [worst_mean - offset, worst_mean + offset]
    pad = [c[i] for i in np.flatnonzero(counts == 0)[: empty - 1]]
    return np.sort(np.array(keep + fill + pad))
