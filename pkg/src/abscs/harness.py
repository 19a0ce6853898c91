"""Monte-Carlo experiment runner.

Every trial draws its own ``(x, phi, y)`` from a stream derived from
``(master_seed, alpha, trial_id)`` only, so all methods see the same instance
and results do not depend on how trials are spread over worker processes.
"""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

import numpy as np

from .abs_quantizer import INIT_MODES, AbsConfig, abs_quantize
from .baselines import magnitude_budget, position_bits, support_set_decode, support_set_encode
from .errors import AbsCsError, ConfigError
from .quantization import (
    Codebook,
    RateAllocation,
    allocate_bits,
    as_fraction,
    codebooks_for,
    decode,
    encode_nearest,
    lloyd_train,
)
from .reconstruction import omp_reconstruct
from .signal import gen_sensing_matrix, gen_sparse_signal, measure

log = logging.getLogger(__name__)

METHODS = ("abs", "nearest-neighbor", "support-set")

AGGREGATE_HEADER = ["method", "alpha", "r_x", "n", "r_y_base", "trials", "nmse", "nmse_db",
                    "mean_iterations", "mean_recon_calls"]
TRIAL_HEADER = ["method", "alpha", "r_x", "trial_id", "squared_error", "signal_energy",
                "iterations", "recon_calls"]

# spawn_key prefixes keeping the derived streams apart
_DATA, _INIT, _TRAIN, _GAUSS = 1, 2, 3, 4


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def measurements_for(m: int, alpha) -> int:
    """Round ``alpha * m`` to the nearest integer, halves up."""
    return math.floor(as_fraction(alpha) * m + Fraction(1, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    m: int = 128
    k: int = 9
    r_x: Fraction = Fraction(3, 4)
    alphas: tuple[Fraction, ...] = (Fraction(1, 4),)
    rates: tuple[Fraction, ...] = ()
    rate_alpha: Fraction = Fraction(1, 4)
    trials: int = 100
    master_seed: int = 0
    gamma: float = 1e-6
    methods: tuple[str, ...] = METHODS
    init_mode: str = "nearest-neighbor"
    max_outer_iters: int = 20
    codebook_samples: int = 10**6
    lloyd_tol: float = 1e-9
    lloyd_max_iter: int = 1000
    workers: int = 1

    def __post_init__(self):
        conv = {
            "r_x": as_fraction(self.r_x),
            "rate_alpha": as_fraction(self.rate_alpha),
            "alphas": tuple(as_fraction(a) for a in self.alphas),
            "rates": tuple(as_fraction(r) for r in self.rates),
            "methods": tuple(self.methods),
        }
        for name, value in conv.items():
            object.__setattr__(self, name, value)
        self.validate()

    def validate(self) -> None:
        if not 0 < self.k < self.m:
            raise ConfigError(f"need 0 < k < m, got k={self.k}, m={self.m}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.methods:
            raise ConfigError("no methods selected")
        for name in self.methods:
            if name not in METHODS:
                raise ConfigError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(f"unknown init_mode {self.init_mode!r}")
        if not self.gamma > 0 or self.max_outer_iters < 1:
            raise ConfigError("gamma must be positive and max_outer_iters at least 1")
        if self.codebook_samples < 1 or self.workers < 1:
            raise ConfigError("codebook_samples and workers must be positive")
        if "support-set" in self.methods:
            try:
                position_bits(self.m)
            except AbsCsError as exc:
                raise ConfigError(str(exc)) from exc
        if not self.points():
            raise ConfigError("empty sweep: give alphas and/or rates")
        for alpha, r_x in self.points():
            if not 0 < alpha <= 1:
                raise ConfigError(f"alpha {alpha} outside (0, 1]")
            n = measurements_for(self.m, alpha)
            if not 0 < n < self.m:
                raise ConfigError(f"alpha {alpha} gives n={n}; need 0 < n < m")
            try:
                allocate_bits(self.m, r_x, n)
            except AbsCsError as exc:
                raise ConfigError(f"alpha={alpha}, r_x={r_x}: {exc}") from exc

    def points(self) -> list[tuple[Fraction, Fraction]]:
        """The alpha sweep at ``r_x`` followed by the rate sweep at ``rate_alpha``."""
        out = [(a, self.r_x) for a in self.alphas]
        out += [(self.rate_alpha, r) for r in self.rates]
        seen, unique = set(), []
        for p in out:
            if p not in seen:
                seen.add(p)
                unique.append(p)
        return unique

    def abs_config(self) -> AbsConfig:
        return AbsConfig(self.gamma, self.max_outer_iters, self.init_mode)


_LIST_KEYS = {"alphas", "rates", "methods"}
_INT_KEYS = {"m", "k", "trials", "master_seed", "max_outer_iters", "codebook_samples",
             "lloyd_max_iter", "workers"}
_FLOAT_KEYS = {"gamma", "lloyd_tol"}
_FRACTION_KEYS = {"r_x", "rate_alpha"}


def parse_config_text(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from ``key = value`` lines under an ``[experiment]`` section.

    Lists are comma separated; rationals may be written ``0.75`` or ``3/4``.
    """
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError("config needs an [experiment] section")
    known = {f.name for f in fields(ExperimentConfig)}
    values: dict = {}
    for key, raw in parser.items("experiment"):
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = raw
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kwargs = {}
    try:
        for key, raw in values.items():
            if not isinstance(raw, str):
                kwargs[key] = raw
            elif key in _LIST_KEYS:
                items = [s.strip() for s in raw.split(",") if s.strip()]
                kwargs[key] = tuple(items if key == "methods" else (as_fraction(s) for s in items))
            elif key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _FRACTION_KEYS:
                kwargs[key] = as_fraction(raw)
            else:
                kwargs[key] = raw.strip()
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), overrides)


@dataclass(frozen=True)
class PointSetup:
    """Everything a trial at one sweep point needs; shared read-only across workers."""

    alpha: Fraction
    r_x: Fraction
    n: int
    allocation: RateAllocation
    codebooks: tuple[Codebook, ...]
    gaussian: dict[int, Codebook] = field(default_factory=dict)


@dataclass(frozen=True)
class TrialRecord:
    method: str
    alpha: Fraction
    r_x: Fraction
    trial_id: int
    squared_error: float
    signal_energy: float
    iterations: int
    recon_calls: int


def _seed(cfg: ExperimentConfig, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.master_seed, spawn_key=tuple(int(v) for v in key))


def trial_streams(cfg: ExperimentConfig, alpha, trial_id: int):
    """Independent generators for the instance draw and for AbS initialisation."""
    a = as_fraction(alpha)
    data = np.random.default_rng(_seed(cfg, _DATA, a.numerator, a.denominator, trial_id))
    init = np.random.default_rng(_seed(cfg, _INIT, a.numerator, a.denominator, trial_id))
    return data, init


def draw_instance(rng: np.random.Generator, m: int, k: int, n: int):
    x = gen_sparse_signal(rng, m, k)
    phi = gen_sensing_matrix(rng, n, m)
    return x, phi, measure(phi, x)


def training_seed(master_seed: int, n: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(_TRAIN, n))


def measurement_samples(m: int, k: int, n: int, count: int, seed) -> np.ndarray:
    """``count`` pooled measurement entries from fresh draws of the signal model."""
    rng = np.random.default_rng(seed)
    draws = -(-count // n)
    out = np.empty(draws * n)
    for d in range(draws):
        out[d * n:(d + 1) * n] = draw_instance(rng, m, k, n)[2]
    return out[:count]


class CodebookCache:
    """Trains each codebook once per (n, bits) and each Gaussian codebook once per width."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._samples: dict[int, np.ndarray] = {}
        self._books: dict[tuple[int, int], Codebook] = {}
        self._gauss_samples: np.ndarray | None = None
        self._gauss: dict[int, Codebook] = {}

    def _train(self, samples, bits):
        return lloyd_train(samples, 1 << bits, self.cfg.lloyd_tol, self.cfg.lloyd_max_iter)

    def measurement(self, n: int, bits: int) -> Codebook:
        if (n, bits) not in self._books:
            if n not in self._samples:
                cfg = self.cfg
                self._samples[n] = measurement_samples(
                    cfg.m, cfg.k, n, cfg.codebook_samples, training_seed(cfg.master_seed, n))
            log.info("training %d-bit codebook for n=%d", bits, n)
            self._books[n, bits] = self._train(self._samples[n], bits)
        return self._books[n, bits]

    def gaussian(self, bits: int) -> Codebook:
        if bits not in self._gauss:
            if self._gauss_samples is None:
                rng = np.random.default_rng(_seed(self.cfg, _GAUSS))
                self._gauss_samples = rng.standard_normal(self.cfg.codebook_samples)
            log.info("training %d-bit Gaussian codebook", bits)
            self._gauss[bits] = self._train(self._gauss_samples, bits)
        return self._gauss[bits]


def prepare_point(cfg: ExperimentConfig, alpha, r_x=None, cache: CodebookCache | None = None) -> PointSetup:
    alpha = as_fraction(alpha)
    r_x = cfg.r_x if r_x is None else as_fraction(r_x)
    cache = cache or CodebookCache(cfg)
    n = measurements_for(cfg.m, alpha)
    alloc = allocate_bits(cfg.m, r_x, n)
    by_bits = {b: cache.measurement(n, b) for b in sorted(set(alloc.per_entry_bits))}
    gaussian = {}
    if "support-set" in cfg.methods:
        widths = magnitude_budget(cfg.m, cfg.k, alloc.total_bits) or ()
        gaussian = {b: cache.gaussian(b) for b in sorted(set(widths))}
    return PointSetup(alpha, r_x, n, alloc, tuple(codebooks_for(alloc, by_bits)), gaussian)


def run_trial(cfg: ExperimentConfig, setup: PointSetup, method: str, trial_id: int) -> TrialRecord:
    """Encode, decode and reconstruct one instance with ``method``; record the squared error."""
    data_rng, init_rng = trial_streams(cfg, setup.alpha, trial_id)
    x, phi, y = draw_instance(data_rng, cfg.m, cfg.k, setup.n)
    iterations, calls = 0, 0
    if method == "nearest-neighbor":
        q = encode_nearest(y, setup.codebooks)
        x_hat = omp_reconstruct(phi, decode(q, setup.codebooks), cfg.k)
    elif method == "abs":
        _, diag = abs_quantize(y, phi, cfg.k, setup.codebooks, cfg.abs_config(), rng=init_rng)
        x_hat = diag.x_hat
        iterations, calls = diag.iterations, diag.recon_calls
    elif method == "support-set":
        x_tilde = omp_reconstruct(phi, y, cfg.k)
        calls = 1
        code = support_set_encode(x_tilde, cfg.k, setup.allocation.total_bits, setup.gaussian)
        x_hat = None if code is None else support_set_decode(code, cfg.m, setup.gaussian)
    else:
        raise ConfigError(f"unknown method {method!r}")
    energy = math.fsum(x.values * x.values)
    if x_hat is None:
        err = energy
    else:
        d = x.values - x_hat
        err = math.fsum(d * d)
    return TrialRecord(method, setup.alpha, setup.r_x, trial_id, err, energy, iterations, calls)


def _run_task(task):
    cfg, setup, method, trial_id = task
    return run_trial(cfg, setup, method, trial_id)


@dataclass
class ExperimentResult:
    rows: list[dict]
    records: list[TrialRecord]


def aggregate(setup: PointSetup, method: str, records: list[TrialRecord]) -> dict:
    """NMSE as a ratio of summed errors to summed energies (not a mean of ratios)."""
    total_err = math.fsum(r.squared_error for r in records)
    total_energy = math.fsum(r.signal_energy for r in records)
    value = total_err / total_energy
    t = len(records)
    return {
        "method": method,
        "alpha": setup.alpha,
        "r_x": setup.r_x,
        "n": setup.n,
        "r_y_base": setup.allocation.total_bits // setup.n,
        "trials": t,
        "nmse": value,
        "nmse_db": 10.0 * math.log10(value) if value > 0 else -math.inf,
        "mean_iterations": math.fsum(r.iterations for r in records) / t,
        "mean_recon_calls": math.fsum(r.recon_calls for r in records) / t,
    }


def run_experiment(cfg: ExperimentConfig, out_csv=None, per_trial_csv=None) -> ExperimentResult:
    """Run every (method, point, trial), aggregate per (method, point), write CSVs.

    Rows are ordered by method (config order), then sweep point, then trial.
    """
    cache = CodebookCache(cfg)
    setups = [prepare_point(cfg, a, r, cache) for a, r in cfg.points()]
    tasks = [(cfg, s, meth, t) for meth in cfg.methods for s in setups for t in range(cfg.trials)]
    log.info("running %d trials on %d worker(s)", len(tasks), cfg.workers)
    if cfg.workers > 1:
        chunk = max(1, len(tasks) // (4 * cfg.workers))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=chunk))
    else:
        records = [_run_task(t) for t in tasks]

    rows = []
    for i, meth in enumerate(cfg.methods):
        for j, s in enumerate(setups):
            start = (i * len(setups) + j) * cfg.trials
            rows.append(aggregate(s, meth, records[start:start + cfg.trials]))
    result = ExperimentResult(rows, records)
    if out_csv is not None:
        write_text(out_csv, aggregate_csv(rows))
    if per_trial_csv is not None:
        write_text(per_trial_csv, trial_csv(records))
    return result


def aggregate_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_HEADER)
    for r in rows:
        w.writerow([r["method"], fmt(r["alpha"]), fmt(r["r_x"]), r["n"], r["r_y_base"], r["trials"],
                    fmt(r["nmse"]), fmt(r["nmse_db"]), fmt(r["mean_iterations"]),
                    fmt(r["mean_recon_calls"])])
    return buf.getvalue()


def trial_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_HEADER)
    for r in records:
        w.writerow([r.method, fmt(r.alpha), fmt(r.r_x), r.trial_id, fmt(r.squared_error),
                    fmt(r.signal_energy), r.iterations, r.recon_calls])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
