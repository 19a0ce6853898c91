"""Acceptance criteria C1-C10.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible even under
pytest's output capture) and then asserts. Tolerances are fixed here and never
tuned to the outcome. Run ``pytest tests/test_acceptance.py -v`` to see only
these, or ``pytest -m "not slow"`` to skip the Monte-Carlo ones.
"""

import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from abscs import BACKEND
from abscs.abs_quantizer import (
    AbsConfig,
    AbsState,
    abs_quantize,
    abs_sweep,
    encoding_objective,
    exhaustive_joint_encode,
)
from abscs.harness import ExperimentConfig, run_experiment
from abscs.quantization import allocate_bits, encode_nearest, lloyd_train
from abscs.reconstruction import omp_reconstruct, oracle_best_ksparse, residual_norm

from conftest import gaussian_codebook, make_instance
from oracles import lloyd_max_gaussian, per_coordinate_replay

# fixed up front for the Monte-Carlo criteria; not tuned
MASTER_SEED = 1
REL = 1e-9


@pytest.fixture
def report(capsys):
    def emit(tag, ok, what, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {tag}: {what}" + (f" | {detail}" if detail else ""))
        return ok
    return emit


def _le(a, b, rel=REL):
    """a <= b up to a relative slack."""
    return a <= b + rel * max(1.0, abs(a), abs(b))


def test_backend_is_compiled():
    # the Monte-Carlo criteria are sized for the compiled kernels
    assert BACKEND in ("compiled", "python")
    if BACKEND != "compiled":
        pytest.skip("compiled kernels unavailable; running on the numpy fallback")


def test_c1_per_coordinate_optimality(report):
    books = [gaussian_codebook(2, spread=0.5)] * 4
    mismatches = 0
    for seed in range(100):
        _, phi, y = make_instance(seed, 8, 4, 2)
        xt = omp_reconstruct(phi, y, 2)
        start = np.random.default_rng(10_000 + seed).integers(0, 4, size=4)
        got = abs_sweep(books, xt, AbsState.from_indexes(start, books), phi=phi, k=2)
        want = per_coordinate_replay(books, xt, start, omp_reconstruct, phi, 2)
        mismatches += got.indexes.tolist() != want
    ok = report("C1", mismatches == 0, "per-coordinate argmin equals brute force (100 instances, m=8 n=4 k=2, 2 bits)",
                f"mismatching instances={mismatches}")
    assert ok


def test_c2_descent_invariants(report):
    books = [gaussian_codebook(2)] * 16
    cfg = AbsConfig(gamma=1e-6, max_outer_iters=20, init_mode="random-codepoint")
    coord_bad = outer_bad = chain_bad = over = 0
    max_iters = 0
    for seed in range(100):
        _, phi, y = make_instance(seed, 64, 16, 4)
        _, diag = abs_quantize(y, phi, 4, books, cfg, rng=np.random.default_rng(seed))
        tr = diag.objective_trace
        outer_bad += sum(not _le(b, a) for a, b in zip(tr, tr[1:]))
        for inc, win in diag.coordinate_trace:
            coord_bad += sum(not _le(w, i) for i, w in zip(inc, win))
            # the objective after entry e is the starting point for entry e + 1
            chain_bad += sum(abs(i - w) > REL * max(1.0, abs(w)) for w, i in zip(win[:-1], inc[1:]))
        over += diag.iterations > cfg.max_outer_iters
        max_iters = max(max_iters, diag.iterations)
    ok = report("C2", coord_bad == outer_bad == chain_bad == over == 0,
                "objective non-increasing per coordinate and per sweep; terminates (100 runs, m=64 n=16 k=4)",
                f"coordinate violations={coord_bad} sweep violations={outer_bad} "
                f"chain mismatches={chain_bad} max sweeps={max_iters}/{cfg.max_outer_iters}")
    assert ok


def test_c3_oracle_dominance(report):
    books = [gaussian_codebook(2, spread=0.5)] * 4
    cfg = AbsConfig(init_mode="nearest-neighbor")
    joint_bad = nn_bad = 0
    for seed in range(50):
        _, phi, y = make_instance(500 + seed, 8, 4, 2)
        q, diag = abs_quantize(y, phi, 2, books, cfg)
        xt = diag.x_tilde
        a = encoding_objective(q, books, phi, 2, xt)
        j = encoding_objective(exhaustive_joint_encode(y, phi, 2, books, x_tilde=xt), books, phi, 2, xt)
        nn = encoding_objective(encode_nearest(y, books), books, phi, 2, xt)
        joint_bad += not _le(j, a)
        nn_bad += not _le(a, nn)
    ok = report("C3", joint_bad == nn_bad == 0,
                "exhaustive <= AbS <= nearest-neighbor surrogate (50 instances, 256 combinations each)",
                f"exhaustive>AbS: {joint_bad}, AbS>NN: {nn_bad}")
    assert ok


def test_c4_complexity_accounting(report):
    # R_x = 40 bits over 16 measurements: eight 3-bit and eight 2-bit entries
    alloc = allocate_bits(64, Fraction(5, 8), 16)
    assert sorted(set(alloc.per_entry_bits)) == [2, 3]
    books = [gaussian_codebook(b) for b in alloc.per_entry_bits]
    expect = sum(1 << b for b in alloc.per_entry_bits)
    bad = 0
    sweeps = 0
    for seed in range(30):
        _, phi, y = make_instance(seed, 64, 16, 4)
        _, diag = abs_quantize(y, phi, 4, books, AbsConfig(init_mode="random-codepoint"),
                               rng=np.random.default_rng(seed))
        bad += any(c != expect for c in diag.sweep_calls)
        bad += diag.recon_calls != 1 + expect * diag.iterations
        sweeps += diag.iterations
    ok = report("C4", bad == 0, "reconstructions per sweep equal sum of 2^bits on a mixed 3/2-bit allocation",
                f"expected {expect} per sweep; {sweeps} sweeps checked, {bad} mismatches")
    assert ok


@pytest.fixture(scope="module")
def alpha_sweep():
    cfg = ExperimentConfig(m=128, k=9, r_x=Fraction(3, 4), alphas=("0.1", "0.25", "0.5", "0.75"),
                           trials=100, master_seed=MASTER_SEED, methods=("abs", "nearest-neighbor"))
    return run_experiment(cfg).rows


@pytest.mark.slow
def test_c5_desk_scale_gain(report):
    cfg = ExperimentConfig(m=128, k=9, r_x=Fraction(3, 4), alphas=(Fraction(1, 4),), trials=100,
                           master_seed=MASTER_SEED, methods=("abs", "nearest-neighbor"))
    rows = {r["method"]: r for r in run_experiment(cfg).rows}
    assert rows["abs"]["n"] == 32 and rows["abs"]["r_y_base"] == 3
    gain = rows["nearest-neighbor"]["nmse_db"] - rows["abs"]["nmse_db"]
    ok = report("C5", gain >= 1.0, "AbS at least 1 dB below NN at M=128 K=9 r_x=0.75 alpha=0.25 (100 trials)",
                f"NN {rows['nearest-neighbor']['nmse_db']:.2f} dB, AbS {rows['abs']['nmse_db']:.2f} dB, "
                f"gain {gain:.2f} dB, seed {MASTER_SEED}")
    assert ok


@pytest.mark.slow
def test_c6_regime_shape(report, alpha_sweep):
    parts, ok = [], True
    for meth in ("nearest-neighbor", "abs"):
        curve = {float(r["alpha"]): r["nmse_db"] for r in alpha_sweep if r["method"] == meth}
        best = min(curve, key=curve.get)
        worst_low = curve[0.1] == max(curve.values())
        best_quarter = best == 0.25
        degrades = curve[0.75] > curve[best]
        ok &= worst_low and best_quarter and degrades
        parts.append(f"{meth}: " + " ".join(f"{a:g}:{v:.2f}" for a, v in sorted(curve.items()))
                     + f" dB (worst@0.1={worst_low} best@0.25={best_quarter} 0.75>best={degrades})")
    ok = report("C6", ok, "NMSE worst at alpha=0.1, best at 0.25, worse again at 0.75 (100 trials/point)",
                "; ".join(parts))
    assert ok


def test_c7_support_set_convention(report):
    cfg = ExperimentConfig(m=128, k=9, alphas=(), rates=("1/4", "3/8", "1/2"), rate_alpha=Fraction(1, 4),
                           trials=20, master_seed=MASTER_SEED, methods=("support-set",),
                           codebook_samples=100_000)
    res = run_experiment(cfg)
    position = 9 * 7
    below = [r for r in res.rows if r["r_x"] * 128 < position]
    exact = all(r["nmse"] == 1.0 for r in below)
    per_trial = all(t.squared_error == t.signal_energy for t in res.records
                    if t.r_x * 128 < position)
    ok = report("C7", exact and per_trial and len(below) == 2,
                "support-set NMSE exactly 1 whenever R_x < K log2 M (= 63)",
                ", ".join(f"R_x={int(r['r_x'] * 128)}: NMSE={r['nmse']!r}" for r in res.rows))
    assert ok


def test_c8_lloyd_quality(report):
    _, target = lloyd_max_gaussian(8)
    s = np.random.default_rng(MASTER_SEED).standard_normal(10**6)
    cb, trace = lloyd_train(s, 8, return_trace=True)
    mse = float(np.mean((s - cb.codepoints[cb.nearest(s)]) ** 2))
    monotone = all(_le(b, a) for a, b in zip(trace, trace[1:]))
    ok = report("C8", abs(mse - target) <= 0.002 and monotone,
                "8-level Lloyd on 1e6 N(0,1) samples within 0.002 of the Lloyd-Max distortion",
                f"MSE {mse:.6f} vs {target:.6f} (diff {mse - target:+.2e}); "
                f"{len(trace)} iterations, trace non-increasing={monotone}")
    assert ok


def test_c9_omp_sanity(report):
    recovered = 0
    for seed in range(200):
        x, phi, y = make_instance(30_000 + seed, 128, 64, 5)
        d = x.values - omp_reconstruct(phi, y, 5)
        recovered += float(d @ d) / x.energy < 1e-10
    residual_bad = support_diff = oracle_true = 0
    for seed in range(50):
        x, phi, y = make_instance(20_000 + seed, 6, 4, 2)
        xo, xr = omp_reconstruct(phi, y, 2), oracle_best_ksparse(phi, y, 2)
        residual_bad += residual_norm(phi, y, xr) > residual_norm(phi, y, xo) + 1e-12
        support_diff += tuple(np.flatnonzero(xo)) != tuple(np.flatnonzero(xr))
        oracle_true += tuple(np.flatnonzero(xr)) == x.support
    ok = report("C9", recovered >= 180 and residual_bad == 0 and support_diff == 0,
                "OMP recovery >= 90% (m=128 k=5 n=64); oracle residual <= OMP and equal supports (m=6 n=4 k=2)",
                f"recovered {recovered}/200; oracle worse {residual_bad}/50; "
                f"OMP support differs from oracle {support_diff}/50; oracle finds true support {oracle_true}/50")
    assert ok


@pytest.mark.slow
def test_c10_cli_reproducible_across_workers(report, tmp_path):
    cfgfile = tmp_path / "exp.ini"
    cfgfile.write_text(f"""[experiment]
m = 128
k = 9
r_x = 3/4
alphas = 0.25, 0.5
trials = 20
master_seed = {MASTER_SEED}
codebook_samples = 200000
""")
    outs = []
    for workers in (1, 3):
        out = tmp_path / f"w{workers}.csv"
        proc = subprocess.run([sys.executable, "-m", "abscs.cli", "run", "--config", str(cfgfile),
                               "--out-csv", str(out), "--workers", str(workers)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(out.read_bytes())
    ok = report("C10", outs[0] == outs[1], "`abscs run` CSV byte-identical for 1 and 3 workers",
                f"{len(outs[0])} bytes, {len(outs[0].splitlines()) - 1} rows")
    assert ok
