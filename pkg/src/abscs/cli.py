"""Command line entry point: ``abscs {train-codebook,run,quantize,plot}``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from ._backend import BACKEND
from .abs_quantizer import abs_quantize, encoding_objective
from .errors import AbsCsError, ConfigError
from .harness import (
    CodebookCache,
    draw_instance,
    load_config,
    measurement_samples,
    prepare_point,
    run_experiment,
    training_seed,
    trial_streams,
    with_overrides,
)
from .plot import emit_plot
from .quantization import decode, encode_nearest, lloyd_train, save_codebook
from .reconstruction import omp_reconstruct
from .signal import nmse

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="abscs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train-codebook", help="train a Lloyd codebook on simulated measurements")
    t.add_argument("--m", type=int, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--bits", type=int, required=True)
    t.add_argument("--samples", type=int, default=10**6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run a Monte-Carlo sweep and write the aggregate CSV")
    r.add_argument("--config", required=True)
    r.add_argument("--out-csv", default="results.csv")
    r.add_argument("--per-trial-csv")
    r.add_argument("--workers", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--master-seed", type=int)

    q = sub.add_parser("quantize", help="quantize a single random instance and report")
    q.add_argument("--config", required=True)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--alpha", help="measurement rate; defaults to the first configured alpha")

    pl = sub.add_parser("plot", help="render an aggregate CSV as SVG")
    pl.add_argument("--in", dest="in_path", required=True)
    pl.add_argument("--out", required=True)
    pl.add_argument("--axis", choices=["alpha", "r_x"])
    return p


def _train_codebook(args) -> int:
    if not 0 < args.k < args.m or not 0 < args.n < args.m:
        raise ConfigError("need 0 < k < m and 0 < n < m")
    if args.bits < 0 or args.samples < 1:
        raise ConfigError("bits must be non-negative and samples positive")
    samples = measurement_samples(args.m, args.k, args.n, args.samples, training_seed(args.seed, args.n))
    cb = lloyd_train(samples, 1 << args.bits)
    save_codebook(cb, args.out)
    print(f"wrote {1 << args.bits}-level codebook to {args.out}")
    return EXIT_OK


def _run(args) -> int:
    cfg = load_config(args.config)
    cfg = with_overrides(cfg, workers=args.workers, trials=args.trials, master_seed=args.master_seed)
    result = run_experiment(cfg, args.out_csv, args.per_trial_csv)
    for row in result.rows:
        print(f"{row['method']:>16}  alpha={float(row['alpha']):.4g}  r_x={float(row['r_x']):.4g}  "
              f"NMSE={row['nmse_db']:.2f} dB")
    print(f"wrote {args.out_csv}")
    return EXIT_OK


def _quantize(args) -> int:
    cfg = load_config(args.config)
    alpha = args.alpha if args.alpha is not None else cfg.points()[0][0]
    setup = prepare_point(cfg, alpha, None, CodebookCache(cfg))
    data_rng, init_rng = trial_streams(with_overrides(cfg, master_seed=args.seed), setup.alpha, 0)
    x, phi, y = draw_instance(data_rng, cfg.m, cfg.k, setup.n)
    books = setup.codebooks

    q_nn = encode_nearest(y, books)
    x_nn = omp_reconstruct(phi, decode(q_nn, books), cfg.k)
    q_abs, diag = abs_quantize(y, phi, cfg.k, books, cfg.abs_config(), rng=init_rng)
    nn_obj = encoding_objective(q_nn, books, phi, cfg.k, diag.x_tilde)

    np.set_printoptions(linewidth=100)
    print(f"m={cfg.m} k={cfg.k} n={setup.n} bits/entry={setup.allocation.per_entry_bits[0]}"
          f"..{setup.allocation.per_entry_bits[-1]} kernels={BACKEND}")
    print("nearest-neighbor indexes:", q_nn.indexes)
    print("abs indexes:             ", q_abs.indexes)
    print("objective trace:", " ".join(f"{v:.6f}" for v in diag.objective_trace))
    print(f"nearest-neighbor objective: {nn_obj:.6f}")
    print(f"iterations={diag.iterations} recon_calls={diag.recon_calls}")
    for name, est in (("nearest-neighbor", x_nn), ("abs", diag.x_hat)):
        v = nmse([x], [est])
        db = 10 * math.log10(v) if v > 0 else -math.inf
        print(f"{name:>16} NMSE = {v:.6g} ({db:.2f} dB)")
    return EXIT_OK


def _plot(args) -> int:
    emit_plot(args.in_path, args.out, args.axis)
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"train-codebook": _train_codebook, "run": _run,
               "quantize": _quantize, "plot": _plot}[args.command]
    try:
        return handler(args)
    except (ConfigError, AbsCsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
