"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data or parse error, 3 numerical
failure.
"""
import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import datagen, pipeline
from .errors import ArgumentError, NumericalFailure, ParseError, ScalingError
from .ingest import ingest_csv
from .linalg import DesignMatrix
from .risk import GroundTruth, Scenario, evaluate_bounds
from .sketch import SketchKind, SketchSpec
from .tail import estimate_delta_sq, required_probe_count
from .rng import derive_seed

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (default 1)")
    p.add_argument("--outdir", default=argparse.SUPPRESS, help="output directory (default 'out')")
    return p


def _add_design(p):
    p.add_argument("--instance", help="instance directory written by 'synth' or 'ingest'")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--regime", choices=[r.value for r in datagen.Regime], default="polynomial")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--theta", type=float, default=0.9)
    p.add_argument("--base", choices=[b.value for b in datagen.Base], default="gaussian")


def build_parser():
    common = _common()
    parser = _Parser(prog="rpcr", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic instance")
    _add_design(p)
    noise = p.add_mutually_exclusive_group()
    noise.add_argument("--sigma", type=float, help="noise level")
    noise.add_argument("--p", type=float, help="noise level 2^p (default p = 0)")

    p = sub.add_parser("sweep", parents=[common], help="run an experiment config")
    p.add_argument("--config", required=True, help="TOML experiment config")

    p = sub.add_parser("tailscan", parents=[common], help="residual-energy estimates over a k grid")
    _add_design(p)
    p.add_argument("--kind", choices=[k.value for k in SketchKind], default="gaussian")
    p.add_argument("--kmax", type=int, default=100)
    p.add_argument("--stride", type=int, default=1, help="grid step in k")
    p.add_argument("--probes", type=int, default=required_probe_count(1 / 3, 3))
    p.add_argument("--exact", action="store_true", help="also compute the exact values")
    p.add_argument("--realizations", type=int, default=1, help="independent sketch draws")
    p.add_argument("--independent", action="store_true", help="fresh sketch per k instead of nested columns")

    p = sub.add_parser("ingest", parents=[common], help="CSV file to instance directory")
    p.add_argument("--input", required=True, help="numeric CSV file")
    p.add_argument("--y-col", type=int, default=1, help="1-based response column")
    p.add_argument("--log-cols", type=_int_list, default=[], help="1-based columns for log1p")
    p.add_argument("--interact-cols", type=_int_list, default=[],
                   help="1-based columns for squares and pairwise products")

    p = sub.add_parser("bounds", parents=[common], help="evaluate all bounds on an instance")
    _add_design(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--r-grid", type=_int_list, default=[5, 10, 20])
    p.add_argument("--k-grid", type=_int_list, default=[10, 20, 40])
    p.add_argument("--scenario", choices=["F", "P", "E"], help="spectrum scenario for the optimal r")
    return parser


def _design(args):
    """``(X, wstar, sigma)`` from an instance directory or synthetic flags."""
    if args.instance:
        X, _, wstar, meta = datagen.read_instance(args.instance)
        sigma = float(meta["sigma"]) if "sigma" in meta else None
        return X, wstar, sigma
    spec = datagen.SpectrumSpec(args.regime, args.q, args.theta)
    X = datagen.synth_design(args.n, args.d, spec, args.base, args.seed)
    wstar, _ = datagen.draw_truth(args.d, 0.0, args.seed)
    return X, wstar, None


def cmd_synth(args):
    sigma = args.sigma if args.sigma is not None else 2.0 ** (args.p or 0.0)
    if sigma < 0:
        raise ArgumentError("sigma must be nonnegative")
    inst = datagen.make_instance(args.n, args.d, datagen.SpectrumSpec(args.regime, args.q, args.theta),
                                 args.base, sigma, args.seed)
    out = datagen.write_instance(inst, args.outdir)
    print(f"wrote {inst.X.n}x{inst.X.d} instance to {out}")


def cmd_sweep(args):
    overrides = {k: getattr(args, k) for k in ("seed", "threads", "outdir") if args.explicit.get(k)}
    config = pipeline.load_config(args.config, **overrides)
    rows = pipeline.run_sweep(config)
    out = Path(config.outdir)
    paths = pipeline.emit_tables(rows, out, config)
    pipeline.write_rows(rows, out / "rows.tsv")
    failed = sum(r.failed for r in rows)
    print(f"{len(rows)} rows ({failed} failed) -> {', '.join(p.name for p in paths)}, rows.tsv")


def cmd_tailscan(args):
    if args.kmax < 1 or args.stride < 1 or args.probes < 1 or args.realizations < 1:
        raise ArgumentError("kmax, stride, probes and realizations must be positive")
    X, _, _ = _design(args)
    if args.kind == "subsample" and args.kmax > X.d:
        raise ArgumentError(f"subsampling needs kmax <= d = {X.d}")
    grid = list(range(args.stride, args.kmax + 1, args.stride))
    if grid[-1] != args.kmax:
        grid.append(args.kmax)
    lines = []
    est_all, exact_all = [], []
    for t in range(args.realizations):
        spec = SketchSpec(args.kind, X.d, args.kmax, derive_seed(args.seed, "sketch", t))
        res = estimate_delta_sq(X, spec, grid, args.probes, derive_seed(args.seed, "probes", t),
                                exact=args.exact, nested=not args.independent)
        est_all.append(res.estimates)
        if res.exact is not None:
            exact_all.append(res.exact)
    for name, block in (("estimate", est_all), ("exact", exact_all)):
        if not block:
            continue
        a = np.vstack(block)
        for i, k in enumerate(grid):
            stats = pipeline.summarize(a[:, i])
            for stat in ("mean", "min", "max"):
                lines.append((args.kind, str(k), f"{name}_{stat}", pipeline.fmt(stats[stat])))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline._write_tsv(out / "tailscan.tsv", lines)
    print(f"{len(grid)} grid points, L={args.probes} -> {out / 'tailscan.tsv'}")


def cmd_ingest(args):
    X, y = ingest_csv(args.input, args.y_col, args.log_cols, args.interact_cols)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    datagen._write_matrix(out / "X.csv", X.entries)
    datagen._write_matrix(out / "y.csv", y)
    datagen.write_meta(out / "meta.txt", {"n": X.n, "d": X.d, "source": args.input})
    print(f"wrote {X.n}x{X.d} design to {out}")


def cmd_bounds(args):
    X, wstar, sigma = _design(args)
    if wstar is None:
        raise ParseError("bounds need a known w*: instance has no wstar.csv")
    if sigma is None:
        sigma = args.sigma
    truth = GroundTruth.for_design(X, wstar, sigma)
    scenario = None
    if args.scenario:
        scenario = Scenario(args.scenario, q=2 * args.q, theta=args.theta ** 2)
    lines = []
    m = min(X.n, X.d)
    for r in args.r_grid:
        if not 1 <= r <= m:
            raise ArgumentError(f"r={r} outside 1..{m}")
        for k in args.k_grid:
            vals = evaluate_bounds(X, truth, r=r, k=k, scenario=scenario)
            for name in sorted(vals):
                lines.append(("bounds", f"r={r};k={k}", name, pipeline.fmt(vals[name])))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline._write_tsv(out / "bounds.tsv", lines)
    print(f"{len(lines)} bound values -> {out / 'bounds.tsv'}")


COMMANDS = {"synth": cmd_synth, "sweep": cmd_sweep, "tailscan": cmd_tailscan,
            "ingest": cmd_ingest, "bounds": cmd_bounds}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.explicit = {k: k in vars(args) for k in ("seed", "threads", "outdir")}
    for key, default in (("seed", 0), ("threads", 1), ("outdir", "out")):
        if not hasattr(args, key):
            setattr(args, key, default)
    try:
        COMMANDS[args.command](args)
    except ArgumentError as exc:
        print(f"rpcr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ScalingError, OSError, KeyError, ValueError) as exc:
        print(f"rpcr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        print(f"rpcr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
