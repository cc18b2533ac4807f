"""PCR against Gaussian CLS on polynomially decaying spectra.

Runs ``configs/fig2.toml`` (optionally with fewer replications) and prints
the mean prediction error per grid point.
"""
import argparse
import sys
from pathlib import Path

from rpcr.pipeline import emit_tables, load_config, run_sweep, summarize, _groups

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "fig2.toml"))
    ap.add_argument("--replications", type=int)
    ap.add_argument("--outdir")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args(argv)
    config = load_config(args.config, replications=args.replications, outdir=args.outdir,
                         threads=args.threads)
    rows = run_sweep(config)
    emit_tables(rows, config.outdir, config)
    for (method, grid), group in _groups(rows).items():
        s = summarize([r.prediction_error for r in group])
        print(f"{method:15s} {grid:28s} mean={s['mean']:.5f} min={s['min']:.5f} max={s['max']:.5f}")
    print(f"OLS reference sigma^2 d / n = {config.sigma ** 2 * config.d / config.n:.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
