"""Residual-energy estimates against exact values over k.

Writes ``tailscan.tsv`` with mean/min/max of the estimate and of the exact
value across sketch realizations, for a Gaussian and a Cauchy base design.
"""
import argparse
import sys

from rpcr import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="out/fig1")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--realizations", type=int, default=10)
    args = ap.parse_args(argv)
    for base in ("gaussian", "cauchy"):
        code = cli.main(["tailscan", "--n", "200", "--d", "100", "--q", "2", "--base", base,
                         "--kmax", "100", "--stride", "5", "--probes", "36", "--exact",
                         "--realizations", str(args.realizations), "--seed", str(args.seed),
                         "--outdir", f"{args.outdir}/{base}"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
