"""Eigenvalues of the averaged projector and the bias/variance of averaging.

Prints ``j, sigma_j, eta_j`` and compares the averaged and single-sketch risk
terms on one polynomial-spectrum instance.
"""
import argparse
import sys

from rpcr.datagen import SpectrumSpec, draw_truth, synth_design
from rpcr.ensemble import averaged_bias_and_variance, estimate_projector_mean, eta_table
from rpcr.risk import GroundTruth
from rpcr.sketch import SketchSpec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=120)
    ap.add_argument("--d", type=int, default=60)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--k", type=int, default=15)
    ap.add_argument("--B", type=int, default=2048)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    X = synth_design(args.n, args.d, SpectrumSpec("polynomial", args.q), seed=args.seed)
    w, _ = draw_truth(args.d, 0.0, args.seed)
    truth = GroundTruth.for_design(X, w, 1.0)
    est = estimate_projector_mean(X, SketchSpec("gaussian", args.d, args.k), args.B, seed=args.seed)
    print("j\tsigma_j\teta_j")
    for j, s, eta in eta_table(X, est):
        print(f"{j}\t{s:.6g}\t{eta:.6g}")
    bias_pk, var_pk, bias_single = averaged_bias_and_variance(X, truth, est)
    print(f"sum eta = {est.eta_hat.sum():.10f} (k = {args.k}), off-diagonal max = {est.offdiag_max:.3g}")
    print(f"averaged: bias={bias_pk:.4g} variance={var_pk:.4g}")
    print(f"single:   bias={bias_single:.4g} variance={args.k / args.n:.4g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
