"""Projector averaging: empirical estimate of the mean projector
``P_k = E[P_{XR}]`` in the left singular basis of ``X``, its diagonal
``eta``, and the canonical-angle form of the averaged variance.

Everything is accumulated as ``U^T P_b U`` (``m x m`` with ``m = min(n, d)``)
instead of ``n x n`` projectors; every ``P_b`` lives inside ``col(X) = col(U)``.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .linalg import as_design, orth_basis, rank_tolerance
from .rng import derive_seed
from .sketch import SketchKind, apply_sketch, draw_sketch


@dataclass(frozen=True)
class ProjectorMeanEstimate:
    B: int
    pk_ubasis: np.ndarray
    eta_hat: np.ndarray
    offdiag_max: float
    k: int
    degenerate: int
    gaussian: bool
    U: np.ndarray

    @property
    def Pk_hat(self):
        """The averaged projector as an explicit ``n x n`` matrix."""
        return self.U @ self.pk_ubasis @ self.U.T


def _member_seed(seed, b):
    return derive_seed(seed, "member", b)


def estimate_projector_mean(X, spec, B, seed, threads=1):
    """Average ``U^T P_{X R_b} U`` over ``B`` sketches drawn from ``spec``.

    Draws with ``rank(X R_b) < min(k, rank X)`` are dropped and counted in
    ``degenerate``.
    """
    if B < 1:
        raise ArgumentError(f"ensemble size must be >= 1, got B={B}")
    X = as_design(X)
    gaussian = spec.kind is SketchKind.GAUSSIAN
    if not gaussian:
        warnings.warn("projector-mean theory covers Gaussian sketches only", stacklevel=2)
    U = X.svd.U
    m = U.shape[1]
    sig = X.svd.sigma
    target = min(spec.k, int(np.count_nonzero(sig > rank_tolerance(sig, X.shape))))

    def member(b):
        Q = orth_basis(apply_sketch(X, draw_sketch(spec.with_seed(_member_seed(seed, b)))))
        if Q.shape[1] < target:
            return None
        C = U.T @ Q
        return C @ C.T

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(member, range(B)))
    else:
        parts = [member(b) for b in range(B)]

    total = np.zeros((m, m))
    used = 0
    for part in parts:  # fixed member order keeps the sum reproducible
        if part is not None:
            total += part
            used += 1
    if used == 0:
        raise ArgumentError("every sketch draw was degenerate")
    M = total / used
    M = 0.5 * (M + M.T)
    eta = np.diag(M).copy()
    off = M - np.diag(eta)
    return ProjectorMeanEstimate(B=used, pk_ubasis=M, eta_hat=eta,
                                 offdiag_max=float(np.max(np.abs(off))) if m > 1 else 0.0,
                                 k=spec.k, degenerate=B - used, gaussian=gaussian, U=U)


def averaged_bias_and_variance(X, truth, estimate):
    """Closed forms evaluated at ``eta_hat``.

    Returns ``(bias_pk, var_pk, bias_single_mean)``: the bias and variance of
    the infinitely averaged predictor, and the mean bias of a single sketch.
    """
    X = as_design(X)
    energy = X.svd.sigma ** 2 * truth.alphastar ** 2
    eta = estimate.eta_hat
    bias_pk = float(energy @ (1.0 - eta) ** 2) / X.n
    bias_single = float(energy @ (1.0 - eta)) / X.n
    var_pk = truth.sigma ** 2 * float(eta @ eta) / X.n
    return bias_pk, var_pk, bias_single


def squared_cosines(Q1, Q2):
    """Sum of squared cosines of the canonical angles between two subspaces."""
    C = Q1.T @ Q2
    return float(np.sum(C * C))


def canonical_angle_variance(X, spec, pairs, seed):
    """Monte-Carlo mean and standard error of ``sum cos^2(theta_l)`` between
    ``range(X R)`` and ``range(X R')`` for independent ``R, R'``.

    The mean estimates ``sum_j eta_j^2``.
    """
    if pairs < 2:
        raise ArgumentError("need at least two pairs")
    X = as_design(X)
    vals = np.empty(pairs)
    for p in range(pairs):
        Q1 = orth_basis(apply_sketch(X, draw_sketch(spec.with_seed(derive_seed(seed, "pair", p, 0)))))
        Q2 = orth_basis(apply_sketch(X, draw_sketch(spec.with_seed(derive_seed(seed, "pair", p, 1)))))
        vals[p] = squared_cosines(Q1, Q2)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(pairs))


def eta_table(X, estimate):
    """Rows ``(j, sigma_j, eta_hat_j)`` with 1-based ``j``."""
    s = as_design(X).svd.sigma
    return [(j + 1, float(s[j]), float(estimate.eta_hat[j])) for j in range(s.shape[0])]
