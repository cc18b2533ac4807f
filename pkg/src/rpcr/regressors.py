"""Least squares on reduced designs: PCR, compressed least squares (CLS),
column-subsampled regression and the projector-averaged ensemble."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .linalg import (as_design, least_squares_min_norm, orth_basis, partition,
                     rank_tolerance)
from .rng import derive_seed
from .sketch import SketchMatrix, apply_sketch, as_sketch, draw_sketch


@dataclass(frozen=True, eq=False)
class ReducedModel:
    """A least squares fit on ``X_R = X @ reducer``.

    ``coef`` is the back-mapped coefficient vector in the original
    ``d``-dimensional space, so ``X @ coef`` equals ``X_R @ coeffs``.
    """

    method: str
    reducer: object  # SpectralPartition or SketchMatrix
    coeffs: np.ndarray
    coef: np.ndarray
    effective_rank: int
    basis: np.ndarray
    fitted: np.ndarray

    @property
    def width(self):
        return self.coeffs.shape[0]

    @property
    def degenerate(self):
        return self.effective_rank < min(self.width, self.fitted.shape[0], self.coef.shape[0])


def fit_pcr(X, y, r):
    """Regress ``y`` on the top ``r`` principal component scores ``U_r S_r``."""
    X = as_design(X)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != X.n:
        raise ArgumentError(f"y has length {y.shape[0]}, X has {X.n} rows")
    svd = X.svd
    head = partition(svd, r)
    scores = head.U_head * head.sigma_head
    coeffs = least_squares_min_norm(scores, y)
    nonzero = head.sigma_head > rank_tolerance(svd.sigma, X.shape)
    basis = head.U_head[:, nonzero]
    return ReducedModel(
        method="pcr", reducer=head, coeffs=coeffs, coef=head.V_head @ coeffs,
        effective_rank=int(nonzero.sum()), basis=basis, fitted=scores @ coeffs,
    )


def fit_cls(X, y, R):
    """Minimum-norm least squares on the sketched design ``X @ R``."""
    X = as_design(X)
    R = as_sketch(R)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != X.n:
        raise ArgumentError(f"y has length {y.shape[0]}, X has {X.n} rows")
    XR = apply_sketch(X, R)
    coeffs = least_squares_min_norm(XR, y)
    basis = orth_basis(XR)
    if R.spec is None:
        method = "cls"
    elif R.is_subsample:
        method = "subsample"
    else:
        method = f"cls-{R.spec.kind.value}"
    return ReducedModel(
        method=method, reducer=R, coeffs=coeffs, coef=R.back_map(coeffs),
        effective_rank=basis.shape[1], basis=basis, fitted=XR @ coeffs,
    )


def predict(model, Xnew):
    Xnew = np.atleast_2d(np.asarray(Xnew, dtype=float))
    if Xnew.shape[1] != model.coef.shape[0]:
        raise ArgumentError(f"Xnew has {Xnew.shape[1]} columns, model expects {model.coef.shape[0]}")
    return Xnew @ model.coef


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    members: tuple
    spec: object

    @property
    def B(self):
        return len(self.members)

    @property
    def fitted(self):
        total = np.zeros_like(self.members[0].fitted)
        for m in self.members:
            total += m.fitted
        return total / self.B

    @property
    def coef(self):
        total = np.zeros_like(self.members[0].coef)
        for m in self.members:
            total += m.coef
        return total / self.B

    @property
    def degenerate_count(self):
        return sum(m.degenerate for m in self.members)


def member_spec(spec, b):
    """Sketch spec of ensemble member ``b``."""
    return spec.with_seed(derive_seed(spec.seed, "member", b))


def fit_averaged(X, y, spec, B, threads=1):
    """Average of ``B`` CLS fits with independently drawn sketches.

    Members are fitted independently and summed in member order, so the
    result does not depend on ``threads``.
    """
    if B < 1:
        raise ArgumentError(f"ensemble size must be >= 1, got B={B}")
    X = as_design(X)

    def fit_one(b):
        return fit_cls(X, y, draw_sketch(member_spec(spec, b)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            members = tuple(pool.map(fit_one, range(B)))
    else:
        members = tuple(fit_one(b) for b in range(B))
    model = EnsembleModel(members=members, spec=spec)
    return model, model.fitted


def reducer_basis(model):
    """Orthonormal factor of the column space a fitted model projects onto."""
    if isinstance(model, ReducedModel):
        return model.basis
    if isinstance(model, SketchMatrix):
        raise ArgumentError("pass a fitted model, not a bare sketch")
    return np.asarray(model, dtype=float)
