"""Dense linear algebra: SVD with a fixed sign convention, truncation,
column-space projections and minimum-norm least squares.

Projectors are never formed explicitly. A projector onto ``col(M)`` is
carried around as an orthonormal basis ``Q`` (``n x rank``) and applied as
``Q @ (Q.T @ Y)``.
"""
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalFailure, ScalingError


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``X = U diag(sigma) V^T`` of width ``min(n, d)``."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def width(self):
        return self.sigma.shape[0]

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.T


class DesignMatrix:
    """An ``n x d`` design matrix with a lazily computed, cached SVD.

    The cache is filled at most once (guarded by a lock) and is read-only
    afterwards, so instances can be shared between threads.
    """

    def __init__(self, entries, svd=None):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ArgumentError(f"design matrix must be 2-d and non-empty, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ArgumentError("design matrix has non-finite entries")
        a.setflags(write=False)
        self._entries = a
        self._svd = svd
        self._lock = threading.Lock()

    @property
    def entries(self):
        return self._entries

    @property
    def n(self):
        return self._entries.shape[0]

    @property
    def d(self):
        return self._entries.shape[1]

    @property
    def shape(self):
        return self._entries.shape

    @property
    def svd(self):
        if self._svd is None:
            with self._lock:
                if self._svd is None:
                    self._svd = compute_svd(self._entries)
        return self._svd

    @property
    def has_svd(self):
        return self._svd is not None

    def __array__(self, dtype=None, copy=None):
        return self._entries if dtype is None else self._entries.astype(dtype)

    def __repr__(self):
        return f"DesignMatrix(n={self.n}, d={self.d}, svd={'cached' if self.has_svd else 'pending'})"


def as_array(X):
    if isinstance(X, DesignMatrix):
        return X.entries
    return np.asarray(X, dtype=float)


def as_design(X):
    return X if isinstance(X, DesignMatrix) else DesignMatrix(X)


def rank_tolerance(singular_values, shape):
    """Cutoff below which singular values count as zero."""
    if singular_values.size == 0:
        return 0.0
    return np.finfo(float).eps * float(singular_values[0]) * max(shape)


def compute_svd(X):
    """Thin SVD with the largest-magnitude entry of each right singular vector
    made positive (lowest index wins ties)."""
    a = as_array(X)
    if not np.all(np.isfinite(a)):
        raise ArgumentError("cannot take the SVD of a matrix with non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", shape=a.shape) from exc
    # LAPACK already sorts descending; a stable sort keeps the solver's order among ties
    order = np.argsort(-s, kind="stable")
    U, s, V = U[:, order], s[order], Vt[order].T
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivots, np.arange(V.shape[1])] < 0, -1.0, 1.0)
    return SvdFactors(U=U * signs, sigma=s, V=V * signs)


@dataclass(frozen=True)
class SpectralPartition:
    r: int
    U_head: np.ndarray
    sigma_head: np.ndarray
    V_head: np.ndarray
    U_tail: np.ndarray
    sigma_tail: np.ndarray
    V_tail: np.ndarray


def _check_level(r, width):
    if not 1 <= r <= width:
        raise ArgumentError(f"truncation level r={r} outside [1, {width}]")


def partition(svd, r):
    """Split the SVD into the top-``r`` block and the tail."""
    _check_level(r, svd.width)
    return SpectralPartition(
        r=r,
        U_head=svd.U[:, :r], sigma_head=svd.sigma[:r], V_head=svd.V[:, :r],
        U_tail=svd.U[:, r:], sigma_tail=svd.sigma[r:], V_tail=svd.V[:, r:],
    )


def truncate(svd, r):
    """Best rank-``r`` approximation ``T_r`` and the remainder ``X - T_r``."""
    p = partition(svd, r)
    T = (p.U_head * p.sigma_head) @ p.V_head.T
    Delta = (p.U_tail * p.sigma_tail) @ p.V_tail.T
    return T, Delta


@dataclass(frozen=True)
class TailEnergy:
    """Cumulative spectral energy, indexed by ``s = 0 .. min(n, d)``.

    ``gamma[s]`` is the sum of the ``s`` largest squared singular values and
    ``tau[s] = (scale - gamma[s]) / scale`` the relative tail.
    """

    gamma: np.ndarray
    tau: np.ndarray
    scale: float

    def delta_fro_sq(self, r):
        return self.scale - self.gamma[r]


def tail_energy(svd, n, d, rtol=1e-8):
    sq = svd.sigma ** 2
    gamma = np.concatenate([[0.0], np.cumsum(sq)])
    scale = float(gamma[-1])
    if not np.isclose(scale, n * d, rtol=rtol, atol=0.0):
        raise ScalingError(f"spectrum not scaled to n*d={n * d}: gamma(d^n)={scale!r}", gamma=scale)
    # tail sums accumulated from the small end keep tau exact at the last index
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]])
    return TailEnergy(gamma=gamma, tau=tail / scale, scale=scale)


def scale_to_unit_energy(X):
    """Rescale ``X`` so that ``||X||_F^2 = n * d``."""
    a = as_array(X)
    fro = np.linalg.norm(a)
    if fro == 0:
        raise ScalingError("cannot rescale a zero matrix", gamma=0.0)
    return DesignMatrix(a * (np.sqrt(a.shape[0] * a.shape[1]) / fro))


def orth_basis(M):
    """Orthonormal basis of ``col(M)`` from a rank-revealing SVD."""
    a = as_array(M)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[1] == 0 or not np.any(a):
        return np.zeros((a.shape[0], 0))
    try:
        U, s, _ = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", shape=a.shape) from exc
    return U[:, s > rank_tolerance(s, a.shape)]


def project(Q, Y):
    """Apply the projector with orthonormal factor ``Q`` to ``Y``."""
    return Q @ (Q.T @ Y)


def project_onto_colspace(M, Y):
    a = as_array(M)
    Y = np.asarray(Y, dtype=float)
    if a.shape[0] != Y.shape[0]:
        raise ArgumentError(f"row mismatch: M has {a.shape[0]} rows, Y has {Y.shape[0]}")
    return project(orth_basis(a), Y)


def least_squares_min_norm(A, y):
    """Minimum-norm solution of ``min ||A w - y||``.

    Works through the SVD with the same rank cutoff as ``orth_basis`` so the
    fitted values are exactly the projection of ``y`` onto ``col(A)``.
    """
    a = as_array(A)
    y = np.asarray(y, dtype=float)
    if a.shape[0] != y.shape[0]:
        raise ArgumentError(f"row mismatch: A has {a.shape[0]} rows, y has {y.shape[0]}")
    tail_shape = y.shape[1:]
    if a.shape[1] == 0 or not np.any(a):
        return np.zeros((a.shape[1],) + tail_shape)
    try:
        U, s, Vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", shape=a.shape) from exc
    keep = s > rank_tolerance(s, a.shape)
    coef = U[:, keep].T @ y
    coef = coef / (s[keep] if coef.ndim == 1 else s[keep][:, None])
    return Vt[keep].T @ coef


def numerical_rank(M):
    return orth_basis(M).shape[1]
