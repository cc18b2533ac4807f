"""Random reduction matrices ``R`` (``d x k``) and empirical checks of the
Johnson-Lindenstrauss and subspace-isometry conditions.

Draws are prefix-consistent: for a fixed seed, the first ``k'`` columns of a
width-``k`` draw span the same space as the width-``k'`` draw (Gaussian and
Rademacher columns are generated one after another, column subsampling is a
partial Fisher-Yates shuffle). Sweeping ``k`` with one seed therefore gives
nested column spaces.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .linalg import as_array
from .rng import make_rng


class SketchKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    SUBSAMPLE = "subsample"


@dataclass(frozen=True)
class SketchSpec:
    kind: SketchKind
    d: int
    k: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", SketchKind(self.kind))
        if self.d < 1:
            raise ArgumentError(f"ambient dimension must be >= 1, got d={self.d}")
        if self.k < 1:
            raise ArgumentError(f"target dimension must be >= 1, got k={self.k}")
        if self.kind is SketchKind.SUBSAMPLE and self.k > self.d:
            raise ArgumentError(f"cannot subsample k={self.k} of d={self.d} columns without replacement")

    def with_k(self, k):
        return SketchSpec(self.kind, self.d, k, self.seed)

    def with_seed(self, seed):
        return SketchSpec(self.kind, self.d, self.k, seed)


@dataclass(frozen=True, eq=False)
class SketchMatrix:
    """A realised reduction matrix.

    Dense kinds store ``entries`` (``d x k``); column subsampling stores only
    the selected column ``indices``. ``spec`` is ``None`` for matrices
    supplied by the caller through :func:`from_array`.
    """

    spec: SketchSpec | None
    entries: np.ndarray | None = None
    indices: np.ndarray | None = None
    _dense: list = field(default_factory=list, repr=False)

    @property
    def d(self):
        if self.entries is not None:
            return self.entries.shape[0]
        return self.spec.d

    @property
    def k(self):
        return self.entries.shape[1] if self.entries is not None else self.indices.shape[0]

    @property
    def is_subsample(self):
        return self.indices is not None

    def dense(self):
        if self.entries is not None:
            return self.entries
        if not self._dense:
            S = np.zeros((self.d, self.k))
            S[self.indices, np.arange(self.k)] = 1.0
            self._dense.append(S)
        return self._dense[0]

    def back_map(self, coef):
        """``R @ coef`` (scatter for subsampling)."""
        if self.indices is not None:
            out = np.zeros((self.d,) + np.shape(coef)[1:])
            out[self.indices] = coef
            return out
        return self.entries @ coef

    def leading(self, k):
        """The first ``k`` columns, rescaled to entry variance ``1/k``."""
        if not 1 <= k <= self.k:
            raise ArgumentError(f"leading k={k} outside [1, {self.k}]")
        spec = None if self.spec is None else self.spec.with_k(k)
        if self.indices is not None:
            return SketchMatrix(spec, indices=self.indices[:k])
        scale = math.sqrt(self.k / k) if self.spec is not None else 1.0
        return SketchMatrix(spec, entries=self.entries[:, :k] * scale)


def from_array(R):
    R = np.array(R, dtype=float)
    if R.ndim != 2:
        raise ArgumentError(f"reduction matrix must be 2-d, got shape {R.shape}")
    return SketchMatrix(None, entries=R)


def _fisher_yates_prefix(rng, d, k):
    perm = np.arange(d)
    for i in range(k):
        j = int(rng.integers(i, d))
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:k].copy()


def draw_sketch(spec):
    """Realise ``spec``; a pure function of ``(kind, d, k, seed)``."""
    rng = make_rng(spec.seed)
    if spec.kind is SketchKind.SUBSAMPLE:
        return SketchMatrix(spec, indices=_fisher_yates_prefix(rng, spec.d, spec.k))
    if spec.kind is SketchKind.GAUSSIAN:
        cols = rng.standard_normal((spec.k, spec.d))
    else:
        cols = np.where(rng.integers(0, 2, size=(spec.k, spec.d)) == 1, 1.0, -1.0)
    return SketchMatrix(spec, entries=cols.T / math.sqrt(spec.k))


def as_sketch(R):
    if isinstance(R, SketchMatrix):
        return R
    if isinstance(R, SketchSpec):
        return draw_sketch(R)
    return from_array(R)


def apply_sketch(X, R):
    """``X @ R``; column subsampling gathers columns instead of multiplying."""
    a = as_array(X)
    R = as_sketch(R)
    if a.shape[1] != R.d:
        raise ArgumentError(f"X has {a.shape[1]} columns but the sketch expects d={R.d}")
    if R.is_subsample:
        return a[:, R.indices]
    return a @ R.entries


@dataclass(frozen=True)
class DistortionReport:
    eps_observed: float
    passed: bool
    tested_points: int
    eps: float
    probes_consistent: bool | None = None


def jlt_check(R, points, eps):
    """Largest relative squared-norm distortion ``| ||R^T v||^2/||v||^2 - 1 |``."""
    if not 0 < eps < 1:
        raise ArgumentError(f"eps must lie in (0, 1), got {eps}")
    R = as_sketch(R)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        raise ArgumentError("point set is empty")
    if P.shape[1] != R.d:
        raise ArgumentError(f"points have dimension {P.shape[1]}, sketch expects {R.d}")
    norms = np.einsum("ij,ij->i", P, P)
    if np.any(norms == 0):
        raise ArgumentError("zero vector in point set: distortion undefined")
    images = P[:, R.indices] if R.is_subsample else P @ R.entries
    ratio = np.einsum("ij,ij->i", images, images) / norms
    worst = float(np.max(np.abs(ratio - 1.0)))
    return DistortionReport(worst, worst <= eps, P.shape[0], eps)


def restricted_isometry_check(R, basis, eps, probes=32, seed=0):
    """Check ``(1-eps)||v|| <= ||R^T v|| <= (1+eps)||v||`` on all of ``col(basis)``.

    The decision uses the extreme singular values of ``R^T V``. As a
    redundancy check, ``probes`` random vectors from the subspace are pushed
    through ``R^T`` and their norm ratios must fall inside the singular-value
    range.
    """
    if not 0 < eps < 1:
        raise ArgumentError(f"eps must lie in (0, 1), got {eps}")
    if probes < 1:
        raise ArgumentError("need at least one probe")
    R = as_sketch(R)
    V = np.atleast_2d(np.asarray(basis, dtype=float))
    if V.shape[0] != R.d:
        raise ArgumentError(f"basis has {V.shape[0]} rows, sketch expects d={R.d}")
    if np.max(np.abs(V.T @ V - np.eye(V.shape[1]))) > 1e-8:
        raise ArgumentError("basis columns are not orthonormal")
    RtV = V[R.indices] if R.is_subsample else R.entries.T @ V
    s = np.linalg.svd(RtV, compute_uv=False)
    # R^T V has min(k, r) singular values; when k < r some direction is annihilated
    if s.shape[0] < V.shape[1]:
        s = np.concatenate([s, np.zeros(V.shape[1] - s.shape[0])])
    worst = float(np.max(np.abs(s - 1.0)))

    coeffs = make_rng(seed).standard_normal((V.shape[1], probes))
    ratios = np.linalg.norm(RtV @ coeffs, axis=0) / np.linalg.norm(coeffs, axis=0)
    slack = 1e-10 * max(1.0, float(s[0]))
    consistent = bool(np.all(ratios <= s[0] + slack) and np.all(ratios >= s[-1] - slack))
    return DistortionReport(worst, worst <= eps, probes, eps, probes_consistent=consistent)


def recommended_k(r, n, eps1, eps2, c1=4.0, c2=4.0):
    """Sketch width sufficient for both isometry conditions of the CLS bound.

    ``c1`` and ``c2`` stand in for the unspecified absolute constants. For
    small ``r`` the subspace branch uses ``max(r, ln n)``.
    """
    if not (0 < eps1 < 1 and 0 < eps2 < 1):
        raise ArgumentError(f"eps1, eps2 must lie in (0, 1), got {eps1}, {eps2}")
    if c1 <= 0 or c2 <= 0:
        raise ArgumentError("constants must be positive")
    if r < 1 or n < 1:
        raise ArgumentError("r and n must be positive")
    jl = c1 * r * (math.log(r) + math.log(n)) / eps1 ** 2
    subspace = c2 * math.log(1.0 / eps2) * max(r, math.log(n)) / eps2 ** 2
    return math.ceil(max(jl, subspace))
