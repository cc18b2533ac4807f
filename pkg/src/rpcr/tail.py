"""Randomised estimation of the sketch residual energy
``delta^2 = ||(I - P_{XR}) X||_F^2`` from a few Gaussian probes.

Each probe ``omega`` contributes ``||X omega - P (X omega)||^2``. The probe
images ``X omega`` are formed once and reused for every ``k`` on the grid, so
after the sketch itself each grid point costs ``O(n k^2)`` for the
orthonormal factor plus ``O(n k L)`` for the projections.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .linalg import as_design, numerical_rank, orth_basis, project
from .rng import derive_seed, make_rng
from .sketch import apply_sketch, as_sketch, draw_sketch


def required_probe_count(c, C):
    """Smallest ``L`` with ``L >= max(16/(1-c)^2, 144/(C-1)^2)``."""
    if not (0 < c < 1 < C):
        raise ArgumentError(f"need 0 < c < 1 < C, got c={c}, C={C}")
    need = max(16.0 / (1.0 - c) ** 2, 144.0 / (C - 1.0) ** 2)
    # absorb the rounding of e.g. 1 - 1/3 so that exact integers stay put
    return math.ceil(need * (1.0 - 1e-12))


@dataclass(frozen=True)
class TailEstimate:
    k_grid: np.ndarray
    estimates: np.ndarray
    L: int
    seed: int
    exact: np.ndarray | None = None
    nested: bool = True
    ranks: np.ndarray | None = None

    def rows(self):
        for i, k in enumerate(self.k_grid):
            yield int(k), float(self.estimates[i]), None if self.exact is None else float(self.exact[i])


def exact_delta_sq(X, R):
    """``||X - P_{XR} X||_F^2`` through the orthonormal factor of ``XR``."""
    X = as_design(X)
    R = as_sketch(R)
    Q = orth_basis(apply_sketch(X, R))
    if Q.shape[1] >= numerical_rank(X.entries):
        return 0.0
    resid = X.entries - project(Q, X.entries)
    return float(np.sum(resid * resid))


def probe_images(X, L, seed):
    """``X @ Omega`` for ``L`` standard Gaussian probes."""
    X = as_design(X)
    omega = make_rng(seed, "probes").standard_normal((X.d, L))
    return X.entries @ omega


def _residual_energy(Q, Z):
    """Per-probe ``||z - Q Q^T z||^2``."""
    resid = Z - project(Q, Z)
    return np.einsum("ij,ij->j", resid, resid)


def estimate_delta_sq(X, spec, k_grid, L, probe_seed, exact=False, nested=True, refresh_probes=False):
    """Estimate ``delta^2(k)`` for every ``k`` in ``k_grid``.

    ``spec`` fixes the sketch kind, ``d`` and seed; its ``k`` is ignored.
    With ``nested`` (default) the grid uses leading columns of a single
    draw, so the column spaces are nested and, with shared probes, the
    estimates are nonincreasing in ``k``. Otherwise every ``k`` gets an
    independent sketch. ``refresh_probes`` draws new probes per grid point.
    ``k = 0`` means no reduction (empty basis).
    """
    if L < 1:
        raise ArgumentError("need at least one probe")
    X = as_design(X)
    grid = np.asarray(sorted(set(int(k) for k in k_grid)), dtype=int)
    if grid.size == 0 or grid[0] < 0:
        raise ArgumentError("k grid must be non-empty and nonnegative")
    full_rank = numerical_rank(X.entries)
    kmax = int(grid[-1])

    shared = probe_images(X, L, probe_seed)
    norms = np.einsum("ij,ij->j", shared, shared)
    estimates = np.empty(grid.size)
    ranks = np.zeros(grid.size, dtype=int)

    if nested and kmax > 0:
        XR = apply_sketch(X, draw_sketch(spec.with_k(kmax)))
        Qfull, Rfac = np.linalg.qr(XR)
        diag = np.abs(np.diag(Rfac))
        tol = np.finfo(float).eps * max(XR.shape) * (diag.max() if diag.size else 0.0)
        independent = np.cumsum(diag > tol)
        coords = Qfull.T @ shared
        coords[: diag.size][diag <= tol] = 0.0
        captured = np.cumsum(coords * coords, axis=0)

    for i, k in enumerate(grid):
        Z, zn = shared, norms
        if refresh_probes:
            Z = probe_images(X, L, derive_seed(probe_seed, "k", int(k)))
            zn = np.einsum("ij,ij->j", Z, Z)
        if k == 0:
            per_probe = zn
        elif nested and not refresh_probes:
            ranks[i] = independent[min(k, Qfull.shape[1]) - 1]
            per_probe = np.maximum(zn - captured[min(k, Qfull.shape[1]) - 1], 0.0)
        else:
            if nested:
                Q = Qfull[:, :k][:, diag[:k] > tol]
            else:
                R = draw_sketch(spec.with_k(int(k)).with_seed(derive_seed(spec.seed, "k", int(k))))
                Q = orth_basis(apply_sketch(X, R))
            ranks[i] = Q.shape[1]
            per_probe = _residual_energy(Q, Z)
        if k > 0 and ranks[i] >= full_rank:
            per_probe = np.zeros_like(per_probe)
        estimates[i] = float(np.mean(per_probe))

    exact_vals = None
    if exact:
        exact_vals = np.empty(grid.size)
        base = draw_sketch(spec.with_k(kmax)) if (nested and kmax > 0) else None
        for i, k in enumerate(grid):
            if k == 0:
                exact_vals[i] = float(np.sum(X.entries ** 2))
            elif nested:
                exact_vals[i] = exact_delta_sq(X, base.leading(int(k)))
            else:
                R = draw_sketch(spec.with_k(int(k)).with_seed(derive_seed(spec.seed, "k", int(k))))
                exact_vals[i] = exact_delta_sq(X, R)
    return TailEstimate(k_grid=grid, estimates=estimates, L=L, seed=probe_seed,
                        exact=exact_vals, nested=nested, ranks=ranks)


def probe_set_estimates(X, R, L, sets, seed):
    """``delta-hat^2`` for ``sets`` independent probe sets with ``R`` fixed."""
    X = as_design(X)
    Q = orth_basis(apply_sketch(X, as_sketch(R)))
    out = np.empty(sets)
    for t in range(sets):
        Z = probe_images(X, L, derive_seed(seed, "set", t))
        out[t] = float(np.mean(_residual_energy(Q, Z)))
    return out


@dataclass(frozen=True)
class Coverage:
    rate: float
    trials: int
    L: int
    delta_sq: float
    degenerate: bool


def coverage_experiment(X, R, c, C, trials, seed):
    """Fraction of probe sets whose estimate lands in ``[c delta^2, C delta^2]``,
    with ``L = required_probe_count(c, C)`` and the sketch held fixed."""
    L = required_probe_count(c, C)
    X = as_design(X)
    R = as_sketch(R)
    delta_sq = exact_delta_sq(X, R)
    if delta_sq == 0.0:
        return Coverage(rate=math.nan, trials=0, L=L, delta_sq=0.0, degenerate=True)
    est = probe_set_estimates(X, R, L, trials, seed)
    hits = (est >= c * delta_sq) & (est <= C * delta_sq)
    return Coverage(rate=float(hits.mean()), trials=trials, L=L, delta_sq=delta_sq, degenerate=False)
