"""Excess risk of reduced least squares: the exact bias/variance split,
closed forms for PCR, the published CLS bounds, and Monte-Carlo estimates
used to validate them.

Notation: ``X = U diag(s) V^T``, ``alpha = V^T w*``, ``m = min(n, d)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .linalg import (as_design, least_squares_min_norm, project, rank_tolerance,
                     truncate)
from .regressors import ReducedModel, fit_cls, fit_pcr, reducer_basis
from .rng import derive_seed, make_rng
from .sketch import as_sketch, draw_sketch


@dataclass(frozen=True)
class GroundTruth:
    wstar: np.ndarray
    sigma: float
    alphastar: np.ndarray

    @classmethod
    def for_design(cls, X, wstar, sigma):
        X = as_design(X)
        w = np.asarray(wstar, dtype=float)
        if w.shape != (X.d,):
            raise ArgumentError(f"w* has shape {w.shape}, expected ({X.d},)")
        if sigma < 0:
            raise ArgumentError("noise level must be nonnegative")
        return cls(wstar=w, sigma=float(sigma), alphastar=X.svd.V.T @ w)

    def head(self, r):
        return self.alphastar[:r]

    def tail(self, r):
        return self.alphastar[r:]

    def signal(self, X):
        return as_design(X).entries @ self.wstar


@dataclass
class RiskReport:
    bias: float
    variance: float
    excess: float
    rank: int
    bounds: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    degenerate: bool = False


def excess_decomposition(X, truth, reducer, bounds=None, config=None):
    """Bias ``||(I - P) X w*||^2 / n`` and variance ``sigma^2 rank / n``.

    ``reducer`` is a fitted :class:`ReducedModel` or an orthonormal basis of
    the column space that is projected onto.
    """
    X = as_design(X)
    Q = reducer_basis(reducer)
    f = truth.signal(X)
    resid = f - project(Q, f)
    rank = Q.shape[1]
    bias = float(resid @ resid) / X.n
    variance = truth.sigma ** 2 * rank / X.n
    degenerate = isinstance(reducer, ReducedModel) and reducer.degenerate
    return RiskReport(bias=bias, variance=variance, excess=bias + variance, rank=rank,
                      bounds=dict(bounds or {}), config=dict(config or {}), degenerate=degenerate)


def pcr_excess_exact(sigma_spec, alphastar, r, sigma, n):
    """``sum_{j>r} s_j^2 alpha_j^2 / n + sigma^2 r / n``."""
    s = np.asarray(sigma_spec, dtype=float)
    a = np.asarray(alphastar, dtype=float)
    if s.shape != a.shape:
        raise ArgumentError(f"spectrum and alpha* lengths differ: {s.shape} vs {a.shape}")
    if not 0 <= r <= s.shape[0]:
        raise ArgumentError(f"r={r} outside [0, {s.shape[0]}]")
    tail = s[r:] ** 2 * a[r:] ** 2
    return float(tail.sum()) / n + sigma ** 2 * r / n


def pcr_factory(r):
    return lambda X, y, draw: fit_pcr(X, y, r)


def sketch_factory(spec):
    """Fit CLS with a fresh sketch per draw (seeded from ``spec.seed``)."""
    return lambda X, y, draw: fit_cls(X, y, draw_sketch(spec.with_seed(derive_seed(spec.seed, "draw", draw))))


def monte_carlo_excess(X, truth, reducer_factory, noise_draws, seed=0):
    """Mean and standard error of ``||X w* - fitted||^2 / n`` over noise draws.

    ``reducer_factory`` is either a fitted model (held fixed, only the noise
    changes) or a callable ``(X, y, draw) -> model`` refitted per draw.
    """
    if noise_draws < 2:
        raise ArgumentError("need at least two noise draws")
    X = as_design(X)
    f = truth.signal(X)
    rng = make_rng(seed, "noise")
    fixed = None if callable(reducer_factory) else reducer_basis(reducer_factory)
    losses = np.empty(noise_draws)
    for t in range(noise_draws):
        y = f + truth.sigma * rng.standard_normal(X.n)
        if fixed is not None:
            fitted = project(fixed, y)
        else:
            fitted = reducer_factory(X, y, t).fitted
        gap = f - fitted
        losses[t] = gap @ gap / X.n
    return float(losses.mean()), float(losses.std(ddof=1) / math.sqrt(noise_draws))


# -- bounds --------------------------------------------------------------

def kaban_bound(Gamma_trace, wstar_norm, k, sigma, n, c=2.0):
    """``c tr(G) ||w*||^2 / k + sigma^2 k / n`` and its minimiser over ``k``.

    Returns ``(bound, opt_k, opt_bound)`` with ``c' = sqrt(c)``,
    ``opt_k = c' ||w*|| sqrt(n tr(G)) / sigma`` and
    ``opt_bound = 2 sigma c' ||w*|| sqrt(tr(G) / n)``.
    """
    if not 1.0 <= c <= 2.0:
        raise ArgumentError(f"constant c must lie in [1, 2], got {c}")
    if k <= 0:
        raise ArgumentError("k must be positive")
    cp = math.sqrt(c)
    bound = c * Gamma_trace * wstar_norm ** 2 / k + sigma ** 2 * k / n
    opt_k = math.inf if sigma == 0 else cp * wstar_norm * math.sqrt(n * Gamma_trace) / sigma
    opt_bound = 2.0 * sigma * cp * wstar_norm * math.sqrt(Gamma_trace / n)
    return bound, opt_k, opt_bound


@dataclass(frozen=True)
class ThaneiWeights:
    a: np.ndarray
    omega: np.ndarray
    k: int


def thanei_weights(sigma_spec, k):
    """Bias weights ``omega_j = (1 + a_j) / (1 + a_j + a_j k)`` with
    ``a_j = s_j^2 / sum(s^2)``."""
    if k < 1:
        raise ArgumentError("k must be >= 1")
    sq = np.asarray(sigma_spec, dtype=float) ** 2
    total = sq.sum()
    if total <= 0:
        raise ArgumentError("spectrum is identically zero")
    a = sq / total
    omega = (1.0 + a) / (1.0 + a + a * k)
    return ThaneiWeights(a=a, omega=omega, k=k)


def thanei_bound(sigma_spec, alphastar, k, sigma, n):
    """Returns ``(bound, weights, floor_bound)``; ``floor_bound`` replaces every
    weight by its minimum possible value ``2 / (2 + k)``."""
    weights = thanei_weights(sigma_spec, k)
    energy = np.asarray(sigma_spec, dtype=float) ** 2 * np.asarray(alphastar, dtype=float) ** 2
    variance = sigma ** 2 * k / n
    bound = float(energy @ weights.omega) / n + variance
    floor = 2.0 / (2.0 + k) * float(energy.sum()) / n + variance
    return bound, weights, floor


def main_theorem_factor(eps1, eps2):
    if not 0 < eps2 < 1:
        raise ArgumentError(f"eps2 must lie in (0, 1), got {eps2}")
    return 1.0 + eps1 ** 2 / (1.0 - eps2) ** 4


def main_theorem_bound(DeltaR_fro_sq, wstar_norm, eps1, eps2, k, sigma, n):
    """``(1 + eps1^2/(1-eps2)^4) ||w*||^2 ||Delta_r||_F^2 / n + sigma^2 k / n``."""
    return main_theorem_factor(eps1, eps2) * wstar_norm ** 2 * DeltaR_fro_sq / n + sigma ** 2 * k / n


def halko_factor(r, k):
    if k < r + 2:
        raise ArgumentError(f"bound needs k >= r + 2, got r={r}, k={k}")
    return 1.0 + r / (k - r - 1)


def halko_bound(DeltaR_fro_sq, r, k):
    """Expected Gaussian range-finder error ``(1 + r/(k-r-1)) ||Delta_r||_F^2``."""
    return halko_factor(r, k) * DeltaR_fro_sq


# -- scenario optima -------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """Spectrum scenario: flat ``F``, polynomial ``P`` (``sigma_j^2 ~ j^-q``) or
    exponential ``E`` (``sigma_j^2 ~ theta^j``)."""

    kind: str
    q: float | None = None
    theta: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind == "P" and (self.q is None or self.q < 2):
            raise ArgumentError("polynomial scenario needs q >= 2")
        if kind == "E" and (self.theta is None or not 0 < self.theta < 1):
            raise ArgumentError("exponential scenario needs theta in (0, 1)")
        if kind not in ("F", "P", "E"):
            raise ArgumentError(f"unknown scenario {self.kind!r}")

    def tau_bound(self, r, n, d):
        """Upper bound on the relative tail energy after ``r`` components."""
        m = min(n, d)
        r = np.asarray(r, dtype=float)
        if self.kind == "F":
            return (m - r) / m
        if self.kind == "P":
            with np.errstate(divide="ignore"):
                return np.minimum(1.0, r ** (1.0 - self.q) / (self.q - 1.0))
        return np.minimum(1.0, self.theta ** r / (1.0 - self.theta))


@dataclass(frozen=True)
class ScenarioOptimum:
    r_opt: float
    risk_bound: float
    r_int: int
    bound_int: float


def pcr_risk_bound(tau, alphainf_sq, n, d, sigma, r):
    """``||alpha*||_inf^2 d tau(r) + sigma^2 r / n``."""
    return alphainf_sq * d * tau + sigma ** 2 * np.asarray(r) / n


def scenario_optimum(scenario, alphainf_sq, n, d, sigma):
    """Optimal truncation level for a spectrum scenario.

    ``r_opt`` and ``risk_bound`` are the closed-form optimiser and bound;
    ``r_int`` / ``bound_int`` minimise the same bound exactly over integer
    ``r`` in ``[0, min(n, d)]``.
    """
    m = min(n, d)
    s2 = sigma ** 2
    if scenario.kind == "F":
        if math.sqrt(alphainf_sq) > sigma / math.sqrt(max(n, d)):
            r_opt = m
        else:
            r_opt = 0
        risk = float(pcr_risk_bound(scenario.tau_bound(r_opt, n, d), alphainf_sq, n, d, sigma, r_opt))
    elif scenario.kind == "P":
        q = scenario.q
        r_opt = math.inf if sigma == 0 else (alphainf_sq * n * d / s2) ** (1.0 / q)
        risk = 2.0 * (d * alphainf_sq) ** (1.0 / q) * (s2 / n) ** ((q - 1.0) / q)
    else:
        c = math.log(1.0 / scenario.theta)
        C1 = 1.0 / (1.0 - scenario.theta)
        C2 = c * C1  # stationarity constant of C1 exp(-c r) d a + s2 r / n
        if sigma == 0:
            r_opt, risk = math.inf, 0.0
        else:
            log_term = math.log(C2 * alphainf_sq * n * d / s2)
            r_opt = log_term / c
            risk = 2.0 / c * max(log_term, 1.0) * s2 / n
    grid = np.arange(m + 1)
    values = pcr_risk_bound(scenario.tau_bound(grid, n, d), alphainf_sq, n, d, sigma, grid)
    best = int(np.argmin(values))
    return ScenarioOptimum(r_opt=r_opt, risk_bound=float(risk), r_int=best, bound_int=float(values[best]))


def flat_spectrum_expected_risk(kind, n, d, k, alphastar_norm_sq, sigma):
    """Expected excess risk of a width-``k`` dense Gaussian sketch or column
    subsample on a flat-spectrum design.

    For ``n >= d`` both kinds give ``(1 - k/d) ||alpha||^2 + k sigma^2 / n``.
    For ``n < d`` (the extremal construction with ``V = [I_n; 0]``) the dense
    sketch gives ``(d/n)(1 - k/n)||alpha||^2 + k sigma^2/n`` and subsampling
    ``(d/n)(1 - k/d)||alpha||^2 + k sigma^2/n``.
    """
    if kind not in ("dense", "subsample"):
        raise ArgumentError(f"kind must be 'dense' or 'subsample', got {kind!r}")
    if not 0 <= k <= min(n, d):
        raise ArgumentError(f"k={k} outside [0, {min(n, d)}]")
    variance = k * sigma ** 2 / n
    if n >= d:
        return (1.0 - k / d) * alphastar_norm_sq + variance
    keep = k / n if kind == "dense" else k / d
    return d / n * (1.0 - keep) * alphastar_norm_sq + variance


# -- sketched regression identity -----------------------------------------

@dataclass(frozen=True)
class IdentityCheck:
    max_residual: float
    degenerate: bool

    def passed(self, tol=1e-8):
        return (not self.degenerate) and self.max_residual <= tol


def sketched_identity_check(X, r, R):
    """Evaluate ``V_r^T R R^T V_r beta_i = V_r^T R R^T w_i`` for every row.

    ``w_i`` is the residual of row ``i`` of ``X`` after projection onto the
    top-``r`` right singular space and ``beta_i`` the error of the sketched
    least squares fit of that row against ``T_r(X)^T``. Returns the largest
    relative residual ``||lhs - rhs|| / (1 + ||rhs||)``.
    """
    X = as_design(X)
    R = as_sketch(R)
    svd = X.svd
    T, _ = truncate(svd, r)
    Vr = svd.V[:, :r]
    Rd = R.dense()
    RtVr = Rd.T @ Vr
    s = np.linalg.svd(RtVr, compute_uv=False)
    if s.shape[0] < r or s[-1] <= rank_tolerance(s, RtVr.shape) or s[-1] < 1e-8 * s[0]:
        return IdentityCheck(max_residual=math.nan, degenerate=True)
    A = T.T                      # d x n
    B = X.entries.T              # columns b_i
    lam_sketch = least_squares_min_norm(Rd.T @ A, Rd.T @ B)
    # A lambda*_i is column i of T^T, so A (lambda~_i - lambda*_i) = V_r beta_i
    beta = Vr.T @ (A @ lam_sketch - A)
    W = B - A
    G = RtVr.T @ RtVr
    lhs = G @ beta
    rhs = RtVr.T @ (Rd.T @ W)
    resid = np.linalg.norm(lhs - rhs, axis=0) / (1.0 + np.linalg.norm(rhs, axis=0))
    return IdentityCheck(max_residual=float(resid.max()), degenerate=False)


# -- all bounds for one configuration -------------------------------------

def evaluate_bounds(X, truth, r=None, k=None, eps1=0.5, eps2=0.5, c_kaban=2.0, scenario=None):
    """Every applicable bound, computed from the spectrum and norms only."""
    X = as_design(X)
    svd = X.svd
    s = svd.sigma
    n = X.n
    wn = float(np.linalg.norm(truth.wstar))
    sig = truth.sigma
    out = {}
    if k is not None:
        trG = float(np.sum(s ** 2)) / n
        out["kaban"], out["kaban_opt_k"], out["kaban_opt"] = kaban_bound(trG, wn, k, sig, n, c_kaban)
        out["thanei"], _, out["thanei_floor"] = thanei_bound(s, truth.alphastar, k, sig, n)
    if r is not None:
        delta = float(np.sum(s[r:] ** 2))
        ainf = float(np.max(np.abs(truth.alphastar)) ** 2)
        out["pcr_exact"] = pcr_excess_exact(s, truth.alphastar, r, sig, n)
        out["pcr_bound"] = ainf * delta / n + sig ** 2 * r / n
        if k is not None:
            out["main_thm"] = main_theorem_bound(delta, wn, eps1, eps2, k, sig, n)
            if k >= r + 2:
                out["halko"] = halko_bound(delta, r, k) * wn ** 2 / n + sig ** 2 * k / n
    if scenario is not None:
        ainf = float(np.max(np.abs(truth.alphastar)) ** 2)
        opt = scenario_optimum(scenario, ainf, n, X.d, sig)
        out["scenario_opt"] = opt.risk_bound
        out["scenario_r_opt"] = opt.r_opt
        out["scenario_r_int"] = float(opt.r_int)
    return out
