"""Synthetic designs with a prescribed spectrum, and ground truth.

A base matrix ``X0`` (Gaussian or Cauchy entries) supplies the singular
vectors; its singular values are replaced by a deterministic spectrum
scaled so that ``sum_j sigma_j^2 = n * d``.
"""
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ArgumentError, ParseError
from .linalg import DesignMatrix, SvdFactors, compute_svd
from .rng import make_rng


class Regime(str, enum.Enum):
    FLAT = "flat"
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"


class Base(str, enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class SpectrumSpec:
    """``flat``: constant; ``polynomial``: ``sigma_j ~ j^-q``;
    ``exponential``: ``sigma_j ~ theta^j``."""

    regime: Regime
    q: float = 1.0
    theta: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.POLYNOMIAL and not self.q > 0:
            raise ArgumentError(f"polynomial decay needs q > 0, got {self.q}")
        if self.regime is Regime.EXPONENTIAL and not 0 < self.theta < 1:
            raise ArgumentError(f"exponential decay needs theta in (0, 1), got {self.theta}")

    def values(self, n, d):
        """Singular values of length ``min(n, d)`` with ``sum sigma^2 = n d``."""
        j = np.arange(1, min(n, d) + 1, dtype=float)
        if self.regime is Regime.FLAT:
            raw = np.ones_like(j)
        elif self.regime is Regime.POLYNOMIAL:
            raw = j ** (-self.q)
        else:
            raw = self.theta ** j
        return raw * math.sqrt(n * d / float(np.sum(raw * raw)))

    def describe(self):
        if self.regime is Regime.POLYNOMIAL:
            return {"regime": self.regime.value, "q": self.q}
        if self.regime is Regime.EXPONENTIAL:
            return {"regime": self.regime.value, "theta": self.theta}
        return {"regime": self.regime.value}


def draw_base(n, d, base, rng):
    base = Base(base)
    if base is Base.GAUSSIAN:
        return rng.standard_normal((n, d))
    # standard Cauchy as the ratio of two independent standard normals
    return rng.standard_normal((n, d)) / rng.standard_normal((n, d))


def synth_design(n, d, spectrum, base="gaussian", seed=0):
    """``X = U0 diag(sigma) V0^T`` from the SVD of a random base matrix."""
    if n < 1 or d < 1:
        raise ArgumentError(f"need n, d >= 1, got n={n}, d={d}")
    X0 = draw_base(n, d, base, make_rng(seed, "design"))
    f0 = compute_svd(X0)
    sigma = spectrum.values(n, d)
    X = (f0.U * sigma) @ f0.V.T
    return DesignMatrix(X, svd=SvdFactors(U=f0.U, sigma=sigma, V=f0.V))


def draw_truth(d, p=0.0, seed=0):
    """``w*`` uniform on the unit sphere and ``sigma = 2^p``."""
    g = make_rng(seed, "truth").standard_normal(d)
    return g / np.linalg.norm(g), float(2.0 ** p)


def gen_response(X, wstar, sigma, noise_seed):
    """``y = X w* + sigma xi`` with standard Gaussian ``xi``."""
    a = X.entries if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)
    w = np.asarray(wstar, dtype=float)
    if a.shape[1] != w.shape[0]:
        raise ArgumentError(f"X has {a.shape[1]} columns, w* has length {w.shape[0]}")
    xi = make_rng(noise_seed, "noise").standard_normal(a.shape[0])
    return a @ w + sigma * xi


@dataclass(frozen=True, eq=False)
class SyntheticInstance:
    X: DesignMatrix
    wstar: np.ndarray
    sigma: float
    y: np.ndarray
    spectrum: SpectrumSpec
    base: Base
    seed: int

    def metadata(self):
        meta = {"n": self.X.n, "d": self.X.d, **self.spectrum.describe(),
                "base": Base(self.base).value, "seed": self.seed, "sigma": repr(self.sigma)}
        return meta


def make_instance(n, d, spectrum, base="gaussian", sigma=1.0, seed=0):
    X = synth_design(n, d, spectrum, base, seed)
    wstar, _ = draw_truth(d, 0.0, seed)
    y = gen_response(X, wstar, sigma, seed)
    return SyntheticInstance(X=X, wstar=wstar, sigma=float(sigma), y=y,
                             spectrum=spectrum, base=Base(base), seed=seed)


# -- serialisation ---------------------------------------------------------

def _write_matrix(path, a):
    a = np.atleast_2d(a) if np.ndim(a) > 1 else np.asarray(a)[:, None]
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(format(float(v), ".17g") for v in row))
            fh.write("\n")


def write_meta(path, meta):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"{key} = {value}\n")


def read_meta(path):
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected 'key = value'", line=lineno)
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def write_instance(inst, outdir):
    """Write ``X.csv``, ``y.csv``, ``wstar.csv`` and ``meta.txt``."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix(out / "X.csv", inst.X.entries)
    _write_matrix(out / "y.csv", inst.y)
    _write_matrix(out / "wstar.csv", inst.wstar)
    write_meta(out / "meta.txt", inst.metadata())
    return out


def read_instance(indir):
    """Load an instance directory as ``(X, y, wstar or None, meta)``."""
    from .ingest import read_csv_matrix

    src = Path(indir)
    X = DesignMatrix(read_csv_matrix(src / "X.csv")[0])
    y = read_csv_matrix(src / "y.csv")[0][:, 0]
    wpath = src / "wstar.csv"
    wstar = read_csv_matrix(wpath)[0][:, 0] if wpath.exists() else None
    meta = read_meta(src / "meta.txt") if (src / "meta.txt").exists() else {}
    return X, y, wstar, meta
