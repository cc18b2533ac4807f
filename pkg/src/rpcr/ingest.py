"""CSV ingestion and train/test preprocessing for real-data regressions.

Column indices in the public functions are 1-based positions in the input
file, matching the CLI flags.
"""
import csv
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import ArgumentError, ParseError
from .linalg import DesignMatrix
from .rng import make_rng


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_csv_matrix(path):
    """Parse a rectangular numeric CSV into ``(array, header or None)``.

    A first row with any non-numeric cell is taken as a header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), 1) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"empty file: {path}")
    header = None
    if not all(_is_number(c.strip()) for c in rows[0][1]):
        header = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise ParseError(f"no data rows after header: {path}")
    width = len(header) if header is not None else len(rows[0][1])
    out = np.empty((len(rows), width))
    for r, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line=lineno)
        for c, cell in enumerate(row):
            try:
                v = float(cell.strip())
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r}", line=lineno, column=c + 1) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite cell {cell!r}", line=lineno, column=c + 1)
            out[r, c] = v
    return out, header


def _positions(cols, width, what):
    idx = []
    for c in cols:
        c = int(c)
        if not 1 <= c <= width:
            raise ArgumentError(f"{what} column {c} outside 1..{width}")
        idx.append(c - 1)
    return idx


def interaction_features(A):
    """Squares and pairwise products of the columns of ``A``:
    ``p (p + 1) / 2`` new columns, ordered ``(0,0), (0,1), ..., (p-1,p-1)``."""
    p = A.shape[1]
    pairs = list(combinations_with_replacement(range(p), 2))
    if not pairs:
        return np.empty((A.shape[0], 0))
    return np.column_stack([A[:, i] * A[:, j] for i, j in pairs])


def ingest_csv(path, y_col=1, log_cols=(), interact_cols=()):
    """Load ``(X, y)`` from a CSV file.

    ``y_col`` picks the response; every other column is a predictor.
    ``log_cols`` get ``log1p`` (applied first); ``interact_cols`` get their
    squares and pairwise products appended.
    """
    data, _ = read_csv_matrix(path)
    width = data.shape[1]
    (yi,) = _positions([y_col], width, "response")
    logs = _positions(log_cols, width, "log")
    inter = _positions(interact_cols, width, "interaction")
    if yi in logs or yi in inter:
        raise ArgumentError("the response column cannot be transformed as a predictor")
    data = data.copy()
    if logs:
        sub = data[:, logs]
        if np.any(sub <= -1.0):
            raise ParseError("log1p needs values > -1")
        data[:, logs] = np.log1p(sub)
    keep = [j for j in range(width) if j != yi]
    if not keep:
        raise ParseError("file has no predictor columns")
    X = data[:, keep]
    if inter:
        X = np.hstack([X, interaction_features(data[:, inter])])
    return DesignMatrix(X), data[:, yi].copy()


@dataclass(frozen=True)
class Transform:
    """Train-set statistics: ``kept`` indexes the surviving raw columns."""

    means: np.ndarray
    norms: np.ndarray
    kept: np.ndarray
    dropped: np.ndarray
    y_mean: float

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        return (X[:, self.kept] - self.means[self.kept]) / self.norms[self.kept]

    def back_transform(self, coef):
        """Raw-space ``(coef_raw, intercept)`` for a model fitted on the
        transformed data: ``X_raw @ coef_raw + intercept`` equals the
        transformed prediction plus ``y_mean``."""
        coef = np.asarray(coef, dtype=float)
        raw = np.zeros(self.means.shape[0])
        raw[self.kept] = coef / self.norms[self.kept]
        intercept = self.y_mean - float(self.means @ raw)
        return raw, intercept


def preprocess_train_test(X_train, y_train, X_test):
    """Centre and scale columns to unit norm and centre ``y``, using training
    rows only. Columns with zero norm after centring are dropped."""
    Xtr = np.asarray(X_train, dtype=float)
    Xte = np.asarray(X_test, dtype=float)
    ytr = np.asarray(y_train, dtype=float)
    if Xtr.ndim != 2 or Xtr.shape[0] == 0:
        raise ArgumentError("training set must be a non-empty matrix")
    if Xte.ndim != 2 or Xte.shape[1] != Xtr.shape[1]:
        raise ArgumentError("test set must have the training column count")
    means = Xtr.mean(axis=0)
    norms = np.linalg.norm(Xtr - means, axis=0)
    scale = np.sqrt(Xtr.shape[0]) * np.maximum(np.abs(means), 1.0)
    zero = norms <= 1e-12 * scale
    kept = np.flatnonzero(~zero)
    norms = np.where(zero, 1.0, norms)
    t = Transform(means=means, norms=norms, kept=kept, dropped=np.flatnonzero(zero),
                  y_mean=float(ytr.mean()))
    return t.apply(Xtr), ytr - t.y_mean, t.apply(Xte), t


def train_test_split(n, test_fraction, seed):
    """Deterministic row split as ``(train_idx, test_idx)``."""
    if not 0 < test_fraction < 1:
        raise ArgumentError(f"test fraction must be in (0, 1), got {test_fraction}")
    n_test = max(1, int(round(test_fraction * n)))
    if n_test >= n:
        raise ArgumentError("split leaves no training rows")
    perm = make_rng(seed, "split").permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])
