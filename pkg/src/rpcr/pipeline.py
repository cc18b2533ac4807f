"""Replicated experiment sweeps and plot-ready table output.

A sweep crosses methods with a grid of truncation levels ``r`` and
oversampling factors ``alpha`` (sketch width ``k = round(alpha r)``) and
repeats everything over independent replicates. Rows are sorted before
output so results do not depend on worker scheduling.
"""
import dataclasses
import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .datagen import SpectrumSpec, draw_truth, gen_response, synth_design
from .errors import ArgumentError, NumericalFailure, ParseError
from .ingest import ingest_csv, preprocess_train_test, train_test_split
from .linalg import DesignMatrix, orth_basis, project
from .regressors import fit_cls, fit_pcr, member_spec
from .risk import GroundTruth, evaluate_bounds, excess_decomposition
from .rng import derive_seed
from .sketch import SketchKind, SketchSpec, apply_sketch, draw_sketch

BASE_METHODS = ("pcr", "cls-gaussian", "cls-rademacher", "subsample")
_SKETCH_KIND = {"cls-gaussian": SketchKind.GAUSSIAN, "cls-rademacher": SketchKind.RADEMACHER,
                "subsample": SketchKind.SUBSAMPLE}
METRICS = ("bias", "variance", "excess", "prediction_error", "approx_error")


@dataclass
class ExperimentConfig:
    mode: str = "synthetic"
    # synthetic data
    n: int = 300
    d: int = 150
    regime: str = "polynomial"
    q: float = 1.0
    theta: float = 0.9
    base: str = "gaussian"
    sigma: float = 0.5
    redraw_design: bool = True
    # ingested data
    input_path: str | None = None
    y_col: int = 1
    log_cols: tuple = ()
    interact_cols: tuple = ()
    test_fraction: float = 0.2
    # grids
    r_grid: tuple = (5, 10, 20, 40, 80)
    alphas: tuple = (1.0, 1.2, 1.5, 2.0, 2.5, 3.0)
    methods: tuple = BASE_METHODS
    ensemble_sizes: tuple = ()
    replications: int = 100
    bounds: bool = True
    seed: int = 0
    threads: int = 1
    outdir: str = "out"

    def __post_init__(self):
        for name in ("r_grid", "alphas", "methods", "ensemble_sizes", "log_cols", "interact_cols"):
            setattr(self, name, tuple(getattr(self, name)))
        self.r_grid = tuple(int(r) for r in self.r_grid)
        self.alphas = tuple(float(a) for a in self.alphas)
        self.ensemble_sizes = tuple(int(b) for b in self.ensemble_sizes)
        if self.mode not in ("synthetic", "ingest"):
            raise ArgumentError(f"mode must be 'synthetic' or 'ingest', got {self.mode!r}")
        if self.mode == "ingest" and not self.input_path:
            raise ArgumentError("ingest mode needs input_path")
        if not self.r_grid or not self.alphas or not (self.methods or self.ensemble_sizes):
            raise ArgumentError("grids and the method list must be non-empty")
        if min(self.r_grid) < 1 or min(self.alphas) <= 0:
            raise ArgumentError("r values must be >= 1 and alphas > 0")
        unknown = set(self.methods) - set(BASE_METHODS)
        if unknown:
            raise ArgumentError(f"unknown methods {sorted(unknown)}; averaged ensembles go in ensemble_sizes")
        if any(b < 1 for b in self.ensemble_sizes):
            raise ArgumentError("ensemble sizes must be >= 1")
        if self.replications < 1:
            raise ArgumentError("replications must be >= 1")
        if self.sigma < 0:
            raise ArgumentError("sigma must be nonnegative")
        if self.mode == "synthetic":
            SpectrumSpec(self.regime, self.q, self.theta)

    @property
    def all_methods(self):
        return tuple(self.methods) + tuple(f"averaged-{b}" for b in self.ensemble_sizes)

    def spectrum(self):
        return SpectrumSpec(self.regime, self.q, self.theta)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}


def load_config(path, **overrides):
    """Read an :class:`ExperimentConfig` from a TOML file.

    Keys may sit at the top level or inside any table (tables are merged);
    ``overrides`` that are not ``None`` win over file values.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    flat = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    flat.update({k: v for k, v in overrides.items() if v is not None})
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(flat) - names)
    if unknown:
        raise ParseError(f"{path}: unknown config keys {unknown}")
    return ExperimentConfig(**flat)


@dataclass(frozen=True)
class GridPoint:
    method: str
    r: int
    alpha: float
    k: int

    @property
    def r_or_k(self):
        return self.r if self.method == "pcr" else self.k

    @property
    def label(self):
        if self.method == "pcr":
            return f"r={self.r}"
        return f"r={self.r};alpha={self.alpha:g};k={self.k}"


def grid_points(config, d, n):
    """Every (method, grid point) of the sweep in output order.

    PCR needs ``r <= min(n, d)``; subsampling needs ``k <= d``. Points
    outside those ranges are left out of the grid.
    """
    m = min(n, d)
    points = []
    for method in config.all_methods:
        for r in config.r_grid:
            if method == "pcr":
                if r <= m:
                    points.append(GridPoint(method, r, 0.0, r))
                continue
            for a in config.alphas:
                k = max(1, int(round(a * r)))
                if method == "subsample" and k > d:
                    continue
                points.append(GridPoint(method, r, a, k))
    return points


@dataclass
class ResultRow:
    replicate: int
    method: str
    r: int
    alpha: float
    r_or_k: int
    grid: str
    bias: float = math.nan
    variance: float = math.nan
    excess: float = math.nan
    prediction_error: float = math.nan
    approx_error: float = math.nan
    bounds: dict = field(default_factory=dict)
    degenerate: bool = False
    failed: bool = False
    message: str = ""


# -- fitting ---------------------------------------------------------------

def _sketch_spec(point, d, rep_seed):
    kind = _SKETCH_KIND.get(point.method, SketchKind.GAUSSIAN)
    # one stream per method and replicate: widths on the grid give nested sketches
    return SketchSpec(kind, d, point.k, derive_seed(rep_seed, "sketch", point.method))


def _projection_basis(X, point, rep_seed):
    """``(bases, degenerate)`` of the column spaces the method projects onto.

    Averaged ensembles return one basis per member.
    """
    if point.method == "pcr":
        model = fit_pcr(X, np.zeros(X.n), point.r)
        return [model.basis], model.degenerate
    spec = _sketch_spec(point, X.d, rep_seed)
    if point.method.startswith("averaged-"):
        B = int(point.method.split("-", 1)[1])
        bases = [orth_basis(apply_sketch(X, draw_sketch(member_spec(spec, b)))) for b in range(B)]
    else:
        bases = [orth_basis(apply_sketch(X, draw_sketch(spec)))]
    target = min(point.k, X.n, X.d)
    return bases, any(Q.shape[1] < target for Q in bases)


def _apply_average(bases, Y):
    out = np.zeros_like(Y, dtype=float)
    for Q in bases:
        out += project(Q, Y)
    return out / len(bases)


def _trace_sq(bases):
    """``trace(P_bar^2)`` for ``P_bar`` the mean of the projectors."""
    W = np.hstack(bases) / math.sqrt(len(bases))
    G = W.T @ W
    return float(np.sum(G * G))


def _approx_error(X, bases):
    resid = X.entries - _apply_average(bases, X.entries)
    return float(np.sum(resid * resid))


def _synthetic_rows(config, rep, X, truth, y):
    rep_seed = derive_seed(config.seed, "rep", rep)
    f = truth.signal(X)
    rows = []
    bound_cache = {}
    for point in grid_points(config, X.d, X.n):
        row = ResultRow(rep, point.method, point.r, point.alpha, point.r_or_k, point.label)
        try:
            bases, row.degenerate = _projection_basis(X, point, rep_seed)
            fitted = _apply_average(bases, y)
            if len(bases) == 1:
                rep_ = excess_decomposition(X, truth, bases[0])
                row.bias, row.variance = rep_.bias, rep_.variance
            else:
                gap = f - _apply_average(bases, f)
                row.bias = float(gap @ gap) / X.n
                row.variance = truth.sigma ** 2 * _trace_sq(bases) / X.n
            row.excess = row.bias + row.variance
            err = f - fitted
            row.prediction_error = float(err @ err) / X.n
            row.approx_error = _approx_error(X, bases)
            if config.bounds:
                key = (point.r, None if point.method == "pcr" else point.k)
                if key not in bound_cache:
                    bound_cache[key] = evaluate_bounds(X, truth, r=key[0], k=key[1])
                row.bounds = dict(bound_cache[key])
        except (ArgumentError, NumericalFailure, np.linalg.LinAlgError) as exc:
            row.failed, row.message = True, str(exc)
        rows.append(row)
    return rows


def _ingest_rows(config, rep, X, y):
    rep_seed = derive_seed(config.seed, "rep", rep)
    tr, te = train_test_split(X.n, config.test_fraction, rep_seed)
    Xtr, ytr, Xte, t = preprocess_train_test(X.entries[tr], y[tr], X.entries[te])
    Xtr = DesignMatrix(Xtr)
    rows = []
    for point in grid_points(config, Xtr.d, Xtr.n):
        row = ResultRow(rep, point.method, point.r, point.alpha, point.r_or_k, point.label)
        try:
            if point.method == "pcr":
                model = fit_pcr(Xtr, ytr, point.r)
                coef, bases, row.degenerate = model.coef, [model.basis], model.degenerate
            else:
                spec = _sketch_spec(point, Xtr.d, rep_seed)
                if point.method.startswith("averaged-"):
                    B = int(point.method.split("-", 1)[1])
                    members = [fit_cls(Xtr, ytr, draw_sketch(member_spec(spec, b))) for b in range(B)]
                else:
                    members = [fit_cls(Xtr, ytr, draw_sketch(spec))]
                coef = sum(m.coef for m in members) / len(members)
                bases = [m.basis for m in members]
                row.degenerate = any(m.degenerate for m in members)
            pred = Xte @ coef + t.y_mean
            row.prediction_error = float(np.mean((y[te] - pred) ** 2))
            row.approx_error = _approx_error(Xtr, bases)
            # the approximation error stands in for the unknown bias
            row.bias = row.approx_error
        except (ArgumentError, NumericalFailure, np.linalg.LinAlgError) as exc:
            row.failed, row.message = True, str(exc)
        rows.append(row)
    return rows


def _synthetic_instance(config, rep):
    src = derive_seed(config.seed, "rep", rep) if config.redraw_design else config.seed
    X = synth_design(config.n, config.d, config.spectrum(), config.base, src)
    wstar, _ = draw_truth(config.d, 0.0, src)
    truth = GroundTruth.for_design(X, wstar, config.sigma)
    y = gen_response(X, wstar, config.sigma, derive_seed(config.seed, "rep", rep))
    return X, truth, y


def _row_key(order):
    return lambda row: (row.replicate, order[row.method], row.r, row.alpha, row.r_or_k)


def run_sweep(config):
    """All result rows of a sweep, sorted by (replicate, method, grid point)."""
    if config.mode == "ingest":
        X, y = ingest_csv(config.input_path, config.y_col, config.log_cols, config.interact_cols)

        def job(rep):
            return _ingest_rows(config, rep, X, y)
    else:
        def job(rep):
            return _synthetic_rows(config, rep, *_synthetic_instance(config, rep))

    reps = range(config.replications)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            chunks = list(pool.map(job, reps))
    else:
        chunks = [job(rep) for rep in reps]
    order = {m: i for i, m in enumerate(config.all_methods)}
    return sorted((row for chunk in chunks for row in chunk), key=_row_key(order))


# -- output ----------------------------------------------------------------

def fmt(value):
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def _groups(rows):
    """Rows bucketed by (method, grid point), first-appearance order."""
    groups = {}
    for row in rows:
        groups.setdefault((row.method, row.grid), []).append(row)
    return groups


def summarize(values):
    a = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if a.size == 0:
        return {"mean": math.nan, "min": math.nan, "max": math.nan, "se": math.nan, "count": 0}
    se = float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else math.nan
    return {"mean": float(a.mean()), "min": float(a.min()), "max": float(a.max()), "se": se,
            "count": int(a.size)}


def _write_tsv(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method\tgrid\tstat\tvalue\n")
        for method, grid, stat, value in lines:
            fh.write(f"{method}\t{grid}\t{stat}\t{value}\n")


def emit_tables(rows, outdir, config=None):
    """Write one long-format TSV per metric, ``bounds_gap.tsv`` and
    ``manifest.json``; returns the written paths."""
    if not rows:
        raise ArgumentError("no rows to write")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    groups = _groups(rows)
    written = []
    for metric in METRICS:
        lines = []
        for (method, grid), members in groups.items():
            ok = [r for r in members if not r.failed]
            stats = summarize([getattr(r, metric) for r in ok])
            if stats["count"] == 0:
                continue
            for stat in ("mean", "min", "max", "se"):
                lines.append((method, grid, stat, fmt(stats[stat])))
            lines.append((method, grid, "count", str(stats["count"])))
        if lines:
            path = out / f"{metric}.tsv"
            _write_tsv(path, lines)
            written.append(path)

    lines = []
    for (method, grid), members in groups.items():
        ok = [r for r in members if not r.failed]
        lines.append((method, grid, "failed", str(len(members) - len(ok))))
        lines.append((method, grid, "degenerate", str(sum(r.degenerate for r in ok))))
        names = sorted({b for r in ok for b in r.bounds})
        for name in names:
            if name.endswith(("_opt_k", "_r_opt", "_r_int", "_floor")):
                continue
            gaps = [r.bounds[name] - r.excess for r in ok if name in r.bounds]
            stats = summarize(gaps)
            lines.append((method, grid, f"{name}_gap_mean", fmt(stats["mean"])))
            lines.append((method, grid, f"{name}_gap_min", fmt(stats["min"])))
    path = out / "bounds_gap.tsv"
    _write_tsv(path, lines)
    written.append(path)

    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest(rows, config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def manifest(rows, config=None):
    from . import __version__

    reps = sorted({r.replicate for r in rows})
    doc = {
        "versions": {"rpcr": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "rows": len(rows),
        "failed_rows": sum(r.failed for r in rows),
        "replicates": len(reps),
        "methods": list(dict.fromkeys(r.method for r in rows)),
    }
    if config is not None:
        doc["config"] = config.to_dict()
        doc["replicate_seeds"] = {str(rep): derive_seed(config.seed, "rep", rep) for rep in reps}
    return doc


def write_rows(rows, path):
    """Raw per-replicate rows as a wide TSV (one line per row)."""
    bound_names = sorted({b for r in rows for b in r.bounds})
    cols = ["replicate", "method", "r", "alpha", "r_or_k", *METRICS, "degenerate", "failed"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(cols + bound_names) + "\n")
        for r in rows:
            vals = [str(r.replicate), r.method, str(r.r), fmt(r.alpha), str(r.r_or_k),
                    *(fmt(getattr(r, m)) for m in METRICS), str(int(r.degenerate)), str(int(r.failed))]
            vals += [fmt(r.bounds.get(b, math.nan)) for b in bound_names]
            fh.write("\t".join(vals) + "\n")

