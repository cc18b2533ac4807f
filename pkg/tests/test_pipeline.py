import json
import math

import numpy as np
import pytest

from rpcr import pipeline
from rpcr.errors import ArgumentError, NumericalFailure, ParseError
from rpcr.pipeline import ExperimentConfig, emit_tables, grid_points, load_config, run_sweep
from rpcr.risk import flat_spectrum_expected_risk


def _small(**kw):
    base = dict(n=40, d=20, q=1.0, sigma=0.5, r_grid=(2, 4), alphas=(1.0, 2.0),
                methods=("pcr", "cls-gaussian"), replications=3, seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


def test_single_row():
    cfg = _small(r_grid=(3,), alphas=(1.0,), methods=("cls-gaussian",), replications=1)
    assert len(run_sweep(cfg)) == 1


def test_grid_integrity():
    cfg = _small(methods=("pcr", "cls-gaussian", "cls-rademacher", "subsample"), ensemble_sizes=(3,))
    rows = run_sweep(cfg)
    keys = [(r.replicate, r.method, r.grid) for r in rows]
    assert len(keys) == len(set(keys))
    expected = {(rep, p.method, p.label) for rep in range(3) for p in grid_points(cfg, 20, 40)}
    assert set(keys) == expected
    assert not any(r.failed for r in rows)


def test_rows_sorted_and_finite():
    rows = run_sweep(_small())
    order = {"pcr": 0, "cls-gaussian": 1}
    keys = [(r.replicate, order[r.method], r.r, r.alpha, r.r_or_k) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        for m in ("bias", "variance", "excess", "prediction_error", "approx_error"):
            assert math.isfinite(getattr(r, m))
        assert all(math.isfinite(v) for v in r.bounds.values())


def test_pcr_bias_nonincreasing():
    rows = run_sweep(_small(r_grid=(1, 2, 4, 8, 16, 20), methods=("pcr",), replications=2))
    for rep in (0, 1):
        bias = [r.bias for r in rows if r.replicate == rep]
        assert all(a >= b - 1e-15 for a, b in zip(bias, bias[1:]))


def test_subsample_points_beyond_d_dropped():
    cfg = _small(r_grid=(15,), alphas=(1.0, 2.0), methods=("subsample", "cls-gaussian"))
    pts = grid_points(cfg, 20, 40)
    assert [(p.method, p.k) for p in pts] == [("subsample", 15), ("cls-gaussian", 15), ("cls-gaussian", 30)]


def test_flat_spectrum_matches_closed_form():
    n, d, k, sigma = 60, 30, 10, 1.0
    cfg = ExperimentConfig(n=n, d=d, regime="flat", sigma=sigma, r_grid=(k,), alphas=(1.0,),
                           methods=("cls-gaussian", "subsample"), replications=300, bounds=False, seed=3)
    rows = run_sweep(cfg)
    expected = flat_spectrum_expected_risk("dense", n, d, k, 1.0, sigma)
    for method in cfg.methods:
        ex = np.array([r.excess for r in rows if r.method == method])
        se = ex.std(ddof=1) / math.sqrt(ex.size)
        assert abs(ex.mean() - expected) <= 3 * se


def test_threads_do_not_change_rows():
    a = run_sweep(_small(threads=1))
    b = run_sweep(_small(threads=3))
    assert [(r.replicate, r.method, r.grid, r.excess) for r in a] == \
        [(r.replicate, r.method, r.grid, r.excess) for r in b]


def test_averaged_rows_have_smaller_variance():
    rows = run_sweep(_small(methods=("cls-gaussian",), ensemble_sizes=(8,), r_grid=(4,), alphas=(1.0,)))
    for rep in range(3):
        single = next(r for r in rows if r.replicate == rep and r.method == "cls-gaussian")
        avg = next(r for r in rows if r.replicate == rep and r.method == "averaged-8")
        assert avg.variance <= single.variance + 1e-15


def test_failed_fit_is_flagged(monkeypatch):
    real = pipeline._projection_basis

    def flaky(X, point, rep_seed):
        if point.method == "cls-gaussian" and point.k == 8:
            raise NumericalFailure("forced", shape=X.shape)
        return real(X, point, rep_seed)

    monkeypatch.setattr(pipeline, "_projection_basis", flaky)
    rows = run_sweep(_small())
    failed = [r for r in rows if r.failed]
    assert failed and all(r.method == "cls-gaussian" and r.r_or_k == 8 for r in failed)
    assert len(rows) == len(run_sweep(_small(replications=3)))


def test_config_validation():
    with pytest.raises(ArgumentError):
        ExperimentConfig(replications=0)
    with pytest.raises(ArgumentError):
        ExperimentConfig(methods=("ridge",))
    with pytest.raises(ArgumentError):
        ExperimentConfig(r_grid=())
    with pytest.raises(ArgumentError):
        ExperimentConfig(mode="ingest")


def test_default_config_grid():
    cfg = ExperimentConfig()
    assert cfg.alphas == (1.0, 1.2, 1.5, 2.0, 2.5, 3.0) and cfg.replications == 100


def test_load_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('n = 30\nd = 10\n[grid]\nr_grid = [2, 3]\nalphas = [1.5]\n', encoding="utf-8")
    cfg = load_config(p, seed=9, threads=None)
    assert (cfg.n, cfg.d, cfg.r_grid, cfg.alphas, cfg.seed) == (30, 10, (2, 3), (1.5,), 9)
    p.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_config(p)
    p.write_text("n = = 3\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_config(p)


# -- tables ------------------------------------------------------------------------

def _read_tsv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0].split("\t"), [l.split("\t") for l in lines[1:]]


def test_summary_one_grid_point(tmp_path):
    cfg = _small(r_grid=(3,), alphas=(1.0,), methods=("cls-gaussian",), replications=100, bounds=False)
    rows = run_sweep(cfg)
    emit_tables(rows, tmp_path, cfg)
    header, body = _read_tsv(tmp_path / "excess.tsv")
    assert header == ["method", "grid", "stat", "value"]
    stats = {b[2]: b[3] for b in body}
    assert {"mean", "min", "max"} <= set(stats) and len({(b[0], b[1]) for b in body}) == 1
    ex = np.array([r.excess for r in rows])
    assert float(stats["mean"]) == ex.mean() and float(stats["min"]) == ex.min()
    assert stats["count"] == "100"


def test_two_methods_two_blocks(tmp_path):
    cfg = _small(r_grid=(3,), alphas=(1.0,), methods=("subsample", "pcr"))
    emit_tables(run_sweep(cfg), tmp_path, cfg)
    _, body = _read_tsv(tmp_path / "bias.tsv")
    methods = list(dict.fromkeys(b[0] for b in body))
    assert methods == ["subsample", "pcr"]


def test_tables_byte_identical(tmp_path):
    cfg = _small(ensemble_sizes=(2,))
    emit_tables(run_sweep(cfg), tmp_path / "a", cfg)
    emit_tables(run_sweep(cfg), tmp_path / "b", cfg)
    for name in ("bias.tsv", "excess.tsv", "bounds_gap.tsv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_contents(tmp_path):
    cfg = _small()
    emit_tables(run_sweep(cfg), tmp_path, cfg)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    assert doc["config"]["seed"] == 5 and doc["replicates"] == 3
    assert set(doc["versions"]) == {"rpcr", "numpy", "python"}
    assert len(doc["replicate_seeds"]) == 3


def test_floats_have_17_digits():
    assert pipeline.fmt(0.1) == "0.10000000000000001"
    assert pipeline.fmt(float("nan")) == "nan"


def test_emit_rejects_empty(tmp_path):
    with pytest.raises(ArgumentError):
        emit_tables([], tmp_path)


# -- ingest mode ---------------------------------------------------------------------

def test_ingest_sweep(tmp_path):
    g = np.random.default_rng(0)
    A = g.standard_normal((80, 6))
    y = A @ g.standard_normal(6) + 0.1 * g.standard_normal(80)
    p = tmp_path / "d.csv"
    p.write_text("y,a,b,c,d,e,f\n" + "\n".join(",".join(f"{v:.10f}" for v in [y[i], *A[i]])
                                                 for i in range(80)) + "\n")
    cfg = ExperimentConfig(mode="ingest", input_path=str(p), y_col=1, r_grid=(2, 6), alphas=(1.0,),
                           methods=("pcr", "cls-gaussian", "subsample"), replications=2)
    rows = run_sweep(cfg)
    assert len(rows) == 2 * 3 * 2
    for r in rows:
        assert not r.failed and math.isfinite(r.prediction_error) and r.approx_error >= 0
        assert math.isnan(r.variance)
    full = [r.prediction_error for r in rows if r.method == "pcr" and r.r == 6]
    assert max(full) < 0.1
    emit_tables(rows, tmp_path / "out", cfg)
    assert (tmp_path / "out" / "prediction_error.tsv").exists()
