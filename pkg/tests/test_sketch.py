import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rpcr.errors import ArgumentError
from rpcr.linalg import orth_basis
from rpcr.sketch import (SketchKind, SketchSpec, apply_sketch, draw_sketch, from_array,
                         jlt_check, recommended_k, restricted_isometry_check)

kinds = st.sampled_from(list(SketchKind))


def test_full_subsample_is_permutation(rng):
    R = draw_sketch(SketchSpec("subsample", 5, 5, seed=3))
    assert sorted(R.indices.tolist()) == list(range(5))
    X = rng.standard_normal((4, 5))
    XR = apply_sketch(X, R)
    assert np.array_equal(np.sort(XR, axis=1), np.sort(X, axis=1))


def test_gaussian_moments():
    R = draw_sketch(SketchSpec("gaussian", 1000, 50, seed=11)).entries
    k, N = 50, R.size
    sd = math.sqrt(1 / k)
    assert abs(R.mean()) <= 4 * sd / math.sqrt(N)
    assert abs(R.var() - 1 / k) <= 0.05 / k


def test_rademacher_support():
    R = draw_sketch(SketchSpec("rademacher", 10, 3, seed=1)).entries
    assert np.allclose(np.abs(R), 1 / math.sqrt(3))


def test_subsample_k_above_d_rejected():
    with pytest.raises(ArgumentError):
        SketchSpec("subsample", 4, 5)
    with pytest.raises(ArgumentError):
        SketchSpec("gaussian", 4, 0)


@given(kinds, st.integers(1, 30), st.integers(0, 2**64 - 1), st.data())
def test_draw_is_pure_function_of_spec(kind, d, seed, data):
    k = data.draw(st.integers(1, d if kind is SketchKind.SUBSAMPLE else 40))
    a, b = draw_sketch(SketchSpec(kind, d, k, seed)), draw_sketch(SketchSpec(kind, d, k, seed))
    assert np.array_equal(a.dense(), b.dense())


@given(st.integers(1, 40), st.integers(0, 2**32 - 1), st.data())
def test_subsample_selector_orthonormal(d, seed, data):
    k = data.draw(st.integers(1, d))
    R = draw_sketch(SketchSpec("subsample", d, k, seed))
    assert len(set(R.indices.tolist())) == k
    assert R.indices.min() >= 0 and R.indices.max() < d
    S = R.dense()
    assert np.array_equal(S.T @ S, np.eye(k))


@pytest.mark.parametrize("kind", list(SketchKind))
def test_draws_are_prefix_consistent(kind):
    big = draw_sketch(SketchSpec(kind, 20, 12, seed=9))
    small = draw_sketch(SketchSpec(kind, 20, 5, seed=9))
    if kind is SketchKind.SUBSAMPLE:
        assert np.array_equal(big.indices[:5], small.indices)
    else:
        # same directions, only the 1/sqrt(k) scaling differs
        assert np.allclose(big.entries[:, :5] * math.sqrt(12 / 5), small.entries)
        assert np.allclose(big.leading(5).entries, small.entries)


def test_subsample_mean_outer_product():
    d, k, B = 8, 3, 20000
    acc = np.zeros((d, d))
    for b in range(B):
        S = draw_sketch(SketchSpec("subsample", d, k, seed=b)).dense()
        acc += S @ S.T
    M = acc / B
    assert np.allclose(np.diag(M), k / d, atol=4 * math.sqrt(k / d * (1 - k / d) / B))
    assert np.max(np.abs(M - np.diag(np.diag(M)))) == 0.0


def test_apply_identity_columns(rng):
    X = rng.standard_normal((3, 4))
    assert np.array_equal(apply_sketch(X, np.eye(4)), X)


def test_apply_to_identity_returns_R():
    R = draw_sketch(SketchSpec("gaussian", 6, 3, seed=2))
    assert np.array_equal(apply_sketch(np.eye(6), R), R.entries)


@pytest.mark.parametrize("kind", list(SketchKind))
def test_apply_matches_naive_triple_loop(rng, kind):
    X = rng.standard_normal((7, 9))
    R = draw_sketch(SketchSpec(kind, 9, 4, seed=5))
    Rd = R.dense()
    naive = np.zeros((7, 4))
    for i in range(7):
        for j in range(4):
            acc = 0.0
            for t in range(9):
                acc += X[i, t] * Rd[t, j]
            naive[i, j] = acc
    assert np.max(np.abs(apply_sketch(X, R) - naive)) <= 1e-12


def test_apply_dimension_mismatch(rng):
    with pytest.raises(ArgumentError):
        apply_sketch(rng.standard_normal((3, 4)), draw_sketch(SketchSpec("gaussian", 5, 2)))


def test_back_map_matches_dense(rng):
    for kind in SketchKind:
        R = draw_sketch(SketchSpec(kind, 10, 4, seed=1))
        c = rng.standard_normal(4)
        assert np.allclose(R.back_map(c), R.dense() @ c)


# -- JLT ---------------------------------------------------------------------------

def test_jlt_orthonormal_square_is_isometry(rng):
    G = draw_sketch(SketchSpec("gaussian", 12, 12, seed=4)).entries
    Q, _ = np.linalg.qr(G)
    rep = jlt_check(from_array(Q), rng.standard_normal((20, 12)), 0.1)
    assert rep.eps_observed <= 1e-12 and rep.passed


def test_jlt_subsample_collapses_unselected_axis():
    d, k = 10, 5
    for seed in range(100):
        R = draw_sketch(SketchSpec("subsample", d, k, seed))
        if 0 not in R.indices:
            break
    e1 = np.zeros(d)
    e1[0] = 1.0
    rep = jlt_check(R, [e1], 0.99)
    assert rep.eps_observed == 1.0 and not rep.passed


def test_jlt_rejects_zero_vector():
    with pytest.raises(ArgumentError):
        jlt_check(np.eye(3), [np.zeros(3)], 0.5)


def test_jlt_gaussian_passes_most_seeds():
    pts = np.random.default_rng(0).standard_normal((50, 500))
    passes = sum(jlt_check(draw_sketch(SketchSpec("gaussian", 500, 200, s)), pts, 0.5).passed
                 for s in range(100))
    assert passes >= 99


def test_jlt_failure_frequency_at_theory_width():
    m, eps = 20, 0.5
    k = math.ceil(8 * math.log(m) / eps ** 2)
    pts = np.random.default_rng(1).standard_normal((m, 300))
    fails = sum(not jlt_check(draw_sketch(SketchSpec("gaussian", 300, k, s)), pts, eps).passed
                for s in range(200))
    assert fails <= 10


def test_jlt_report_fields(rng):
    rep = jlt_check(draw_sketch(SketchSpec("gaussian", 30, 10, 0)), rng.standard_normal((7, 30)), 0.5)
    assert rep.eps_observed >= 0 and rep.tested_points == 7
    assert rep.passed == (rep.eps_observed <= 0.5)


# -- restricted isometry ------------------------------------------------------------

def test_ri_orthonormal_image_is_exact():
    V = np.eye(6)[:, :2]
    R = from_array(np.eye(6)[:, :4])
    rep = restricted_isometry_check(R, V, 0.1)
    assert rep.eps_observed <= 1e-15 and rep.passed


def test_ri_single_vector_reduces_to_row_norm():
    R = draw_sketch(SketchSpec("gaussian", 8, 5, seed=3))
    V = np.eye(8)[:, :1]
    rep = restricted_isometry_check(R, V, 0.9)
    assert np.isclose(rep.eps_observed, abs(np.linalg.norm(R.entries[0]) - 1.0))


def test_ri_rejects_non_orthonormal():
    with pytest.raises(ArgumentError):
        restricted_isometry_check(np.eye(3), np.ones((3, 1)), 0.5)


def test_ri_recommended_width_passes():
    r, n = 5, 100
    k = recommended_k(r, n, 0.5, 0.5)
    d = 2 * k
    V = orth_basis(np.random.default_rng(2).standard_normal((d, r)))
    passes = sum(restricted_isometry_check(draw_sketch(SketchSpec("gaussian", d, k, s)), V, 0.5).passed
                 for s in range(100))
    assert passes >= 95


@given(kinds, st.integers(2, 20), st.integers(1, 5), st.integers(0, 2**32 - 1), st.data())
def test_ri_probe_criterion_agrees(kind, d, r, seed, data):
    r = min(r, d)
    k = data.draw(st.integers(1, d if kind is SketchKind.SUBSAMPLE else 25))
    V = orth_basis(np.random.default_rng(seed).standard_normal((d, r)))
    if V.shape[1] < r:
        return
    rep = restricted_isometry_check(draw_sketch(SketchSpec(kind, d, k, seed)), V, 0.5, probes=16, seed=seed)
    assert rep.probes_consistent


# -- recommended_k -------------------------------------------------------------------

def test_recommended_k_formula():
    r, n = 10, 1000
    expected = math.ceil(max(r * (math.log(r) + math.log(n)) / 0.25,
                             math.log(2.0) * max(r, math.log(n)) / 0.25))
    assert recommended_k(r, n, 0.5, 0.5, 1.0, 1.0) == expected


def test_recommended_k_doubling_r():
    assert recommended_k(200, 1000, 0.5, 0.5) >= 2 * recommended_k(100, 1000, 0.5, 0.5)


def test_recommended_k_eps1_scaling():
    a = recommended_k(10, 1000, 0.5, 0.99, 1.0, 1e-9)
    b = recommended_k(10, 1000, 0.25, 0.99, 1.0, 1e-9)
    assert abs(b - 4 * a) <= 4


def test_recommended_k_small_r_uses_log_n():
    # r = 1 < ln n: the subspace branch uses ln n
    val = recommended_k(1, 10**6, 0.99, 0.1, 1e-9, 1.0)
    assert val == math.ceil(math.log(10) * math.log(10**6) / 0.01)


def test_recommended_k_validation():
    with pytest.raises(ArgumentError):
        recommended_k(5, 10, 1.5, 0.5)
