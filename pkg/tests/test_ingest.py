import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rpcr.errors import ArgumentError, ParseError
from rpcr.ingest import (ingest_csv, interaction_features, preprocess_train_test,
                         read_csv_matrix, train_test_split)


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_basic_parse(tmp_path):
    X, y = ingest_csv(_write(tmp_path, "1,2\n3,4\n5,6\n"), y_col=1)
    assert np.array_equal(y, [1, 3, 5])
    assert np.array_equal(X.entries, [[2], [4], [6]])


def test_header_detected(tmp_path):
    data, header = read_csv_matrix(_write(tmp_path, "y,a,b\n1,2,3\n4,5,6\n"))
    assert header == ["y", "a", "b"] and data.shape == (2, 3)


def test_ragged_row_reports_line(tmp_path):
    with pytest.raises(ParseError) as info:
        read_csv_matrix(_write(tmp_path, "1,2\n3,4\n5\n"))
    assert info.value.line == 3


def test_non_numeric_cell_reports_position(tmp_path):
    with pytest.raises(ParseError) as info:
        read_csv_matrix(_write(tmp_path, "a,b\n1,2\n3,x\n"))
    assert (info.value.line, info.value.column) == (3, 2)


def test_empty_file(tmp_path):
    with pytest.raises(ParseError):
        read_csv_matrix(_write(tmp_path, ""))


def test_interactions_two_columns(tmp_path):
    X, _ = ingest_csv(_write(tmp_path, "0,1,2\n0,3,4\n"), y_col=1, interact_cols=[2, 3])
    assert X.d == 2 + 3
    assert np.array_equal(X.entries[0], [1, 2, 1, 2, 4])


def test_counting_oracle(tmp_path):
    g = np.random.default_rng(0)
    data = g.uniform(0, 5, size=(100, 7))
    text = "\n".join(",".join(f"{v:.6f}" for v in row) for row in data) + "\n"
    p = _write(tmp_path, text)
    for sel in ([2], [2, 3], [2, 4, 5, 7]):
        X, _ = ingest_csv(p, y_col=1, log_cols=[3], interact_cols=sel)
        k = len(sel)
        assert X.d == 6 + k * (k + 1) // 2


def test_log_columns(tmp_path):
    X, _ = ingest_csv(_write(tmp_path, "1,0\n2,3\n"), y_col=1, log_cols=[2])
    assert np.allclose(X.entries[:, 0], np.log1p([0.0, 3.0]))


def test_column_flags_validated(tmp_path):
    p = _write(tmp_path, "1,2\n3,4\n")
    with pytest.raises(ArgumentError):
        ingest_csv(p, y_col=3)
    with pytest.raises(ArgumentError):
        ingest_csv(p, y_col=1, log_cols=[1])


def test_interaction_features_order():
    A = np.array([[2.0, 3.0]])
    assert np.array_equal(interaction_features(A), [[4.0, 6.0, 9.0]])


# -- preprocessing ---------------------------------------------------------------

def test_identity_transform_on_standardised_input(rng):
    A = rng.standard_normal((20, 4))
    A -= A.mean(axis=0)
    A /= np.linalg.norm(A, axis=0)
    Xs, _, Xt, t = preprocess_train_test(A, rng.standard_normal(20), A[:3])
    assert np.allclose(Xs, A) and np.allclose(Xt, A[:3])
    assert t.dropped.size == 0


def test_constant_column_dropped(rng):
    A = rng.standard_normal((10, 3))
    A[:, 1] = 4.2
    Xs, _, Xt, t = preprocess_train_test(A, rng.standard_normal(10), rng.standard_normal((2, 3)))
    assert t.dropped.tolist() == [1] and Xs.shape == (10, 2) and Xt.shape == (2, 2)


def test_train_statistics(rng):
    A = rng.normal(3.0, 2.0, size=(15, 4))
    y = rng.standard_normal(15)
    Xs, ys, _, t = preprocess_train_test(A, y, A[:2])
    assert np.allclose(Xs.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(Xs, axis=0), 1.0)
    assert abs(ys.mean()) <= 1e-12


@given(st.integers(0, 2**32 - 1))
def test_back_transform_roundtrip(seed):
    g = np.random.default_rng(seed)
    A = g.normal(g.uniform(-5, 5, 5), g.uniform(0.1, 3, 5), size=(25, 5))
    A[:, 2] = 1.5
    y = g.standard_normal(25)
    T = g.normal(0, 3, size=(6, 5))
    Xs, ys, Xt, t = preprocess_train_test(A, y, T)
    coef = np.linalg.lstsq(Xs, ys, rcond=None)[0]
    raw, intercept = t.back_transform(coef)
    assert np.allclose(T @ raw + intercept, Xt @ coef + t.y_mean, atol=1e-8)
    assert raw[2] == 0.0


@given(arrays(np.float64, (4, 3), elements=st.floats(-1e3, 1e3)))
def test_transform_ignores_test_rows(test_rows):
    g = np.random.default_rng(1)
    A, y = g.standard_normal((12, 3)), g.standard_normal(12)
    _, _, _, t1 = preprocess_train_test(A, y, g.standard_normal((4, 3)))
    _, _, _, t2 = preprocess_train_test(A, y, test_rows)
    assert np.array_equal(t1.means, t2.means) and np.array_equal(t1.norms, t2.norms)
    assert t1.y_mean == t2.y_mean and np.array_equal(t1.kept, t2.kept)


def test_split_partitions_rows():
    tr, te = train_test_split(50, 0.2, seed=3)
    assert len(te) == 10 and sorted(np.concatenate([tr, te]).tolist()) == list(range(50))
    assert np.array_equal(train_test_split(50, 0.2, 3)[1], te)
