import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcldmd.data import (
    SnapshotFormatError,
    SnapshotSet,
    load_snapshots,
    load_trajectories,
    save_snapshots,
    save_trajectories,
    validate,
)
from dcldmd.simulate import SamplingConfig, duffing, generate_snapshots


def test_validate_ok_for_paper_sized_set():
    rng = np.random.default_rng(0)
    s = SnapshotSet(rng.normal(size=(2, 225)), rng.normal(size=(1, 225)), rng.normal(size=(2, 225)))
    assert validate(s) == []
    assert (s.n, s.m, s.M) == (2, 1, 225)


def test_validate_reports_column_mismatch():
    s = SnapshotSet(np.zeros((2, 3)), np.zeros((1, 2)), np.zeros((2, 3)))
    problems = validate(s)
    assert any("column count mismatch" in p for p in problems)


def test_validate_reports_nan():
    Y = np.zeros((2, 3))
    Y[1, 2] = np.nan
    problems = validate(SnapshotSet(np.zeros((2, 3)), np.zeros((1, 3)), Y))
    assert len(problems) == 1
    assert "non-finite entry in Y" in problems[0]


def test_validate_collects_every_violation():
    X = np.full((2, 3), np.inf)
    s = SnapshotSet(X, np.zeros((1, 2)), np.zeros((3, 3)))
    problems = validate(s)
    assert len(problems) >= 3
    with pytest.raises(ValueError, match="invalid snapshot set"):
        s.check()


def test_from_rows_matches_columns():
    X = np.arange(6.0).reshape(3, 2)
    s = SnapshotSet.from_rows(X, [1.0, 2.0, 3.0], X + 1)
    np.testing.assert_array_equal(s.X, X.T)
    assert s.U.shape == (1, 3)


def test_roundtrip_duffing_set(tmp_path):
    s = generate_snapshots(duffing(), SamplingConfig())
    path = save_snapshots(s, tmp_path / "snap.csv")
    assert load_snapshots(path) == s
    lines = path.read_text().splitlines()
    assert lines[0] == "n,2,m,1"
    assert lines[1] == "x1,x2,u1,y1,y2"
    assert len(lines) == 2 + 225


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), m=st.integers(1, 3), M=st.integers(1, 30))
def test_roundtrip_random_bit_exact(tmp_path_factory, seed, n, m, M):
    rng = np.random.default_rng(seed)
    scale = 10.0 ** rng.uniform(-300, 300, size=(2 * n + m, M))
    data = rng.normal(size=(2 * n + m, M)) * scale
    s = SnapshotSet(data[:n], data[n:n + m], data[n + m:])
    path = tmp_path_factory.mktemp("rt") / "s.csv"
    save_snapshots(s, path)
    t = load_snapshots(path)
    assert t == s


def test_header_dimension_mismatch(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("n,2,m,1\nx1,x2,x3,x4,u1,y1,y2\n1,2,3,4,5,6,7\n")
    with pytest.raises(SnapshotFormatError, match="header declares"):
        load_snapshots(p)


def test_empty_file(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(SnapshotFormatError, match="no snapshots"):
        load_snapshots(p)


def test_header_only_has_no_snapshots(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("n,1,m,1\nx1,u1,y1\n")
    with pytest.raises(SnapshotFormatError, match="no snapshots"):
        load_snapshots(p)


def test_malformed_value_names_line_and_column(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("n,1,m,1\nx1,u1,y1\n1,2,3\n4,oops,6\n")
    with pytest.raises(SnapshotFormatError, match="line 4, column 2"):
        load_snapshots(p)


def test_wrong_row_width(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("n,1,m,1\nx1,u1,y1\n1,2\n")
    with pytest.raises(SnapshotFormatError, match="line 3"):
        load_snapshots(p)


def test_trajectory_roundtrip_with_padding(tmp_path):
    true = np.arange(10.0).reshape(5, 2)
    pred = true[:3] + 0.5
    path = save_trajectories(tmp_path / "t.csv", 0.1, {"true": true, "pred": pred})
    header = path.read_text().splitlines()[0]
    assert header == "k,time,x_true_1,x_true_2,x_pred_1,x_pred_2"
    k, t, series = load_trajectories(path)
    np.testing.assert_array_equal(k, np.arange(5))
    np.testing.assert_allclose(t, 0.1 * np.arange(5))
    np.testing.assert_array_equal(series["true"], true)
    np.testing.assert_array_equal(series["pred"][:3], pred)
    assert np.isnan(series["pred"][3:]).all()
