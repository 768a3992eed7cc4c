import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gfiam.errors import CSVFormatError, DataError, NonFiniteValueError
from gfiam.io import ingest_csv, read_table, variance_screen, write_csv, write_rows
from gfiam.splines import Dataset


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_well_formed(tmp_path):
    d = ingest_csv(write(tmp_path, "y,a,b\n1,2,3\n4,5,6\n7,8,9\n"))
    assert (d.n, d.p) == (3, 2) and d.names == ["a", "b"] and d.response_name == "y"
    assert np.array_equal(d.y, [1, 4, 7])


def test_response_column_by_name(tmp_path):
    d = ingest_csv(write(tmp_path, "a,y,b\n1,2,3\n4,5,6\n"), "y")
    assert np.array_equal(d.y, [2, 5]) and d.names == ["a", "b"]
    with pytest.raises(DataError):
        ingest_csv(write(tmp_path, "a,y\n1,2\n"), "z")


@pytest.mark.parametrize("cell", ["NaN", "inf", "-Infinity"])
def test_non_finite_cell_is_located(tmp_path, cell):
    with pytest.raises(NonFiniteValueError) as exc:
        ingest_csv(write(tmp_path, f"y,a,b\n1,2,3\n4,{cell},6\n"))
    assert exc.value.row == 3 and exc.value.column == "a"
    assert "row 3" in str(exc.value) and "'a'" in str(exc.value)


@pytest.mark.parametrize(
    "text,row,column",
    [
        ("y,a\n1,\n", 2, "a"),
        ("y,a\n1,abc\n", 2, "a"),
        ("y,a\n1,2,3\n", 2, None),
        ("y,y\n1,2\n", 1, None),
        ("y,\n1,2\n", 1, None),
    ],
)
def test_malformed(tmp_path, text, row, column):
    with pytest.raises(CSVFormatError) as exc:
        read_table(write(tmp_path, text))
    assert exc.value.row == row and exc.value.column == column


def test_empty_and_headless(tmp_path):
    for text in ("", "y,a\n", "y\n1\n"):
        with pytest.raises(CSVFormatError):
            ingest_csv(write(tmp_path, text))


@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(2, 5)),
              elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
@settings(max_examples=50, deadline=None)
def test_round_trip(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    d = Dataset(M[:, 0], M[:, 1:])
    write_csv(d, path)
    back = ingest_csv(path)
    assert np.array_equal(back.y, d.y) and np.array_equal(back.X, d.X) and back.names == d.names


def test_write_rows_shortest_repr(tmp_path):
    p = tmp_path / "t.csv"
    write_rows(p, ["a", "b"], [[0.1, "x"], [np.float64(1 / 3), 2]])
    assert p.read_text() == "a,b\n0.1,x\n0.3333333333333333,2\n"


def test_screen_identity():
    rng = np.random.default_rng(0)
    d = Dataset(rng.standard_normal(20), rng.standard_normal((20, 5)))
    r, report = variance_screen(d, 5)
    assert np.array_equal(r.X, d.X) and r.names == d.names and len(report) == 5


def test_screen_drops_constant_column():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((30, 4))
    X[:, 2] = 7.0
    r, _ = variance_screen(Dataset(rng.standard_normal(30), X), 3)
    assert "x3" not in r.names


def test_screen_matches_direct_variance_ranking():
    rng = np.random.default_rng(2)
    scales = rng.permutation(np.arange(1.0, 21.0))
    X = rng.standard_normal((500, 20)) * scales
    r, report = variance_screen(Dataset(rng.standard_normal(500), X), 6)
    var = [np.sum((X[:, j] - X[:, j].mean()) ** 2) / 499 for j in range(20)]
    oracle = sorted(range(20), key=lambda j: -var[j])[:6]
    assert [s.index for s in report] == oracle
    assert r.names == [f"x{j + 1}" for j in sorted(oracle)]
    assert report[0].variance == pytest.approx(var[oracle[0]])


def test_screen_ties_keep_earlier_column():
    X = np.tile(np.array([[0.0], [1.0], [2.0]]), (1, 3))
    r, report = variance_screen(Dataset(np.zeros(3), X), 2)
    assert [s.index for s in report] == [0, 1]


def test_screen_out_of_range():
    d = Dataset(np.zeros(3), np.ones((3, 2)))
    for k in (0, 3):
        with pytest.raises(DataError):
            variance_screen(d, k)
