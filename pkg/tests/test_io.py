import numpy as np
import pytest

from l0fusion import Dataset
from l0fusion.io import (
    InputFormatError,
    read_config,
    read_dataset,
    read_vector,
    write_dataset,
    write_table,
    write_vector,
)


def test_dataset_round_trip(tmp_path, rng):
    data = Dataset(rng.standard_normal(6), rng.standard_normal((6, 3)), rng.standard_normal((6, 2)))
    truth = np.array([1.0, 0.0, -2.0])
    path = tmp_path / "d.csv"
    write_dataset(path, data, truth)
    back, t = read_dataset(path)
    assert np.array_equal(back.X, data.X) and np.array_equal(back.Z, data.Z)
    assert np.array_equal(back.y, data.y) and np.array_equal(t, truth)
    write_dataset(path, data)
    assert read_dataset(path)[1] is None


def test_dataset_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,x1,x2\n1,2,3\n4,five,6\n")
    with pytest.raises(InputFormatError, match="row 3"):
        read_dataset(path)
    path.write_text("y,x1,x2\n1,2\n")
    with pytest.raises(InputFormatError, match="row 2"):
        read_dataset(path)
    path.write_text("y,x1,x3\n1,2,3\n")
    with pytest.raises(InputFormatError, match="consecutively"):
        read_dataset(path)
    path.write_text("x1\n1\n")
    with pytest.raises(InputFormatError, match="'y'"):
        read_dataset(path)


def test_vector_round_trip(tmp_path):
    path = tmp_path / "v.txt"
    write_vector(path, [1.5, 0.0, -2.0])
    assert read_vector(path).tolist() == [1.5, 0.0, -2.0]
    path.write_text("1\nx\n")
    with pytest.raises(InputFormatError, match="line 2"):
        read_vector(path)


def test_config(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nreps = 3\ngap-tol=0.01  # trailing\n\n")
    assert read_config(path) == {"reps": "3", "gap_tol": "0.01"}
    path.write_text("reps 3\n")
    with pytest.raises(InputFormatError, match="line 1"):
        read_config(path)


def test_table(tmp_path):
    path = tmp_path / "t.csv"
    write_table(path, [{"a": 1, "b": None}, {"a": float("nan"), "b": True}], ["a", "b"])
    assert path.read_text() == "a,b\n1,\n,true\n"
