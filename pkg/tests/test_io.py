import json

import numpy as np
import pytest

from superliouville.geometry import Grid
from superliouville.io import jsonable, read_field_csv, write_field_csv, write_json


def test_csv_round_trip_exact(tmp_path, rng):
    g = Grid((-1.3, 0.7), 0.1, 7, 5)
    vals = rng.standard_normal(g.shape) * 1e3
    path = tmp_path / "f.csv"
    write_field_csv(path, g, vals)
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,x2,value"
    assert len(lines) == 1 + 35
    # x1 index outermost
    x1, x2, v = lines[2].split(",")
    assert float(x1) == g.x1[0] and float(x2) == g.x2[1] and float(v) == vals[0, 1]
    assert np.array_equal(read_field_csv(path, g), vals)


def test_csv_grid_mismatch(tmp_path):
    g = Grid.square(1.0, 5)
    write_field_csv(tmp_path / "f.csv", g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        read_field_csv(tmp_path / "f.csv", Grid.square(1.0, 7))
    with pytest.raises(ValueError):
        write_field_csv(tmp_path / "g.csv", g, np.zeros((4, 5)))


def test_csv_nan_round_trip(tmp_path):
    g = Grid.square(1.0, 3)
    v = np.zeros(g.shape)
    v[1, 1] = np.nan
    write_field_csv(tmp_path / "f.csv", g, v)
    back = read_field_csv(tmp_path / "f.csv", g)
    assert np.isnan(back[1, 1]) and back[0, 0] == 0.0


def test_json_is_canonical(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), float("nan")], "c": {"z": np.bool_(True)}}
    write_json(tmp_path / "x.json", obj)
    text = (tmp_path / "x.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [2, None], "b": 1.5, "c": {"z": True}}
    assert jsonable((1, 2)) == [1, 2]
