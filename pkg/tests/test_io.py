import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hbv.core import Ball, Box, CellSet, Difference, Grid, ScalarField, shape_from_dict
from hbv.io import (
    RasterFormatError,
    dumps_report,
    format_csv,
    format_field,
    format_set,
    load_shapes,
    parse_field,
    parse_set,
    shape_to_json,
)


def test_set_header_layout():
    g = Grid(2, (2, 3), 0.25, (-0.25, 0.5))
    m = np.array([[1, 0, 0], [0, 1, 1]], bool)
    text = format_set(CellSet(g, m))
    head, body = text.splitlines()
    assert head == "HBVSET 2 2 3 0.25 -0.25 0.5"
    assert body.split() == ["1", "0", "0", "0", "1", "1"]  # row-major, axis 0 slowest


@given(st.integers(1, 3).flatmap(lambda d: st.tuples(st.just(d), st.lists(st.integers(1, 4), min_size=d, max_size=d))),
       st.integers(0, 2**31 - 1))
def test_set_roundtrip(dim_shape, seed):
    d, shape = dim_shape
    rng = np.random.default_rng(seed)
    g = Grid(d, tuple(shape), float(rng.uniform(0.01, 2)), tuple(rng.uniform(-3, 0, d)))
    S = CellSet(g, rng.random(tuple(shape)) < 0.5)
    back = parse_set(format_set(S))
    assert back == S and back.grid == g


@given(arrays(np.float64, (3, 4), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_field_roundtrip_exact(vals):
    g = Grid(2, (3, 4), 0.1, (-0.15, -0.2))
    back = parse_field(format_field(ScalarField(g, vals)))
    assert np.array_equal(back.values, vals)


@pytest.mark.parametrize("text", [
    "",
    "HBVFIELD 1 2 1 0\n0 0\n",
    "HBVSET 2 2\n",
    "HBVSET 1 3 0.5 0\n1 0\n",
    "HBVSET 1 2 0.5 0\n1 2\n",
    "HBVSET x 2 0.5 0\n1 0\n",
])
def test_malformed_sets(text):
    with pytest.raises(RasterFormatError):
        parse_set(text)


def test_malformed_field():
    with pytest.raises(RasterFormatError):
        parse_field("HBVFIELD 1 2 0.5 0\n1.0 abc\n")


def test_shape_documents(tmp_path):
    s = Difference(Box((-1.0, -1.0), (1.0, 1.0)), Ball((0.0, 0.0), 0.5))
    assert shape_from_dict(json.loads(shape_to_json(s))).to_dict() == s.to_dict()
    p = tmp_path / "one.json"
    p.write_text(shape_to_json(s))
    assert len(load_shapes(p)) == 1
    p.write_text(json.dumps([s.to_dict(), Ball((0.0, 0.0), 1.0).to_dict()]))
    assert [x.variant for x in load_shapes(p)] == ["difference", "ball"]
    p.write_text("")
    assert load_shapes(p) == []


def test_report_is_stable():
    doc = {"b": np.float64(0.1), "a": [np.int64(3), np.bool_(True)], "c": float("inf"), "arr": np.arange(3)}
    text = dumps_report(doc)
    assert text == dumps_report(dict(reversed(list(doc.items()))))
    back = json.loads(text)
    assert back["schema"] == 1 and back["a"] == [3, True] and back["c"] == "inf" and back["arr"] == [0, 1, 2]
    assert back["b"] == 0.1


def test_csv_round_trip_floats():
    text = format_csv(["s", "P"], [{"s": 0.1, "P": 1 / 3}])
    assert text.splitlines() == ["s,P", "0.10000000000000001,0.33333333333333331"]
    assert float(text.splitlines()[1].split(",")[1]) == 1 / 3
