import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freefield.report import csv_text, fmt, json_text, write_csv


def test_header_only_csv(tmp_path):
    assert csv_text(("n", "bound", "abs_x", "violated"), []) == "n,bound,abs_x,violated\n"
    write_csv(tmp_path / "e.csv", ("a",), [])
    assert (tmp_path / "e.csv").read_text() == "a\n"


def test_row_width_checked():
    with pytest.raises(ValueError):
        csv_text(("a", "b"), [(1,)])


def test_scalar_formats():
    assert fmt(True) == "true" and fmt(np.bool_(False)) == "false"
    assert fmt(np.int64(7)) == "7"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == "NaN" and fmt(-math.inf) == "-Infinity"
    assert fmt(None) == ""


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_seventeen_digits_round_trip(x):
    assert float(fmt(x)) == x


def test_json_round_trip():
    obj = {"b": [1, 2.5, None, True], "a": {"z": 1 + 2j}, "pi": math.pi, "s": 'q"uote'}
    back = json.loads(json_text(obj))
    assert back["pi"] == math.pi and back["a"]["z"] == {"re": 1.0, "im": 2.0}
    assert back["b"] == [1, 2.5, None, True] and back["s"] == 'q"uote'
    assert list(back) == ["b", "a", "pi", "s"]  # insertion order kept
    with pytest.raises(TypeError):
        json_text({"x": object()})
