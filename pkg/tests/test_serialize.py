import json
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from critnls.domain import build_domain
from critnls.serialize import config_hash, dumps, fmt_float, read_field_csv, to_plain, write_field_csv


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip_is_exact(x):
    assert float(fmt_float(x)) == x


def test_non_finite_become_strings():
    assert to_plain([math.nan, math.inf, -math.inf]) == ["nan", "inf", "-inf"]


def test_dumps_sorts_keys_and_is_valid_json():
    text = dumps({"b": np.float64(1 / 3), "a": [np.int64(2), True, None]})
    assert text.index('"a"') < text.index('"b"')
    back = json.loads(text)
    assert back["b"] == 1 / 3 and back["a"] == [2, True, None]


def test_config_hash_ignores_key_order():
    assert config_hash({"x": 1, "y": [1.5]}) == config_hash({"y": [1.5], "x": 1})


def test_field_csv_roundtrip_bit_exact(tmp_path):
    d = build_domain(3, "radial-log-spaced", 10.0, 64)
    u = np.exp(-d.radius) / 3
    write_field_csv(tmp_path / "f.csv", d, {"u": u})
    back = read_field_csv(tmp_path / "f.csv")
    np.testing.assert_array_equal(back["r"], d.radius)
    np.testing.assert_array_equal(back["u"], u)
