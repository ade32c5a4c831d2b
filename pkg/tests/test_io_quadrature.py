import csv
import io
import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pqdlab._io import csv_text, fmt, loglog_svg
from pqdlab._quadrature import log_panels, tail_integrals


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_cells_round_trip(v):
    assert float(fmt(v)) == v


def test_cell_formatting():
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(True) == "true" and fmt(3) == "3"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(np.float64(2.5)) == "2.5"


def test_csv_dialect():
    text = csv_text(["a", "b"], [{"a": 1.5, "b": "x,y"}, {"a": None}])
    assert text == 'a,b\r\n1.5,"x,y"\r\n,\r\n'
    assert list(csv.reader(io.StringIO(text)))[1] == ["1.5", "x,y"]


def test_svg_is_well_formed_and_skips_nonpositive_points():
    svg = loglog_svg([1, 10, 100], {"s": [1.0, 0.0, 0.01]}, title="a<b")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "a&lt;b" in svg
    assert svg.count("<polyline") == 1
    (poly,) = [line for line in svg.splitlines() if line.startswith("<polyline")]
    assert poly.count(",") == 2


def test_log_panels_power_law():
    vals = log_panels(lambda t: t**-3.0, np.array([1.0, 2.0]), np.array([2.0, 1e9]))
    assert_allclose(vals, [0.5 - 0.125, 0.125 - 0.5e-18], rtol=1e-12)


def test_tail_integrals_suffix_sums():
    lowers = np.array([1.0, 5.0, 50.0, 2e9])
    got = tail_integrals(lambda t: np.exp(-t / 10.0) / 10.0, lowers, 1e9, breaks=(10.0,))
    expected = [math.exp(-v / 10.0) if v < 1e9 else 0.0 for v in lowers]
    assert_allclose(got, expected, rtol=1e-10, atol=1e-300)


def test_non_adaptive_mode_handles_step_functions():
    def step(t):
        return np.where(t < 3.0, 1.0, 0.0)

    got = tail_integrals(step, np.array([1.0]), 10.0, breaks=(3.0,), adaptive=False)
    assert_allclose(got, [2.0], rtol=1e-12)
