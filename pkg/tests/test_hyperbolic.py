import math
from fractions import Fraction

import pytest

from kspap.hyperbolic import hyperbolic_rate_constants, hyperbolic_sigma

from oracles import GAMMA_HALF_HALF, GAMMA_MID_HALF, GAMMA_THIRD_HALF, SIGMA_7_2


@pytest.mark.parametrize(
    "p, q, expected",
    [
        (2, 2, Fraction(1)),
        (1, math.inf, Fraction(1, 2)),
        (1, 1, Fraction(0)),
        (Fraction(7, 4), Fraction(7, 4), GAMMA_HALF_HALF),
        (Fraction(14, 9), Fraction(7, 4), GAMMA_MID_HALF),
        (Fraction(7, 6), Fraction(7, 4), GAMMA_THIRD_HALF),
    ],
)
def test_rate_exact(p, q, expected):
    out = hyperbolic_rate_constants(p, q, 2, 1)
    assert out["gamma_pq"] == expected
    assert "C" in out["h_n"]


def test_rate_scales_with_delta():
    a = hyperbolic_rate_constants(2, 3, 2, 1)["gamma_pq"]
    b = hyperbolic_rate_constants(2, 3, 2, Fraction(5, 2))["gamma_pq"]
    assert b == Fraction(5, 2) * a


def test_rate_float_inputs():
    out = hyperbolic_rate_constants(1.75, 1.75, 2, 1.0)["gamma_pq"]
    assert out == pytest.approx(float(GAMMA_HALF_HALF), rel=1e-15)


@pytest.mark.parametrize("p, q, delta", [(0.5, 1, 1), (3, 2, 1), (2, 2, 0), (2, 2, -1)])
def test_rate_errors(p, q, delta):
    with pytest.raises(ValueError):
        hyperbolic_rate_constants(p, q, 2, delta)


def test_sigma_exact():
    assert hyperbolic_sigma(Fraction(7, 2), 2, 1) == SIGMA_7_2
    assert hyperbolic_sigma(3.5, 2, 1.0) == pytest.approx(float(SIGMA_7_2), rel=1e-15)


@pytest.mark.parametrize("p, n, delta", [(3, 2, 1), (4, 2, 1), (Fraction(7, 2), 2, 0)])
def test_sigma_errors(p, n, delta):
    with pytest.raises(ValueError):
        hyperbolic_sigma(p, n, delta)
