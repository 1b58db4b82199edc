import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kspap.domain import (
    BoxDomain,
    SpectralField,
    VectorSpectralField,
    batch_norms,
    coefficient_l2,
    first_eigenvalue,
    grid_from_csv,
    grid_to_csv,
    lp_norm,
    random_field,
    to_coefficients,
    to_grid,
)

from oracles import COS_NORM_175


@pytest.mark.parametrize(
    "lengths, expected",
    [((np.pi, np.pi), 1.0), ((2 * np.pi,), 0.25), ((np.pi, np.pi / 2), 1.0), ((1.0, 2.0, 4.0), (np.pi / 4) ** 2)],
)
def test_first_eigenvalue(lengths, expected):
    assert first_eigenvalue(BoxDomain(lengths, modes=8)) == pytest.approx(expected, rel=1e-15)


def test_eigenvalues_closed_form():
    d = BoxDomain((np.pi, np.pi / 2), modes=6)
    kx, ky = np.meshgrid(np.arange(6), np.arange(6), indexing="ij")
    np.testing.assert_allclose(d.eigenvalues, kx**2 + (2 * ky) ** 2, rtol=1e-15, atol=0)


@pytest.mark.parametrize("kwargs", [{"side_lengths": (0.0,)}, {"side_lengths": (1.0,), "modes": 0},
                                    {"side_lengths": (1.0,), "modes": 8, "quadrature_points": 15}])
def test_invalid_domain(kwargs):
    with pytest.raises(ValueError):
        BoxDomain(**kwargs)


def test_cos_x_to_coefficients(box):
    X, Y = box.grid()
    c = to_coefficients(np.cos(X), box).coefficients
    expected = np.zeros(box.shape)
    expected[1, 0] = 1.0
    np.testing.assert_allclose(c, expected, atol=1e-14)


def test_ones_to_coefficients(box):
    c = to_coefficients(np.ones((box.quadrature_points,) * 2), box).coefficients.copy()
    assert c[0, 0] == pytest.approx(1.0, abs=1e-14)
    c[0, 0] = 0.0
    assert np.max(np.abs(c)) < 1e-14


def test_round_trip(box, rng):
    f = SpectralField(box, rng.standard_normal(box.shape))
    g = to_grid(f)
    back = to_grid(to_coefficients(g, box))
    assert np.max(np.abs(back - g)) <= 1e-12
    np.testing.assert_allclose(to_coefficients(g, box).coefficients, f.coefficients, atol=1e-13)


def test_grid_size_mismatch(box):
    with pytest.raises(ValueError, match="does not match"):
        to_coefficients(np.zeros((10, 10)), box)


def test_vector_sine_components(box):
    X, Y = box.quadrature_grid()
    v = VectorSpectralField.mode(box, 0, (1, 0), 2.0)
    np.testing.assert_allclose(v.values()[0], 2.0 * np.sin(X), atol=1e-14)
    assert np.all(v.values()[1] == 0)


@pytest.mark.parametrize("p", [1.0, 1.75, 2.0, 3.5, np.inf])
def test_constant_norm(box, p):
    c = -2.5
    f = SpectralField.mode(box, (0, 0), c)
    expected = abs(c) * (np.pi ** (2 / p) if np.isfinite(p) else 1.0)
    assert lp_norm(f, p) == pytest.approx(expected, rel=1e-13)


def test_cos_norm_p2(box):
    assert lp_norm(SpectralField.mode(box, (1, 0)), 2) == pytest.approx(np.pi / np.sqrt(2), rel=1e-14)


def test_cos_norm_against_fine_oracle(box):
    coarse = lp_norm(SpectralField.mode(box, (1, 0)), 1.75)
    fine_box = BoxDomain.cube(2, np.pi, 32, 1280)
    fine = lp_norm(SpectralField.mode(fine_box, (1, 0)), 1.75)
    assert coarse == pytest.approx(COS_NORM_175, rel=1e-6)
    assert abs(fine - COS_NORM_175) < abs(coarse - COS_NORM_175)


def test_norm_rejects_small_p(box):
    with pytest.raises(ValueError):
        lp_norm(SpectralField.zeros(box), 0.5)


def test_batch_norms_match_single(box, rng):
    fields = [random_field(box, rng) for _ in range(5)]
    batch = batch_norms(box, np.stack([f.coefficients for f in fields]), 1.75)
    np.testing.assert_allclose(batch, [lp_norm(f, 1.75) for f in fields], rtol=1e-14)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.floats(1.0, 3.0), gap=st.floats(0.1, 4.0))
def test_scaled_holder(seed, q, gap):
    d = BoxDomain.cube(2, np.pi, 12)
    f = random_field(d, seed, mean_zero=False)
    p = q + gap
    lhs = lp_norm(f, q)
    rhs = d.volume ** (1 / q - 1 / p) * lp_norm(f, p)
    assert lhs <= rhs * (1 + 1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_parseval(seed):
    d = BoxDomain.cube(2, np.pi, 16)
    f = SpectralField(d, np.random.default_rng(seed).standard_normal(d.shape))
    assert lp_norm(f, 2) == pytest.approx(coefficient_l2(f), rel=1e-8)


def test_rectangular_parseval(rng):
    d = BoxDomain((np.pi, 2.0), modes=10)
    f = SpectralField(d, rng.standard_normal(d.shape))
    assert lp_norm(f, 2) == pytest.approx(coefficient_l2(f), rel=1e-10)


def test_field_arithmetic(box):
    a = SpectralField.mode(box, (1, 0), 1.0)
    b = SpectralField.mode(box, (0, 1), 2.0)
    c = 2 * a - b
    assert c.coefficients[1, 0] == 2.0 and c.coefficients[0, 1] == -2.0
    with pytest.raises(ValueError):
        a.coefficients[0, 0] = 1.0


def test_json_round_trip(tmp_path, rng):
    d = BoxDomain.cube(2, np.pi, 6)
    f = random_field(d, rng)
    f.to_json(tmp_path / "f.json")
    g = SpectralField.from_json(tmp_path / "f.json")
    assert g.domain == d
    np.testing.assert_array_equal(g.coefficients, f.coefficients)


def test_csv_round_trip(tmp_path, rng):
    d = BoxDomain.cube(2, np.pi, 6)
    g = to_grid(random_field(d, rng))
    grid_to_csv(tmp_path / "g.csv", g)
    np.testing.assert_array_equal(grid_from_csv(tmp_path / "g.csv", d), g)


def test_random_field_mean_zero(box, rng):
    assert random_field(box, rng).mean == 0.0
