import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from kspap.domain import BoxDomain, SpectralField, VectorSpectralField, lp_norm, random_field, random_vector_field
from kspap.estimates import EstimateFitter, verify_dispersive, verify_lj_bound, verify_smoothing
from kspap.exceptions import NotInvertibleOnConstants
from kspap.operators import (
    chemotactic_flux,
    div_heat,
    divergence,
    gradient,
    heat,
    kgamma,
    lj,
    resolvent,
)

from oracles import COS_NORM_175, LJ_COS_RATIO, SIN_NORM_14

SMALL = BoxDomain.cube(2, np.pi, 8)


@pytest.mark.parametrize("k, t", [((1, 0), 1.0), ((1, 1), 0.5), ((0, 3), 0.1), ((0, 0), 7.0)])
def test_heat_mode(box, k, t):
    lam = k[0] ** 2 + k[1] ** 2
    out = heat(SpectralField.mode(box, k), t)
    X, Y = box.quadrature_grid()
    expected = np.exp(-lam * t) * np.cos(k[0] * X) * np.cos(k[1] * Y)
    np.testing.assert_allclose(out.values(), expected, atol=1e-14)


def test_heat_negative_time(box):
    with pytest.raises(ValueError):
        heat(SpectralField.zeros(box), -0.1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 3.0), s=st.floats(0.0, 3.0))
def test_semigroup_law(seed, t, s):
    f = random_field(SMALL, seed, mean_zero=False)
    lhs = heat(heat(f, t), s).coefficients
    rhs = heat(f, t + s).coefficients
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.max(np.abs(f.coefficients)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 5.0))
def test_mass_conservation(seed, t):
    f = random_field(SMALL, seed, mean_zero=False)
    assert heat(f, t).mean == f.mean


def test_positivity(box):
    # 1 + cos x cos y / 2 is positive; the semigroup keeps it so
    f = SpectralField.mode(box, (0, 0)) + SpectralField.mode(box, (1, 1), 0.5)
    for t in (0.0, 0.1, 1.0, 10.0):
        assert heat(f, t).values().min() > 0


def test_div_heat_mode(box):
    # div e^{t Lap} (sin x, 0) = e^{-t} cos x
    F = VectorSpectralField.mode(box, 0, (1, 0))
    out = div_heat(F, 0.7)
    expected = np.zeros(box.shape)
    expected[1, 0] = np.exp(-0.7)
    np.testing.assert_allclose(out.coefficients, expected, atol=1e-15)


@pytest.mark.parametrize("t", [0.0, 0.01, 1.0])
def test_div_heat_mean_zero(rng, t):
    F = random_vector_field(SMALL, rng)
    assert div_heat(F, t).mean == 0.0


def test_div_grad_is_laplacian(rng):
    f = random_field(SMALL, rng)
    np.testing.assert_allclose(
        divergence(gradient(f)).coefficients, -SMALL.eigenvalues * f.coefficients, atol=1e-13
    )


@pytest.mark.parametrize("gamma, k, expected", [(0.0, (1, 0), 1.0), (1.0, (1, 1), 1 / 3), (0.5, (0, 0), 2.0), (2.0, (2, 0), 1 / 6)])
def test_resolvent_mode(box, gamma, k, expected):
    out = resolvent(SpectralField.mode(box, k), gamma)
    assert out.coefficients[k] == pytest.approx(expected, rel=1e-15)
    assert np.count_nonzero(out.coefficients) == 1


def test_resolvent_needs_mean_zero(box):
    with pytest.raises(NotInvertibleOnConstants):
        resolvent(SpectralField.mode(box, (0, 0)), 0.0)
    with pytest.raises(ValueError):
        resolvent(SpectralField.zeros(box), -1.0)


@pytest.mark.parametrize("gamma", [0.0, 0.5, 3.0])
def test_resolvent_inverts_shifted_laplacian(rng, gamma):
    f = random_field(SMALL, rng, mean_zero=gamma == 0.0)
    v = resolvent(f, gamma)
    back = SpectralField(SMALL, (SMALL.eigenvalues + gamma) * v.coefficients)
    np.testing.assert_allclose(back.coefficients, f.coefficients, atol=1e-13)


def test_lj_cos_x(box):
    # d_x (-Lap)^-1 cos x = -sin x
    v = lj(SpectralField.mode(box, (1, 0)), 0, 0.0)
    X, _ = box.quadrature_grid()
    np.testing.assert_allclose(v.values()[0], -np.sin(X), atol=1e-14)
    assert np.all(v.values()[1] == 0)


def test_lj_axis_out_of_range(box):
    with pytest.raises(ValueError):
        lj(SpectralField.mode(box, (1, 0)), 2, 0.0)


@pytest.mark.parametrize("gamma, n, expected", [(0.0, 2, 1.0), (0.5, 2, 2.0), (2.0, 3, 0.25), (1.0, 3, 1.0)])
def test_kgamma(gamma, n, expected):
    assert kgamma(gamma, n) == pytest.approx(expected)


def test_kgamma_rejects_negative():
    with pytest.raises(ValueError):
        kgamma(-1.0, 2)


def test_flux_of_single_mode(box):
    # -cos x * d_x (-Lap)^-1 cos x = cos x sin x = sin 2x / 2
    w = SpectralField.mode(box, (1, 0))
    F = chemotactic_flux(w, 0.0)
    X, _ = box.quadrature_grid()
    np.testing.assert_allclose(F.values()[0], 0.5 * np.sin(2 * X), atol=1e-14)
    np.testing.assert_allclose(F.values()[1], 0.0, atol=1e-14)


def test_flux_needs_mean_zero_source(box):
    with pytest.raises(NotInvertibleOnConstants):
        chemotactic_flux(SpectralField.mode(box, (0, 0)), 0.0)


def test_oracle_norms(box):
    assert lp_norm(SpectralField.mode(box, (1, 0)), 1.75) == pytest.approx(COS_NORM_175, rel=1e-6)
    sin_x = VectorSpectralField.mode(box, 0, (1, 0))
    assert lp_norm(sin_x, 14.0) == pytest.approx(SIN_NORM_14, rel=1e-8)


def test_lj_ratio_matches_oracle(box):
    rep = verify_lj_bound(box, 1.75, 0.0, fields=[SpectralField.mode(box, (1, 0))], j=0)
    assert rep.q == pytest.approx(14.0)
    assert rep.fitted_constant == pytest.approx(LJ_COS_RATIO, rel=1e-6)


def test_dispersive_single_mode(box):
    # for cos x the ratio at time t is e^{-t} / ((1 + t^-a) e^{-t}) with p = q
    rep = verify_dispersive(box, 2.0, 2.0, t_grid=(0.5, 2.0), fields=[SpectralField.mode(box, (1, 0))])
    np.testing.assert_allclose(rep.ratio_max, [0.5, 0.5], rtol=1e-14)


def test_smoothing_forms_agree_on_mode(box):
    w = SpectralField.mode(box, (1, 0))
    g = verify_smoothing(box, 2.0, 2.0, t_grid=(1.0,), fields=[w])
    d = verify_smoothing(box, 2.0, 2.0, t_grid=(1.0,), fields=[VectorSpectralField.mode(box, 0, (1, 0))],
                         form="divergence")
    assert g.fitted_constant == pytest.approx(d.fitted_constant, rel=1e-12)


@pytest.mark.parametrize("p, q", [(1.0, 2.0), (0.5, 0.5)])
def test_estimate_exponent_errors(box, p, q):
    with pytest.raises(ValueError):
        verify_dispersive(box, p, q, trials=1)


def test_lj_requires_p_below_n(box):
    with pytest.raises(ValueError):
        verify_lj_bound(box, 2.5, 0.0, trials=1)


def test_lj_constant_decreases_with_gamma():
    d = BoxDomain.cube(2, np.pi, 16)
    c0 = verify_lj_bound(d, 1.75, 0.0, trials=20, seed=3).fitted_constant
    c1 = verify_lj_bound(d, 1.75, 1.0, trials=20, seed=3).fitted_constant
    assert c1 <= c0


def test_report_serialisation(tmp_path):
    rep = verify_dispersive(SMALL, np.inf, 2.0, t_grid=(0.1, 1.0), trials=4, seed=1)
    rep.to_json(tmp_path / "r.json")
    rep.to_csv(tmp_path / "r.csv")
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["p"] == "inf" and data["trials"] == 4 and "ratios" not in data
    rows = (tmp_path / "r.csv").read_text().splitlines()
    assert rows[0] == "t,ratio_max,ratio_mean" and len(rows) == 3


def test_reports_are_deterministic():
    a = verify_smoothing(SMALL, 3.5, 1.75, t_grid=(0.1,), trials=5, seed=9)
    b = verify_smoothing(SMALL, 3.5, 1.75, t_grid=(0.1,), trials=5, seed=9)
    np.testing.assert_array_equal(a.ratios, b.ratios)


def test_estimate_fitter_api():
    est = EstimateFitter(estimate="dispersive", p=3.5, q=1.75, n_trials=5, t_grid=(0.1, 1.0), random_state=2)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(AttributeError):
        est.validate(SMALL, 5)
    est.fit(SMALL)
    assert est.constant_ == est.report_.fitted_constant > 0
    assert est.validate(SMALL, 2) == pytest.approx(1.0)
    with pytest.raises(TypeError):
        EstimateFitter().fit("not a domain")
