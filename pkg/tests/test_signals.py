import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kspap.domain import BoxDomain, SpectralField, VectorSpectralField
from kspap.exceptions import AlmostPeriodNotFound, GridMismatch
from kspap.signals import (
    ApPart,
    ApTerm,
    Pap0Part,
    PapSignal,
    almost_period_search,
    ergodic_mean,
    pap0_residual,
    sample,
    sample_trajectory,
    shift_sup,
    signal_norms,
)
from kspap.trajectory import Trajectory

from oracles import exp_envelope_mean

SMALL = BoxDomain.cube(2, np.pi, 8)


def ap(*terms):
    return PapSignal(ApPart(tuple(ApTerm(*t) for t in terms)))


@pytest.mark.parametrize(
    "signal, t, expected",
    [
        (ap((1.0,)), np.pi / 2, 1.0),
        (ap((2.0, np.pi / 2, 3.0)), 0.0, 3.0),
        (PapSignal(pap0=Pap0Part("exponential", 2.0, 0.5)), -2.0, 2.0 * np.exp(-1.0)),
        (PapSignal(pap0=Pap0Part("power", 1.0, 2.0)), 3.0, 1 / 16),
        (ap((1.0,)) + PapSignal(pap0=Pap0Part()), 0.0, 1.0),
    ],
)
def test_sample_scalar(signal, t, expected):
    assert sample(signal, t) == pytest.approx(expected, rel=1e-14)


def test_sample_field():
    prof = SpectralField.mode(SMALL, (1, 0))
    s = PapSignal(ApPart((ApTerm(1.0, 0.0, 2.0, prof),)))
    v = sample(s, np.pi / 2)
    assert isinstance(v, SpectralField) and v.coefficients[1, 0] == pytest.approx(2.0)
    assert s.value_kind == "field"


def test_mixed_value_kinds_rejected():
    with pytest.raises(ValueError):
        PapSignal(ApPart((ApTerm(1.0, profile=SpectralField.mode(SMALL, (1, 0))),)), Pap0Part())


@pytest.mark.parametrize("L", [1.0, 10.0, 100.0])
def test_exponential_ergodic_mean(L):
    part = Pap0Part("exponential", 1.0, 1.0)
    assert ergodic_mean(part, L) == pytest.approx(exp_envelope_mean(L), rel=1e-6)
    assert part.analytic_ergodic_mean(L) == pytest.approx(exp_envelope_mean(L), rel=1e-12)


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0])
def test_power_ergodic_mean(rate):
    part = Pap0Part("power", 1.0, rate)
    assert ergodic_mean(part, 20.0) == pytest.approx(part.analytic_ergodic_mean(20.0), rel=1e-6)


@pytest.mark.parametrize("L", [10.0, 40.0, 100.0])
def test_ergodic_mean_halves_when_window_doubles(L):
    part = Pap0Part("exponential", 1.0, 1.0)
    assert 0.45 <= ergodic_mean(part, 2 * L) / ergodic_mean(part, L) <= 0.55


def test_sin_mean():
    assert ergodic_mean(ap((1.0,)), 10 * np.pi) == pytest.approx(2 / np.pi, rel=1e-8)


def test_ergodic_mean_of_trajectory():
    t = np.linspace(-5, 5, 2001)
    c = np.zeros((t.size,) + SMALL.shape)
    c[:, 0, 0] = np.exp(-np.abs(t)) / np.pi
    traj = Trajectory(SMALL, t, c)
    assert ergodic_mean(traj, 5.0, p=1.0) == pytest.approx(exp_envelope_mean(5.0) * np.pi, rel=1e-5)
    with pytest.raises(ValueError):
        ergodic_mean(traj, 6.0)


@pytest.mark.parametrize("L", [0.0, -1.0])
def test_ergodic_mean_rejects_bad_window(L):
    with pytest.raises(ValueError):
        ergodic_mean(Pap0Part(), L)


def test_almost_period_pure_sine():
    s = ap((1.0,))
    T = almost_period_search(s, 1e-6, (5.0, 7.0))
    assert T == pytest.approx(2 * np.pi, abs=1e-6)


def test_almost_period_two_frequencies():
    s = ap((1.0,), (0.2, 0.3, 0.5))
    T = almost_period_search(s, 1e-5, (30.0, 33.0))
    assert T == pytest.approx(10 * np.pi, abs=1e-5)
    assert shift_sup(s, T, density=128) < 1e-5


def test_almost_period_not_found():
    with pytest.raises(AlmostPeriodNotFound):
        almost_period_search(ap((1.0,)), 1e-3, (1.0, 2.0))


@pytest.mark.parametrize("eps, window", [(0.0, (1.0, 2.0)), (0.1, (2.0, 1.0))])
def test_almost_period_bad_args(eps, window):
    with pytest.raises(ValueError):
        almost_period_search(ap((1.0,)), eps, window)


def test_incommensurate_almost_period_reverified():
    s = ap((1.0,), (np.sqrt(2.0),))
    T = almost_period_search(s, 0.3, (0.0, 200.0))
    assert shift_sup(s, T, density=128) < 0.3 * 1.01


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(-3, 3), b=st.floats(-3, 3),
    t=st.floats(-50, 50),
    f1=st.floats(0.1, 3), f2=st.floats(0.1, 3),
)
def test_linearity(a, b, t, f1, f2):
    s1 = ap((f1, 0.2, 1.0)) + PapSignal(pap0=Pap0Part("exponential", 1.0, 0.5))
    s2 = ap((f2, -1.0, 2.0)) + PapSignal(pap0=Pap0Part("power", 1.5, 1.0))
    lhs = sample(a * s1 + b * s2, t)
    rhs = a * sample(s1, t) + b * sample(s2, t)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_vector_signal_norms():
    prof = VectorSpectralField.mode(SMALL, 0, (1, 0))
    s = PapSignal(ApPart((ApTerm(0.0, np.pi / 2, 1.0, prof),)))
    np.testing.assert_allclose(signal_norms(s, [0.0, 1.0]), np.pi / np.sqrt(2), rtol=1e-12)


def test_pap0_residual():
    prof = SpectralField.mode(SMALL, (1, 1))
    apart = PapSignal(ApPart((ApTerm(1.0, 0.0, 1.0, prof),)))
    full = apart + PapSignal(pap0=Pap0Part("exponential", 1.0, 1.0, prof))
    t = np.linspace(-20, 20, 801)
    res = pap0_residual(sample_trajectory(full, t), sample_trajectory(apart, t))
    np.testing.assert_allclose(res.tabulated_at(t)[:, 1, 1], np.exp(-np.abs(t)), atol=1e-15)
    assert ergodic_mean(res, 20.0) == pytest.approx(
        exp_envelope_mean(20.0) * np.pi / 2, rel=1e-3
    )


def test_pap0_residual_grid_mismatch():
    prof = SpectralField.mode(SMALL, (1, 0))
    s = PapSignal(ApPart((ApTerm(1.0, 0.0, 1.0, prof),)))
    with pytest.raises(GridMismatch):
        pap0_residual(sample_trajectory(s, np.linspace(0, 1, 11)), sample_trajectory(s, np.linspace(0, 1, 12)))


def test_tabulated_range():
    part = Pap0Part("tabulated", times=np.array([0.0, 1.0]), values=np.array([1.0, 0.0]))
    assert part.tabulated_at(0.25)[0] == pytest.approx(0.75)
    with pytest.raises(ValueError):
        part.tabulated_at(1.5)


@pytest.mark.parametrize("kwargs", [{"kind": "gaussian"}, {"kind": "exponential", "rate": 0.0},
                                    {"kind": "tabulated"}])
def test_invalid_pap0(kwargs):
    with pytest.raises(ValueError):
        Pap0Part(**kwargs)
