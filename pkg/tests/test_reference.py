import numpy as np
import pytest

from kspap.domain import BoxDomain, random_field
from kspap.duhamel import SolverConfig, _bracket_divergence
from kspap.reference import MethodOfLines

SMALL = BoxDomain.cube(2, np.pi, 8)


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_rhs_matches_transform_solver(rng, gamma):
    a = random_field(SMALL, rng).coefficients * 0.1
    mol = MethodOfLines(SMALL, gamma)
    cfg = SolverConfig(SMALL, gamma=gamma, dt=0.05, t_end=1.0)
    expected = -SMALL.eigenvalues * a + _bracket_divergence(cfg, a[None])[0]
    np.testing.assert_allclose(mol.rhs(0.0, a), expected, atol=1e-13)


def test_rhs_forcing():
    comps = np.zeros((2,) + SMALL.shape)
    comps[0, 1, 0] = 1.0
    mol = MethodOfLines(SMALL, forcing=lambda t: comps)
    out = mol.rhs(0.0, np.zeros(SMALL.shape))
    expected = np.zeros(SMALL.shape)
    expected[1, 0] = 1.0
    np.testing.assert_allclose(out, expected, atol=1e-14)


def test_rectangular_eigenvalues():
    d = BoxDomain((np.pi, 2.0), modes=6)
    a = np.zeros(d.shape)
    a[2, 3] = 1e-12
    out = MethodOfLines(d).rhs(0.0, a)
    assert out[2, 3] == pytest.approx(-d.eigenvalues[2, 3] * 1e-12, rel=1e-9)


def test_integrate_small_mode():
    a0 = np.zeros(SMALL.shape)
    a0[1, 1] = 1e-8
    a = MethodOfLines(SMALL).integrate(a0, 0.0, 1.0, 0.01)
    assert a[1, 1] == pytest.approx(1e-8 * np.exp(-2.0), rel=1e-8)


def test_integrate_bad_interval():
    with pytest.raises(ValueError):
        MethodOfLines(SMALL).integrate(np.zeros(SMALL.shape), 0.0, 1.0, 0.3)
