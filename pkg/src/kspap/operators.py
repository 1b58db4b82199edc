"""Exact spectral operators on box domains.

Every operator here is diagonal (or a diagonal map between the cosine and
mixed sine/cosine bases), so the heat semigroup, divergence, gradient and
the elliptic resolvent commute exactly.  The only non-diagonal operation is
the chemotactic flux ``-w grad (-Lap + gamma)^-1 w``, which is formed
pseudospectrally on a zero-padded grid large enough that the quadratic
product is alias-free.
"""

from __future__ import annotations

import numpy as np

from .domain import (
    BoxDomain,
    SpectralField,
    VectorSpectralField,
    analyze,
    field_mean_zero_tolerance,
    synthesize,
    _mixed_kinds,
)
from .exceptions import NotInvertibleOnConstants

__all__ = [
    "heat",
    "heat_vector",
    "divergence",
    "gradient",
    "div_heat",
    "resolvent",
    "lj",
    "resolvent_gradient",
    "kgamma",
    "chemotactic_flux",
    "flux_coefficients",
    "dealias_points",
]


def _check_time(t):
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return t


def heat(field: SpectralField, t: float) -> SpectralField:
    """Neumann heat semigroup: multiply each mode by ``exp(-lambda_k t)``."""
    t = _check_time(t)
    if t == 0.0:
        return field
    d = field.domain
    return SpectralField(d, field.coefficients * np.exp(-d.eigenvalues * t))


def heat_vector(vfield: VectorSpectralField, t: float) -> VectorSpectralField:
    t = _check_time(t)
    if t == 0.0:
        return vfield
    d = vfield.domain
    return VectorSpectralField(d, vfield.components * np.exp(-d.eigenvalues * t))


def divergence_coefficients(domain: BoxDomain, components) -> np.ndarray:
    """Divergence of mixed-basis components (axis ``-dim-1`` is the component)."""
    comps = np.asarray(components)
    out = 0.0
    for j, kappa in enumerate(domain.wavenumbers):
        out = out + kappa * np.take(comps, j, axis=comps.ndim - domain.dim - 1)
    return out


def divergence(vfield: VectorSpectralField) -> SpectralField:
    d = vfield.domain
    return SpectralField(d, divergence_coefficients(d, vfield.components))


def gradient(field: SpectralField) -> VectorSpectralField:
    d = field.domain
    return VectorSpectralField(
        d, np.stack([-kappa * field.coefficients for kappa in d.wavenumbers])
    )


def div_heat(vfield: VectorSpectralField, t: float) -> SpectralField:
    """``div exp(t Lap) F``; always has zero mean."""
    return divergence(heat_vector(vfield, t))


def _resolvent_multiplier(domain, gamma):
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    denom = domain.eigenvalues + gamma
    mult = np.zeros(domain.shape)
    nz = denom > 0
    mult[nz] = 1.0 / denom[nz]
    return mult


def resolvent(field: SpectralField, gamma: float) -> SpectralField:
    """``(-Lap + gamma I)^-1``; for ``gamma = 0`` the field must be mean-zero."""
    d = field.domain
    if float(gamma) == 0.0 and abs(field.mean) > field_mean_zero_tolerance(field.coefficients):
        raise NotInvertibleOnConstants(
            f"gamma = 0 resolvent needs a mean-zero field (mean coefficient {field.mean:.3g})"
        )
    return SpectralField(d, field.coefficients * _resolvent_multiplier(d, gamma))


def lj(field: SpectralField, j: int, gamma: float) -> VectorSpectralField:
    """``d_j (-Lap + gamma)^-1 field`` as a vector field nonzero only in component ``j``."""
    d = field.domain
    if not 0 <= j < d.dim:
        raise ValueError(f"axis {j} out of range for dim {d.dim}")
    v = resolvent(field, gamma)
    comps = np.zeros((d.dim,) + d.shape)
    comps[j] = -d.wavenumbers[j] * v.coefficients
    return VectorSpectralField(d, comps)


def resolvent_gradient(field: SpectralField, gamma: float) -> VectorSpectralField:
    """All components ``(L_1 f, ..., L_n f)``."""
    return gradient(resolvent(field, gamma))


def kgamma(gamma: float, n: int) -> float:
    """``1`` at ``gamma = 0`` and ``gamma**-(n-1)`` for ``gamma > 0``."""
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return 1.0
    return gamma ** (-(int(n) - 1))


def dealias_points(domain: BoxDomain) -> int:
    """Grid size per axis for alias-free quadratic products (``>= 3N/2``)."""
    return 2 * domain.modes


def flux_coefficients(domain: BoxDomain, omega, gamma: float, other=None) -> np.ndarray:
    """Mixed-basis coefficients of ``-w grad (-Lap + gamma)^-1 v``.

    ``omega`` (and ``other``, defaulting to ``omega``) hold cosine
    amplitudes with optional leading batch axes.  The returned array has an
    extra component axis just before the spectral axes.  Mean modes of the
    potential are dropped, which only removes constants from ``v``.
    """
    w = np.asarray(omega, dtype=float)
    src = w if other is None else np.asarray(other, dtype=float)
    n = domain.dim
    P = dealias_points(domain)
    mult = _resolvent_multiplier(domain, gamma)
    v = src * mult
    w_grid = synthesize(w, "c" * n, P)
    comps = []
    for j, kappa in enumerate(domain.wavenumbers):
        kinds = _mixed_kinds(n, j)
        dv_grid = synthesize(-kappa * v, kinds, P)
        comps.append(analyze(-w_grid * dv_grid, kinds, domain.modes))
    return np.stack(comps, axis=w.ndim - n)


def chemotactic_flux(omega: SpectralField, gamma: float, other: SpectralField | None = None):
    """``-omega grad (-Lap + gamma)^-1 other`` as a :class:`VectorSpectralField`."""
    d = omega.domain
    src = omega if other is None else other
    if float(gamma) == 0.0 and abs(src.mean) > field_mean_zero_tolerance(src.coefficients):
        raise NotInvertibleOnConstants("gamma = 0 flux needs a mean-zero potential source")
    return VectorSpectralField(d, flux_coefficients(d, omega.coefficients, gamma, src.coefficients))
