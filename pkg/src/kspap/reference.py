"""Brute-force method-of-lines integrator used as an independent check.

The chemotaxis equation ``u_t = Lap u + div(-u grad v + f)`` with
``(-Lap + gamma) v = u`` is advanced by classical fourth-order Runge-Kutta
on cosine-Galerkin coefficients.  The nonlinear term is projected by
Gauss-Legendre quadrature in weak form, ``<div F, phi_k> = -<F, grad phi_k>``,
which shares no code with the transform-based flux of the main solver.
"""

from __future__ import annotations

import numpy as np

from .domain import BoxDomain

__all__ = ["MethodOfLines"]


class MethodOfLines:
    """RK4 Galerkin integrator on ``domain``.

    Parameters
    ----------
    domain : BoxDomain
    gamma : float
        Resolvent shift in the elliptic equation.
    forcing : callable, optional
        ``forcing(t)`` returns vector coefficients of shape
        ``(dim,) + domain.shape`` in the sine-along-own-axis basis.
    nodes_per_axis : int, optional
        Quadrature nodes per axis for the projection; defaults to ``3 * modes``.
    """

    def __init__(self, domain: BoxDomain, gamma=0.0, forcing=None, nodes_per_axis=None):
        self.domain = domain
        self.gamma = float(gamma)
        self.forcing = forcing
        m = nodes_per_axis or 3 * domain.modes
        x, w = np.polynomial.legendre.leggauss(m)
        k = np.arange(domain.modes)
        self._cos, self._sin, self._dcos, self._w = [], [], [], []
        for L in domain.side_lengths:
            xs = 0.5 * L * (x + 1.0)
            arg = np.outer(xs, k) * np.pi / L
            self._cos.append(np.cos(arg))
            self._sin.append(np.sin(arg))
            # derivative of cos(k pi x / L)
            self._dcos.append(-np.sin(arg) * (k * np.pi / L))
            self._w.append(0.5 * L * w)
        n = domain.dim
        lam = np.zeros(domain.shape)
        norm = np.ones(domain.shape)
        for j, L in enumerate(domain.side_lengths):
            shp = [1] * n
            shp[j] = domain.modes
            lam = lam + ((k * np.pi / L) ** 2).reshape(shp)
            nj = np.full(domain.modes, L / 2.0)
            nj[0] = L
            norm = norm * nj.reshape(shp)
        self._lam = lam
        self._norm = norm
        denom = lam + self.gamma
        self._res = np.where(denom > 0, 1.0 / np.where(denom > 0, denom, 1.0), 0.0)

    def _apply(self, c, mats):
        out = c
        for j, M in enumerate(mats):
            out = np.moveaxis(np.tensordot(M, out, axes=([1], [j])), 0, j)
        return out

    def _project(self, g, mats):
        # int g * prod_j mats[j][:, k_j] dx, quadrature weights folded in
        out = g
        for j, (M, w) in enumerate(zip(mats, self._w)):
            out = np.moveaxis(np.tensordot(M * w[:, None], out, axes=([0], [j])), 0, j)
        return out

    def _mixed(self, axis, deriv=False):
        mats = []
        for j in range(self.domain.dim):
            if j == axis:
                mats.append(self._dcos[j] if deriv else self._sin[j])
            else:
                mats.append(self._cos[j])
        return mats

    def rhs(self, t, a):
        """Time derivative of the cosine coefficients ``a``."""
        n = self.domain.dim
        u = self._apply(a, self._cos)
        v = a * self._res
        flux = []
        for j in range(n):
            dv = self._apply(v, self._mixed(j, deriv=True))
            fj = -u * dv
            if self.forcing is not None:
                fj = fj + self._apply(self.forcing(t)[j], self._mixed(j))
            flux.append(fj)
        weak = np.zeros(self.domain.shape)
        for j in range(n):
            weak -= self._project(flux[j], self._mixed(j, deriv=True))
        return -self._lam * a + weak / self._norm

    def integrate(self, a0, t0, t1, dt):
        """RK4 from ``t0`` to ``t1``; returns the coefficients at ``t1``."""
        steps = int(round((t1 - t0) / dt))
        if steps < 1 or abs(steps * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
            raise ValueError("interval is not a multiple of dt")
        a = np.array(a0, dtype=float)
        t = float(t0)
        for _ in range(steps):
            k1 = self.rhs(t, a)
            k2 = self.rhs(t + dt / 2, a + dt / 2 * k1)
            k3 = self.rhs(t + dt / 2, a + dt / 2 * k2)
            k4 = self.rhs(t + dt, a + dt * k3)
            a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
        return a
