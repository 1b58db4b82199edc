"""Closed-form decay rates of the heat semigroup on hyperbolic space.

Only the scalar rate formulas are provided; ``delta`` is a dimension-dependent
positive constant that has no known value and must always be supplied.
"""

from __future__ import annotations

import math
from fractions import Fraction

__all__ = ["hyperbolic_rate_constants", "hyperbolic_sigma"]


def _inv(x):
    if x == math.inf:
        return 0
    if isinstance(x, (int, Fraction)):
        return Fraction(1) / Fraction(x)
    return 1.0 / x


def _check_delta(delta):
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")


def hyperbolic_rate_constants(p, q, n, delta) -> dict:
    """Rate ``gamma_{p,q} = (delta/2) [(1/p - 1/q) + (8/q)(1 - 1/p)]``.

    Integer or :class:`~fractions.Fraction` inputs give an exact
    ``Fraction``; ``q`` may be ``math.inf``.  The short-time factor is
    returned symbolically since its constant is unquantified.

    Raises
    ------
    ValueError
        Unless ``1 <= p <= q <= inf`` and ``delta > 0``.
    """
    _check_delta(delta)
    if not (1 <= p <= q):
        raise ValueError(f"need 1 <= p <= q <= inf, got p={p}, q={q}")
    ip, iq = _inv(p), _inv(q)
    rate = Fraction(delta) / 2 if isinstance(delta, (int, Fraction)) else delta / 2
    rate = rate * ((ip - iq) + 8 * iq * (1 - ip))
    return {
        "gamma_pq": rate,
        "h_n": f"C * max(t^(-{n}/2), 1)",
        "p": p,
        "q": q,
        "n": n,
        "delta": delta,
    }


def hyperbolic_sigma(p, n, delta):
    """Smallest of the three rates governing the nonlinear decay on hyperbolic space.

    ``min{g(p/2, p/2), (g(p/2, p/2) + g(pn/(4n-p), p/2))/2, (g(p/2, p/2) + g(p/3, p/2))/2}``
    with ``g`` from :func:`hyperbolic_rate_constants`; requires
    ``max(3, n) < p < 2n``.
    """
    _check_delta(delta)
    if not max(3, n) < p < 2 * n:
        raise ValueError(f"need max(3, n) < p < 2n = {2 * n}, got p = {p}")
    exact = isinstance(p, (int, Fraction))
    pf = Fraction(p) if exact else float(p)
    half = pf / 2
    g = lambda a, b: hyperbolic_rate_constants(a, b, n, delta)["gamma_pq"]  # noqa: E731
    base = g(half, half)
    mid = g(pf * n / (4 * n - pf), half)
    third = g(pf / 3, half)
    return min(base, (base + mid) / 2, (base + third) / 2)
