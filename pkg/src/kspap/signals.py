"""Almost periodic and pseudo almost periodic time signals.

A :class:`PapSignal` keeps its two parts apart: an almost periodic part
given as a finite trigonometric polynomial in ``t`` and a vanishing-mean
part built from decaying envelopes (or tabulated samples).  Each term
carries a spatial profile; a profile of ``None`` makes the signal
real-valued.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from .domain import (
    BoxDomain,
    SpectralField,
    VectorSpectralField,
    _lp_from_values,
    _mixed_kinds,
    lp_norm,
)
from .exceptions import AlmostPeriodNotFound, GridMismatch
from .trajectory import Trajectory

__all__ = [
    "ApTerm",
    "ApPart",
    "Pap0Part",
    "PapSignal",
    "sample",
    "sample_trajectory",
    "signal_norms",
    "ergodic_mean",
    "shift_sup",
    "almost_period_search",
    "pap0_residual",
]


@dataclass(frozen=True)
class ApTerm:
    """``amplitude * sin(freq * t + phase) * profile``."""

    freq: float
    phase: float = 0.0
    amplitude: float = 1.0
    profile: SpectralField | VectorSpectralField | None = None


@dataclass(frozen=True)
class ApPart:
    terms: tuple[ApTerm, ...] = ()

    def weights(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack(
            [term.amplitude * np.sin(term.freq * t + term.phase) for term in self.terms], axis=-1
        ) if self.terms else np.zeros(t.shape + (0,))

    def sup_bound(self, p=2.0) -> float:
        """``sum |amplitude| * |profile|_p``, an upper bound for the sup norm."""
        return float(sum(abs(term.amplitude) * _profile_norm(term.profile, p) for term in self.terms))


ENVELOPES = ("exponential", "power", "tabulated")


@dataclass(frozen=True, eq=False)
class Pap0Part:
    """Vanishing-mean part ``scale * envelope(t) * profile``.

    ``kind='exponential'`` uses ``exp(-rate |t|)``; ``kind='power'`` uses
    ``(1 + |t|)^(-rate)``.  ``kind='tabulated'`` stores samples ``values``
    at ``times`` (coefficient arrays when ``domain`` is set, else scalars)
    and interpolates linearly between them.
    """

    kind: str = "exponential"
    scale: float = 1.0
    rate: float = 1.0
    profile: SpectralField | VectorSpectralField | None = None
    times: np.ndarray | None = None
    values: np.ndarray | None = None
    domain: BoxDomain | None = None
    vector: bool = False

    def __post_init__(self):
        if self.kind not in ENVELOPES:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.times is None or self.values is None:
                raise ValueError("tabulated part needs times and values")
            if len(self.times) != len(self.values):
                raise ValueError("times and values differ in length")
        elif not self.rate > 0:
            raise ValueError("envelope rate must be positive")

    def envelope(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind == "exponential":
            return np.exp(-self.rate * t)
        if self.kind == "power":
            return (1.0 + t) ** (-self.rate)
        raise TypeError("tabulated parts have no closed-form envelope")

    def tabulated_at(self, t):
        ts = np.asarray(self.times, dtype=float)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < ts[0] - 1e-12) or np.any(t > ts[-1] + 1e-12):
            raise ValueError("time outside the tabulated range")
        vals = np.asarray(self.values, dtype=float)
        flat = vals.reshape(len(ts), -1)
        out = np.stack([np.interp(t, ts, flat[:, i]) for i in range(flat.shape[1])], axis=-1)
        return out.reshape(t.shape + vals.shape[1:])

    def analytic_ergodic_mean(self, L, p=2.0) -> float:
        """Closed-form ``(1/2L) int_{-L}^{L} |phi(t)| dt`` for envelope parts."""
        L = float(L)
        c = abs(self.scale) * _profile_norm(self.profile, p)
        if self.kind == "exponential":
            a = self.rate
            return c * -np.expm1(-a * L) / (a * L)
        if self.kind == "power":
            b = self.rate
            if b == 1.0:
                return c * np.log1p(L) / L
            return c * ((1.0 + L) ** (1.0 - b) - 1.0) / ((1.0 - b) * L)
        raise TypeError("tabulated parts have no closed-form ergodic mean")


def _profile_norm(profile, p):
    return 1.0 if profile is None else lp_norm(profile, p)


def _profile_kind(profile):
    if profile is None:
        return "scalar"
    return "vector" if isinstance(profile, VectorSpectralField) else "field"


@dataclass(frozen=True, eq=False)
class PapSignal:
    """``ap`` plus a sum of vanishing-mean parts; either may be empty."""

    ap: ApPart = field(default_factory=ApPart)
    pap0: tuple[Pap0Part, ...] = ()

    def __post_init__(self):
        pap0 = self.pap0
        if isinstance(pap0, Pap0Part):
            pap0 = (pap0,)
        object.__setattr__(self, "pap0", tuple(pap0))
        kinds, domains = set(), set()
        for term in self.ap.terms:
            kinds.add(_profile_kind(term.profile))
            if term.profile is not None:
                domains.add(term.profile.domain)
        for part in self.pap0:
            if part.kind == "tabulated":
                kinds.add("scalar" if part.domain is None else ("vector" if part.vector else "field"))
                if part.domain is not None:
                    domains.add(part.domain)
            else:
                kinds.add(_profile_kind(part.profile))
                if part.profile is not None:
                    domains.add(part.profile.domain)
        if len(kinds) > 1:
            raise ValueError(f"signal mixes value types {sorted(kinds)}")
        if len(domains) > 1:
            raise ValueError("signal profiles live on different domains")
        object.__setattr__(self, "_kind", kinds.pop() if kinds else "scalar")
        object.__setattr__(self, "_domain", domains.pop() if domains else None)

    @property
    def value_kind(self) -> str:
        """``'scalar'``, ``'field'`` or ``'vector'``."""
        return self._kind

    @property
    def domain(self):
        return self._domain

    @property
    def is_empty(self) -> bool:
        return not self.ap.terms and not self.pap0

    def ap_only(self) -> "PapSignal":
        return PapSignal(self.ap, ())

    def pap0_only(self) -> "PapSignal":
        return PapSignal(ApPart(), self.pap0)

    def __add__(self, other: "PapSignal") -> "PapSignal":
        return PapSignal(ApPart(self.ap.terms + other.ap.terms), self.pap0 + other.pap0)

    def __mul__(self, scalar) -> "PapSignal":
        s = float(scalar)
        terms = tuple(replace(term, amplitude=term.amplitude * s) for term in self.ap.terms)
        parts = []
        for part in self.pap0:
            if part.kind == "tabulated":
                parts.append(replace(part, values=np.asarray(part.values) * s))
            else:
                parts.append(replace(part, scale=part.scale * s))
        return PapSignal(ApPart(terms), tuple(parts))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def _item_shape(signal):
    d = signal.domain
    if signal.value_kind == "scalar":
        return ()
    if signal.value_kind == "vector":
        return (d.dim,) + d.shape
    return d.shape


def _profile_array(profile, shape):
    if profile is None:
        return np.ones(shape)
    if isinstance(profile, VectorSpectralField):
        return profile.components
    return profile.coefficients


def sample_coefficients(signal: PapSignal, times) -> np.ndarray:
    """Stacked samples (scalars or coefficient arrays) at ``times``."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    shape = _item_shape(signal)
    out = np.zeros(t.shape + shape)
    if signal.ap.terms:
        w = signal.ap.weights(t)
        profiles = np.stack([_profile_array(term.profile, shape) for term in signal.ap.terms])
        out += np.tensordot(w, profiles, axes=([-1], [0]))
    for part in signal.pap0:
        if part.kind == "tabulated":
            out += part.tabulated_at(t)
        else:
            env = part.scale * part.envelope(t)
            out += np.multiply.outer(env, _profile_array(part.profile, shape))
    return out


def sample(signal: PapSignal, t: float):
    """Value of the signal at time ``t`` (a float or a field)."""
    c = sample_coefficients(signal, [t])[0]
    if signal.value_kind == "scalar":
        return float(c)
    if signal.value_kind == "vector":
        return VectorSpectralField(signal.domain, c)
    return SpectralField(signal.domain, c)


def sample_trajectory(signal: PapSignal, times, domain: BoxDomain | None = None, vector=None) -> Trajectory:
    """Sample a field-valued signal on a time grid.

    An empty signal needs ``domain`` (and ``vector``) to know its shape.
    """
    times = np.asarray(times, dtype=float)
    if signal.value_kind == "scalar" and signal.is_empty:
        if domain is None:
            raise ValueError("empty signal: pass domain to fix the trajectory shape")
        item = ((domain.dim,) if vector else ()) + domain.shape
        return Trajectory(domain, times, np.zeros((times.size,) + item), bool(vector))
    if signal.value_kind == "scalar":
        raise ValueError("scalar signals cannot be sampled as field trajectories")
    if domain is not None and domain != signal.domain:
        raise ValueError("signal lives on a different domain")
    return Trajectory(signal.domain, times, sample_coefficients(signal, times), signal.value_kind == "vector")


def _magnitudes(domain, coeffs, vector):
    if vector:
        sq = 0.0
        for j in range(domain.dim):
            sq = sq + domain.evaluate(coeffs[:, j], _mixed_kinds(domain.dim, j)) ** 2
        return np.sqrt(sq)
    return np.abs(domain.evaluate(coeffs))


def signal_norms(signal: PapSignal, times, p=2.0, chunk=256) -> np.ndarray:
    """``|signal(t)|_p`` at each time (absolute value for scalar signals)."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if signal.value_kind == "scalar":
        return np.abs(sample_coefficients(signal, t))
    d = signal.domain
    out = np.empty(t.size)
    for start in range(0, t.size, chunk):
        c = sample_coefficients(signal, t[start : start + chunk])
        out[start : start + chunk] = _lp_from_values(d, _magnitudes(d, c, signal.value_kind == "vector"), p)
    return out


def ergodic_mean(obj, L, p=2.0) -> float:
    """``(1/2L) int_{-L}^{L} |phi(t)|_p dt``.

    Signals and closed-form parts use adaptive quadrature (split at the
    envelope kink ``t = 0``); trajectories and tabulated parts use the
    trapezoid rule on their own samples, which must cover ``[-L, L]``.
    """
    L = float(L)
    if not L > 0:
        raise ValueError("L must be positive")
    if isinstance(obj, Trajectory):
        return _trapezoid_mean(obj.times, obj.norms(p), L)
    if isinstance(obj, Pap0Part):
        if obj.kind == "tabulated":
            vals = np.asarray(obj.values, dtype=float)
            if obj.domain is None:
                norms = np.abs(vals)
            else:
                norms = _lp_from_values(obj.domain, _magnitudes(obj.domain, vals, obj.vector), p)
            return _trapezoid_mean(np.asarray(obj.times), norms, L)
        obj = PapSignal(ApPart(), (obj,))
    if any(part.kind == "tabulated" for part in obj.pap0):
        raise ValueError("ergodic mean of a signal with tabulated parts: use the tabulated part directly")

    def norm_at(t):
        return float(signal_norms(obj, [t], p)[0])

    limit = max(200, int(8 * L))
    left = integrate.quad(norm_at, -L, 0.0, limit=limit, epsabs=1e-13, epsrel=1e-10)[0]
    right = integrate.quad(norm_at, 0.0, L, limit=limit, epsabs=1e-13, epsrel=1e-10)[0]
    return (left + right) / (2.0 * L)


def _trapezoid_mean(times, norms, L):
    tol = 1e-9 * max(1.0, L)
    if times[0] > -L + tol or times[-1] < L - tol:
        raise ValueError(f"samples cover [{times[0]}, {times[-1]}], need [-{L}, {L}]")
    keep = (times >= -L - tol) & (times <= L + tol)
    return float(np.trapezoid(norms[keep], times[keep]) / (2.0 * L))


# -- almost periods -----------------------------------------------------------


def _ap_scan_grid(ap: ApPart, density, n_periods):
    freqs = [abs(term.freq) for term in ap.terms if term.freq != 0.0]
    if not freqs:
        return np.zeros(1), 1.0
    shortest = 2 * np.pi / max(freqs)
    longest = 2 * np.pi / min(freqs)
    step = shortest / density
    return np.arange(0.0, n_periods * longest, step), shortest


def _shared_profile(ap: ApPart):
    first = ap.terms[0].profile
    return all(term.profile is first for term in ap.terms), first


def shift_sup(signal: PapSignal, T: float, p=2.0, density=64, n_periods=20) -> float:
    """Grid estimate of ``sup_t |f(t + T) - f(t)|_p`` over the AP part of ``signal``.

    The grid spans ``n_periods`` of the slowest frequency with ``density``
    samples per period of the fastest one.
    """
    ap = signal.ap
    if not ap.terms:
        return 0.0
    t, _ = _ap_scan_grid(ap, density, n_periods)
    return float(_shift_sup_on(ap, T, t, p))


def _shift_sup_on(ap, T, t, p):
    diff_w = ap.weights(t + T) - ap.weights(t)
    shared, prof = _shared_profile(ap)
    if shared:
        return np.max(np.abs(diff_w.sum(axis=-1))) * _profile_norm(prof, p)
    d = prof.domain
    vector = isinstance(prof, VectorSpectralField)
    shape = ((d.dim,) if vector else ()) + d.shape
    profiles = np.stack([_profile_array(term.profile, shape) for term in ap.terms])
    best = 0.0
    for start in range(0, t.size, 256):
        c = np.tensordot(diff_w[start : start + 256], profiles, axes=([-1], [0]))
        mags = _magnitudes(d, c, vector)
        best = max(best, float(np.max(_lp_from_values(d, mags, p))))
    return best


def almost_period_search(signal: PapSignal, eps: float, window, p=2.0, density=64, n_periods=20) -> float:
    """Find ``T`` in ``window = (a, b)`` with ``sup_t |f(t+T) - f(t)| < eps``.

    Only the AP part is examined.  Candidates are scanned at the sampling
    resolution, then the best one is refined by bounded scalar
    minimisation.  Raises :class:`AlmostPeriodNotFound` when no candidate
    qualifies.
    """
    a, b = map(float, window)
    if not b >= a:
        raise ValueError("window must satisfy a <= b")
    if not eps > 0:
        raise ValueError("eps must be positive")
    ap = signal.ap
    if not ap.terms:
        return a
    t, shortest = _ap_scan_grid(ap, density, n_periods)
    step = shortest / density
    cands = np.linspace(a, b, max(2, int(np.ceil((b - a) / step)) + 1))
    sups = np.array([_shift_sup_on(ap, T, t, p) for T in cands])
    i = int(np.argmin(sups))
    lo, hi = cands[max(i - 1, 0)], cands[min(i + 1, cands.size - 1)]
    T_best, s_best = cands[i], sups[i]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda T: _shift_sup_on(ap, T, t, p), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(hi))},
        )
        if res.fun < s_best:
            T_best, s_best = float(res.x), float(res.fun)
    if s_best < eps:
        return float(T_best)
    raise AlmostPeriodNotFound(
        f"no {eps:g}-almost period in [{a:g}, {b:g}] (best sup-difference {s_best:.3g})"
    )


def pap0_residual(trajectory: Trajectory, ap_candidate: Trajectory) -> Pap0Part:
    """Tabulated vanishing-mean candidate ``trajectory - ap_candidate``."""
    if not trajectory.shares_grid(ap_candidate):
        raise GridMismatch("trajectory and AP candidate are sampled on different grids")
    diff = trajectory - ap_candidate
    return Pap0Part(
        kind="tabulated",
        times=np.array(diff.times),
        values=np.array(diff.coefficients),
        domain=diff.domain,
        vector=diff.vector,
    )
