"""Initial-value solves and exponential decay of solution differences."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .domain import SpectralField, batch_norms
from .duhamel import ConstantsLedger, SolverConfig, _bracket_divergence, _sampled, etd_weights, picard_solve
from .exceptions import InsufficientSamples, MeanNotZero, NoConvergence
from .operators import divergence_coefficients
from .signals import PapSignal, sample_trajectory
from .trajectory import Trajectory

__all__ = [
    "forward_solve",
    "DecayFit",
    "decay_rate_fit",
    "DecayRateRegressor",
    "StabilityReport",
    "stability_experiment",
]

_FLOOR = 100 * np.finfo(float).eps


def _forcing_divergence(f, cfg, times):
    if f is None:
        return np.zeros((times.size,) + cfg.domain.shape)
    if isinstance(f, PapSignal):
        fc = sample_trajectory(f, times, cfg.domain, vector=True).coefficients
    else:
        fc = _sampled(f, cfg, vector=True)[cfg.n_hist :]
    return divergence_coefficients(cfg.domain, fc)


def forward_solve(u0: SpectralField, f, cfg: SolverConfig, step_tol=1e-16, max_inner=50) -> Trajectory:
    """Solve the initial-value problem on ``[t_start, t_end]`` from ``u0``.

    Uses the same per-mode exponential step as the fixed-point map,
    ``u+ = E u + W0 g(u) + W1 g(u+)``, so each step is implicit in the
    nonlinear bracket ``g`` and is solved by fixed-point iteration until the
    largest coefficient change is below ``step_tol`` times the state size.
    ``f`` is a vector :class:`PapSignal`, a vector :class:`Trajectory` on
    ``cfg.times`` or ``None``.
    """
    d = cfg.domain
    c0 = np.asarray(u0.coefficients, dtype=float)
    scale = max(1.0, float(np.max(np.abs(c0))))
    if abs(c0[(0,) * d.dim]) > 1e-14 * scale:
        raise MeanNotZero(f"initial field has mean coefficient {c0[(0,) * d.dim]:.3g}")
    times = cfg.output_times
    f_div = _forcing_divergence(f, cfg, times)
    E, W0, W1 = etd_weights(d.eigenvalues, cfg.dt)
    u = np.empty((times.size,) + d.shape)
    u[0] = c0
    g = _bracket_divergence(cfg, c0[None], f_div[:1])[0]
    for i in range(times.size - 1):
        base = E * u[i] + W0 * g
        nxt = base + W1 * g
        for _ in range(max_inner):
            g_new = _bracket_divergence(cfg, nxt[None], f_div[i + 1 : i + 2])[0]
            cand = base + W1 * g_new
            change = float(np.max(np.abs(cand - nxt)))
            nxt = cand
            if change <= step_tol * max(1e-300, float(np.max(np.abs(nxt)))):
                break
        else:
            raise NoConvergence(f"implicit step at t = {times[i + 1]:.4g} did not settle")
        g = _bracket_divergence(cfg, nxt[None], f_div[i + 1 : i + 2])[0]
        u[i + 1] = nxt
    return Trajectory(d, times, u, False, 0.0)


@dataclass
class DecayFit:
    """Least-squares fit of ``-log |x(t)|`` against ``t``.

    ``sigma`` is the fitted rate, ``residual`` the RMS misfit of the log
    series and ``n_used`` the number of samples above the noise floor.
    """

    window: tuple
    times: np.ndarray
    log_norms: np.ndarray
    sigma: float
    residual: float
    n_used: int
    target: float | None = None

    @property
    def passed(self) -> bool:
        return self.target is None or self.sigma >= self.target


def decay_rate_fit(times, norms, window=None, target=None, min_samples=5) -> DecayFit:
    """Fit an exponential decay rate to a norm series.

    Only samples inside ``window`` whose value exceeds ``100 eps`` times the
    series maximum are used.

    Raises
    ------
    InsufficientSamples
        If fewer than ``min_samples`` samples survive.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    if t.shape != y.shape:
        raise ValueError("times and norms differ in shape")
    if window is None:
        window = (float(t[0]), float(t[-1]))
    a, b = window
    top = float(np.max(np.abs(y))) if y.size else 0.0
    keep = (t >= a - 1e-12) & (t <= b + 1e-12) & (y > _FLOOR * top) & (y > 0)
    if int(keep.sum()) < min_samples:
        raise InsufficientSamples(f"{int(keep.sum())} usable samples in window {window}, need {min_samples}")
    tk, lk = t[keep], -np.log(y[keep])
    slope, icpt = np.polyfit(tk, lk, 1)
    res = float(np.sqrt(np.mean((lk - (slope * tk + icpt)) ** 2)))
    return DecayFit((float(a), float(b)), tk, lk, float(slope), res, int(keep.sum()), target)


class DecayRateRegressor(RegressorMixin, BaseEstimator):
    """Log-linear decay model ``|x(t)| ~ A exp(-sigma t)``.

    ``fit(t, norms)`` stores ``sigma_`` and ``log_amplitude_``;
    ``predict(t)`` returns the modelled norms.
    """

    def __init__(self, window=None, min_samples=5):
        self.window = window
        self.min_samples = min_samples

    def fit(self, X, y):
        t = np.asarray(X, dtype=float).reshape(-1)
        fit = decay_rate_fit(t, y, self.window, min_samples=self.min_samples)
        self.fit_ = fit
        self.sigma_ = fit.sigma
        self.log_amplitude_ = float(np.mean(-fit.log_norms + fit.sigma * fit.times))
        return self

    def predict(self, X):
        if not hasattr(self, "sigma_"):
            raise AttributeError("DecayRateRegressor is not fitted yet; call fit first")
        t = np.asarray(X, dtype=float).reshape(-1)
        return np.exp(self.log_amplitude_ - self.sigma_ * t)


@dataclass
class StabilityReport:
    sigma_target: float
    sigma_fitted: float
    sigma_semigroup: float
    pass_semigroup_side: bool
    pass_difference_side: bool
    agree: bool
    delta: float
    window: list
    norms_csv_path: str | None = None
    property: str = "exponential-stability-equivalence"

    def to_dict(self):
        d = asdict(self)
        for key in ("sigma_fitted", "sigma_semigroup"):
            if np.isinf(d[key]):
                d[key] = "inf"
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _rate(times, norms, window, quiet):
    if float(np.max(norms)) <= quiet:
        return float("inf")
    try:
        return decay_rate_fit(times, norms, window).sigma
    except InsufficientSamples:
        return float("inf")


def stability_experiment(
    f,
    perturbation: SpectralField,
    sigma: float,
    cfg: SolverConfig,
    ledger: ConstantsLedger,
    base: Trajectory | None = None,
    reference: Trajectory | None = None,
    norms_csv=None,
) -> StabilityReport:
    """Compare the bounded solution with a perturbed initial-value solution.

    The bounded solution ``u_hat`` comes from :func:`picard_solve` (or
    ``base``); the competitor solves forward from ``u_hat(t_start) +
    perturbation``.  The semigroup side fits the decay rate of
    ``|e^{t Lap} perturbation|_{p/2}``; the difference side fits the decay
    rate of ``|u_hat(t) - u(t)|_{p/2}``.  Both fits use the window
    ``[t_end/2, t_end]`` and pass when the rate is at least ``sigma``.
    ``reference`` may carry a precomputed forward solve from
    ``u_hat(t_start)`` so that several perturbations share it.  A difference that stays below ``cfg.tol`` passes trivially.
    """
    d, half = cfg.domain, cfg.p / 2
    pc = np.asarray(perturbation.coefficients)
    if abs(pc[(0,) * d.dim]) > 1e-14 * max(1.0, float(np.max(np.abs(pc)))):
        raise MeanNotZero("perturbation must have zero mean")
    if base is None:
        base = picard_solve(f, cfg, ledger).trajectory
    u0 = SpectralField(d, base.coefficients[0] + pc)
    other = forward_solve(u0, f, cfg)
    # the reference runs through the same stepper so both share rounding
    if reference is None:
        reference = forward_solve(SpectralField(d, base.coefficients[0]), f, cfg)
    ref = reference
    times = ref.times
    diff = batch_norms(d, ref.coefficients - other.coefficients, half)
    lam = d.eigenvalues
    semi = batch_norms(d, pc[None] * np.exp(-np.multiply.outer(times - times[0], lam)), half)
    window = (cfg.t_start + 0.5 * (cfg.t_end - cfg.t_start), cfg.t_end)
    rate_d = _rate(times, diff, window, cfg.tol)
    rate_s = _rate(times, semi, window, cfg.tol)
    pass_d, pass_s = bool(rate_d >= sigma), bool(rate_s >= sigma)
    if norms_csv is not None:
        with open(norms_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "difference_norm", "semigroup_norm"])
            for row in zip(times, diff, semi):
                w.writerow([repr(float(v)) for v in row])
    return StabilityReport(
        sigma_target=float(sigma),
        sigma_fitted=rate_d,
        sigma_semigroup=rate_s,
        pass_semigroup_side=pass_s,
        pass_difference_side=pass_d,
        agree=pass_s == pass_d,
        delta=float(np.max(np.abs(pc))),
        window=list(window),
        norms_csv_path=None if norms_csv is None else str(norms_csv),
    )
