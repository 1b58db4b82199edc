"""Monte-Carlo fitting of heat-semigroup and resolvent-gradient constants.

Each ``verify_*`` routine draws random trial fields, evaluates the ratio of
the left side of an estimate to its right side without the constant, and
reports the largest ratio as the fitted constant.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .domain import (
    BoxDomain,
    batch_norms,
    first_eigenvalue,
    random_field,
    random_vector_field,
)
from .operators import divergence_coefficients, kgamma

__all__ = [
    "EstimateReport",
    "DEFAULT_T_GRID",
    "trial_seeds",
    "verify_dispersive",
    "verify_smoothing",
    "verify_lj_bound",
    "EstimateFitter",
]

DEFAULT_T_GRID = tuple(np.geomspace(1e-3, 10.0, 41))


@dataclass
class EstimateReport:
    """Outcome of one constant-fitting run.

    ``ratios`` has shape ``(trials, len(t_grid))`` (a single column for the
    time-independent resolvent bound) and is not serialised.
    """

    kind: str
    p: float
    q: float
    t_grid: list
    ratio_max: list
    ratio_mean: list
    fitted_constant: float
    exceeded: bool
    trials: int
    seed: int | None = None
    gamma: float | None = None
    property: str = ""
    ratios: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("ratios")
        for key in ("p", "q"):
            if np.isinf(d[key]):
                d[key] = "inf"
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "ratio_max", "ratio_mean"])
            ts = self.t_grid or [float("nan")] * len(self.ratio_max)
            for row in zip(ts, self.ratio_max, self.ratio_mean):
                w.writerow([repr(float(v)) for v in row])


def trial_seeds(seed, trials):
    """Independent per-trial generators derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _inv(p):
    return 0.0 if np.isinf(p) else 1.0 / p


def _check_pq(p, q):
    p, q = float(p), float(q)
    if not (1.0 <= q <= p):
        raise ValueError(f"need 1 <= q <= p <= inf, got p={p}, q={q}")
    return p, q


def _report(kind, p, q, t_grid, ratios, trials, seed, gamma=None, prop=""):
    finite = bool(np.all(np.isfinite(ratios)))
    return EstimateReport(
        kind=kind,
        p=float(p),
        q=float(q),
        t_grid=[float(t) for t in t_grid],
        ratio_max=np.max(ratios, axis=0).tolist(),
        ratio_mean=np.mean(ratios, axis=0).tolist(),
        fitted_constant=float(np.max(ratios)),
        exceeded=not finite,
        trials=int(ratios.shape[0]),
        seed=seed,
        gamma=gamma,
        property=prop,
        ratios=ratios,
    )


def _safe_ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _scalar_trials(domain, fields, trials, seed):
    if fields is not None:
        return np.stack([f.coefficients for f in fields])
    return np.stack(
        [random_field(domain, rng, mean_zero=True).coefficients for rng in trial_seeds(seed, trials)]
    )


def verify_dispersive(
    domain: BoxDomain, p, q, t_grid=DEFAULT_T_GRID, trials=100, seed=0, fields=None
) -> EstimateReport:
    """Fit ``k1`` in ``|e^{t Lap} w|_p <= k1 (1 + t^-a) e^{-lambda1 t} |w|_q`` for mean-zero ``w``.

    ``a = (n/2)(1/q - 1/p)``.  Pass ``fields`` to use specific trial fields
    instead of random ones.
    """
    p, q = _check_pq(p, q)
    n = domain.dim
    lam1 = first_eigenvalue(domain)
    a = 0.5 * n * (_inv(q) - _inv(p))
    c = _scalar_trials(domain, fields, trials, seed)
    norm_q = batch_norms(domain, c, q)
    ratios = np.empty((c.shape[0], len(t_grid)))
    for i, t in enumerate(t_grid):
        lhs = batch_norms(domain, c * np.exp(-domain.eigenvalues * t), p)
        weight = (1.0 + t ** (-a)) * np.exp(-lam1 * t)
        ratios[:, i] = _safe_ratio(lhs, weight * norm_q)
    return _report("dispersive", p, q, t_grid, ratios, c.shape[0], seed, prop="heat-decay-mean-zero")


def verify_smoothing(
    domain: BoxDomain,
    p,
    q,
    t_grid=DEFAULT_T_GRID,
    trials=100,
    seed=0,
    fields=None,
    form="gradient",
) -> EstimateReport:
    """Fit ``k2`` in the gradient smoothing estimate of the heat semigroup.

    ``form='gradient'`` measures ``|grad e^{t Lap} w|_p`` for scalar ``w``;
    ``form='divergence'`` measures ``|div e^{t Lap} F|_p`` for vector ``F``,
    the form in which the estimate enters the Duhamel bounds.  The time
    weight is ``(1 + t^(-1/2 - (n/2)(1/q - 1/p))) e^{-lambda1 t}``.
    """
    p, q = _check_pq(p, q)
    n = domain.dim
    lam1 = first_eigenvalue(domain)
    a = 0.5 + 0.5 * n * (_inv(q) - _inv(p))
    lam = domain.eigenvalues
    if form == "gradient":
        c = _scalar_trials(domain, fields, trials, seed)
        norm_q = batch_norms(domain, c, q)
        kappas = domain.wavenumbers
    elif form == "divergence":
        if fields is not None:
            c = np.stack([f.components for f in fields])
        else:
            c = np.stack(
                [random_vector_field(domain, rng).components for rng in trial_seeds(seed, trials)]
            )
        norm_q = batch_norms(domain, c, q, vector=True)
    else:
        raise ValueError(f"unknown form {form!r}")
    ratios = np.empty((c.shape[0], len(t_grid)))
    for i, t in enumerate(t_grid):
        decayed = c * np.exp(-lam * t)
        if form == "gradient":
            grad = np.stack([-k * decayed for k in kappas], axis=1)
            lhs = batch_norms(domain, grad, p, vector=True)
        else:
            lhs = batch_norms(domain, divergence_coefficients(domain, decayed), p)
        weight = (1.0 + t ** (-a)) * np.exp(-lam1 * t)
        ratios[:, i] = _safe_ratio(lhs, weight * norm_q)
    return _report(f"smoothing-{form}", p, q, t_grid, ratios, c.shape[0], seed, prop="heat-gradient-smoothing")


def lj_target_exponent(p, n):
    """``q`` with ``1/q = 1/p - 1/n``; requires ``1 < p < n``."""
    p = float(p)
    if not 1.0 < p < n:
        raise ValueError(f"resolvent-gradient bound needs 1 < p < n = {n}, got p = {p}")
    return 1.0 / (1.0 / p - 1.0 / n)


def verify_lj_bound(
    domain: BoxDomain, p, gamma, trials=100, seed=0, fields=None, j=None
) -> EstimateReport:
    """Fit ``C`` in ``|L_j w|_q <= C k(gamma) |w|_p`` with ``1/q = 1/p - 1/n``.

    ``j=None`` bounds the whole vector ``grad (-Lap + gamma)^-1 w`` (Euclidean
    length), which dominates every single component.
    """
    n = domain.dim
    q = lj_target_exponent(p, n)
    gamma = float(gamma)
    c = _scalar_trials(domain, fields, trials, seed)
    norm_p = batch_norms(domain, c, p)
    denom = domain.eigenvalues + gamma
    mult = np.zeros(domain.shape)
    mult[denom > 0] = 1.0 / denom[denom > 0]
    v = c * mult
    comps = np.stack([-k * v for k in domain.wavenumbers], axis=1)
    if j is not None:
        keep = np.zeros_like(comps)
        keep[:, j] = comps[:, j]
        comps = keep
    lhs = batch_norms(domain, comps, q, vector=True)
    ratios = _safe_ratio(lhs, kgamma(gamma, n) * norm_p)[:, None]
    return _report("lj", p, q, [], ratios, c.shape[0], seed, gamma=gamma, prop="resolvent-gradient-bound")


class EstimateFitter(BaseEstimator):
    """Estimator wrapper: ``fit(domain)`` draws trials and stores ``constant_``.

    Parameters
    ----------
    estimate : {'dispersive', 'smoothing', 'lj'}
    p, q : float
        Target and source exponents (``q`` is ignored for ``'lj'``).
    gamma : float
        Resolvent shift for ``'lj'``.
    form : {'gradient', 'divergence'}
        Smoothing form.
    n_trials : int
    t_grid : sequence of float, optional
    random_state : int
    """

    def __init__(
        self,
        estimate="dispersive",
        p=1.75,
        q=7 / 6,
        gamma=0.0,
        form="gradient",
        n_trials=100,
        t_grid=None,
        random_state=0,
    ):
        self.estimate = estimate
        self.p = p
        self.q = q
        self.gamma = gamma
        self.form = form
        self.n_trials = n_trials
        self.t_grid = t_grid
        self.random_state = random_state

    def _run(self, domain, seed):
        t_grid = DEFAULT_T_GRID if self.t_grid is None else tuple(self.t_grid)
        if self.estimate == "dispersive":
            return verify_dispersive(domain, self.p, self.q, t_grid, self.n_trials, seed)
        if self.estimate == "smoothing":
            return verify_smoothing(domain, self.p, self.q, t_grid, self.n_trials, seed, form=self.form)
        if self.estimate == "lj":
            return verify_lj_bound(domain, self.p, self.gamma, self.n_trials, seed)
        raise ValueError(f"unknown estimate {self.estimate!r}")

    def fit(self, domain, y=None):
        if not isinstance(domain, BoxDomain):
            raise TypeError("fit expects a BoxDomain")
        self.report_ = self._run(domain, self.random_state)
        self.constant_ = self.report_.fitted_constant
        return self

    def validate(self, domain, random_state):
        """Worst ratio on fresh trials divided by the fitted constant."""
        if not hasattr(self, "constant_"):
            raise AttributeError("EstimateFitter is not fitted yet; call fit first")
        fresh = self._run(domain, random_state)
        return fresh.fitted_constant / self.constant_
