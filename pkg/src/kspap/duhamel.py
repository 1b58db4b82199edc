"""Whole-line Duhamel integrals, the fixed-point map and its constants.

Time integration is exponential time differencing per mode: the semigroup
factor is applied exactly and the divergence of the bracket
``-w grad (-Lap + gamma)^-1 w + f`` is interpolated linearly over each step,
which is second order in ``dt``.  The integral from ``-inf`` is truncated
``t_hist`` before the first output time; with ``exp(-lambda1 t_hist) <=
1e-12`` the neglected tail is below that fraction of the bracket size.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .domain import BoxDomain, batch_norms, first_eigenvalue, random_field
from .estimates import (
    DEFAULT_T_GRID,
    verify_dispersive,
    verify_lj_bound,
    verify_smoothing,
)
from .exceptions import ForcingTooLarge, GridMismatch, NoConvergence, NotInvertibleOnConstants
from .operators import divergence_coefficients, flux_coefficients, kgamma
from .signals import PapSignal, almost_period_search, ergodic_mean, sample_trajectory, shift_sup
from .trajectory import Trajectory

__all__ = [
    "HISTORY_TOLERANCE",
    "SolverConfig",
    "ConstantsLedger",
    "gamma_fn",
    "ktilde",
    "fit_ledger",
    "duhamel_linear",
    "linear_bound_check",
    "picard_solve",
    "PicardResult",
    "contraction_probe",
    "random_ball_trajectory",
    "pap_preservation_test",
    "FixedPointSolver",
]

HISTORY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Time grid and model parameters for one solve.

    The grid runs from ``t_start - t_hist`` to ``t_end`` in steps of
    ``dt``; output trajectories cover ``[t_start, t_end]``.  ``t_hist`` is
    chosen automatically as the shortest multiple of ``dt`` with
    ``exp(-lambda1 t_hist) <= 1e-12``.
    """

    domain: BoxDomain
    p: float = 3.5
    gamma: float = 0.0
    dt: float = 0.02
    t_hist: float | None = None
    t_end: float = 10.0
    t_start: float = 0.0
    tol: float = 1e-13
    max_iter: int = 60

    def __post_init__(self):
        n = self.domain.dim
        p = float(self.p)
        if not max(3, n) < p < 2 * n:
            raise ValueError(f"p must satisfy max(3, n) < p < 2n = {2 * n}, got {p}")
        if not float(self.gamma) >= 0:
            raise ValueError("gamma must be nonnegative")
        dt = float(self.dt)
        if not dt > 0:
            raise ValueError("dt must be positive")
        span = float(self.t_end) - float(self.t_start)
        if not span > 0:
            raise ValueError("t_end must exceed t_start")
        n_out = int(round(span / dt))
        if abs(n_out * dt - span) > 1e-9 * max(1.0, span):
            raise ValueError(f"window length {span} is not a multiple of dt = {dt}")
        lam1 = first_eigenvalue(self.domain)
        need = math.log(1.0 / HISTORY_TOLERANCE) / lam1
        t_hist = need if self.t_hist is None else float(self.t_hist)
        if math.exp(-lam1 * t_hist) > HISTORY_TOLERANCE * (1 + 1e-9):
            raise ValueError(
                f"t_hist = {t_hist} leaves a truncation factor exp(-lambda1 t_hist) above {HISTORY_TOLERANCE}"
            )
        n_hist = int(math.ceil(t_hist / dt - 1e-9))
        for name, value in (("p", p), ("gamma", float(self.gamma)), ("dt", dt), ("t_hist", n_hist * dt)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "max_iter", int(self.max_iter))

    @property
    def n_hist(self) -> int:
        return int(round(self.t_hist / self.dt))

    @property
    def n_out(self) -> int:
        return int(round((self.t_end - self.t_start) / self.dt))

    @property
    def times(self) -> np.ndarray:
        """Full grid including the history segment."""
        k = np.arange(-self.n_hist, self.n_out + 1)
        return self.t_start + k * self.dt

    @property
    def output_times(self) -> np.ndarray:
        return self.times[self.n_hist :]

    @property
    def lambda1(self) -> float:
        return first_eigenvalue(self.domain)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "p_cfg": self.p,
            "gamma": self.gamma,
            "dt": self.dt,
            "t_hist": self.t_hist,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "tol": self.tol,
            "max_iter": self.max_iter,
        }


# -- constants ----------------------------------------------------------------


def gamma_fn(x: float) -> float:
    """Euler Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def ktilde(lambda1, n, p, C, k2):
    """Duhamel bound constant and the index (0 or 1) of the active branch.

    Branch 0 bounds the quadratic term, ``C k2 (lambda1^-(1-n/p) Gamma(1-n/p) + 1/lambda1)``;
    branch 1 bounds the forcing term, ``k2 (lambda1^-((p-n)/2p) Gamma((p-n)/2p) + 1/lambda1)``.
    """
    lambda1, n, p = float(lambda1), int(n), float(p)
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    a = 1.0 - n / p
    b = (p - n) / (2.0 * p)
    if not (a > 0 and b > 0):
        raise ValueError(f"need n/p < 1 for the time integrals to converge (n={n}, p={p})")
    quad = C * k2 * (lambda1 ** (-a) * gamma_fn(a) + 1.0 / lambda1)
    forcing = k2 * (lambda1 ** (-b) * gamma_fn(b) + 1.0 / lambda1)
    return (quad, 0) if quad >= forcing else (forcing, 1)


@dataclass
class ConstantsLedger:
    """Constants behind the boundedness and contraction estimates.

    ``k1``, ``k2`` and ``C`` are fitted; ``kgamma``, ``ktilde``, ``rho``,
    ``contraction_modulus`` and ``f_max`` follow by formula.  ``rho`` is the
    largest radius with ``2 ktilde kgamma rho <= 1/2``; then any forcing with
    sup norm at most ``f_max = rho / ktilde - kgamma rho**2`` maps the ball
    into itself.
    """

    lambda1: float
    n: int
    p: float
    gamma: float
    k1: float
    k2: float
    C: float
    kgamma: float = field(init=False)
    ktilde: float = field(init=False)
    ktilde_branch: int = field(init=False)
    rho: float = field(init=False)
    contraction_modulus: float = field(init=False)
    f_max: float = field(init=False)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.recompute()

    def recompute(self):
        self.kgamma = kgamma(self.gamma, self.n)
        self.ktilde, self.ktilde_branch = ktilde(self.lambda1, self.n, self.p, self.C, self.k2)
        self.rho = 1.0 / (4.0 * self.ktilde * self.kgamma)
        self.contraction_modulus = 2.0 * self.ktilde * self.kgamma * self.rho
        self.f_max = self.rho / self.ktilde - self.kgamma * self.rho**2
        for key in ("lambda1", "kgamma", "ktilde", "rho", "contraction_modulus", "f_max"):
            self.provenance.setdefault(key, "formula")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def fit_ledger(cfg: SolverConfig, trials=100, seed=0, t_grid=DEFAULT_T_GRID):
    """Fit ``k1``, ``k2``, ``C`` by Monte Carlo and assemble the ledger.

    ``k2`` is the largest fitted constant over the two exponent pairs used in
    the Duhamel bound, ``(p/2, p/3)`` and ``(p/2, pn/(4n-p))``, in both the
    gradient and the divergence form.  Returns ``(ledger, reports)``.
    """
    d, p, n = cfg.domain, cfg.p, cfg.domain.dim
    target = p / 2.0
    reports = {"k1": verify_dispersive(d, target, p / 3.0, t_grid, trials, seed)}
    for label, src in (("p/3", p / 3.0), ("pn/(4n-p)", p * n / (4 * n - p))):
        for form in ("gradient", "divergence"):
            reports[f"k2[{form},{label}]"] = verify_smoothing(d, target, src, t_grid, trials, seed, form=form)
    reports["C"] = verify_lj_bound(d, target, cfg.gamma, trials, seed)
    k2 = max(r.fitted_constant for key, r in reports.items() if key.startswith("k2"))
    prov = {"k1": "fitted", "k2": "fitted", "C": "fitted"}
    ledger = ConstantsLedger(
        lambda1=cfg.lambda1,
        n=n,
        p=p,
        gamma=cfg.gamma,
        k1=reports["k1"].fitted_constant,
        k2=k2,
        C=reports["C"].fitted_constant,
        provenance=prov,
    )
    return ledger, reports


# -- ETD machinery ------------------------------------------------------------


def etd_weights(lam: np.ndarray, dt: float):
    """``E, W0, W1`` with ``u+ = E u + W0 g0 + W1 g1`` for ``u' = -lam u + g``, ``g`` linear."""
    z = np.asarray(lam, dtype=float) * dt
    E = np.exp(-z)
    small = z < 0.1
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    # series of (1 - e^-z)/z and (z - 1 + e^-z)/z^2 for small z
    e1_s = np.zeros_like(z)
    e2_s = np.zeros_like(z)
    term = np.ones_like(z)
    for m in range(12):
        e1_s += term / math.factorial(m + 1)
        e2_s += term / math.factorial(m + 2)
        term = term * -zs
    e1 = np.where(small, e1_s, -np.expm1(-zl) / zl)
    e2 = np.where(small, e2_s, (zl + np.expm1(-zl)) / zl**2)
    return E, dt * (e1 - e2), dt * e2


def _etd_sweep(cfg, g, u0=None):
    E, W0, W1 = etd_weights(cfg.domain.eigenvalues, cfg.dt)
    u = np.empty_like(g)
    u[0] = 0.0 if u0 is None else u0
    a = W0 * g[:-1]
    a += W1 * g[1:]
    for i in range(g.shape[0] - 1):
        u[i + 1] = E * u[i] + a[i]
    return u


def _bracket_divergence(cfg, omega, f_div=None, chunk=128):
    """``div(-w grad v + f)`` at every sample of ``omega`` (coefficient stack)."""
    d = cfg.domain
    g = np.empty_like(omega)
    for s in range(0, omega.shape[0], chunk):
        flux = flux_coefficients(d, omega[s : s + chunk], cfg.gamma)
        g[s : s + chunk] = divergence_coefficients(d, flux)
    if f_div is not None:
        g += f_div
    return g


def _check_mean_zero(cfg, coeffs):
    if cfg.gamma == 0.0:
        means = coeffs[(slice(None),) + (0,) * cfg.domain.dim]
        scale = max(1.0, float(np.max(np.abs(coeffs)))) if coeffs.size else 1.0
        if np.max(np.abs(means)) > 1e-12 * scale:
            raise NotInvertibleOnConstants("gamma = 0 needs a mean-zero omega at every time")


def _sampled(obj, cfg, vector):
    """Coefficient stack of a signal or trajectory on the full grid of ``cfg``."""
    times = cfg.times
    if isinstance(obj, PapSignal):
        obj = sample_trajectory(obj, times, cfg.domain, vector=vector)
    if not isinstance(obj, Trajectory):
        raise TypeError(f"expected PapSignal or Trajectory, got {type(obj).__name__}")
    if obj.vector != vector:
        raise ValueError("expected a vector trajectory" if vector else "expected a scalar trajectory")
    if obj.domain != cfg.domain:
        raise ValueError("trajectory lives on a different domain")
    if len(obj) != times.size or np.max(np.abs(obj.times - times)) > 1e-9 * max(1.0, np.max(np.abs(times))):
        raise GridMismatch("input is not sampled on the solver grid [t_start - t_hist, t_end]")
    return np.asarray(obj.coefficients)


def _full_map(cfg, omega, f_div):
    return _etd_sweep(cfg, _bracket_divergence(cfg, omega, f_div))


def _window(cfg, coeffs, history=False):
    times = cfg.times
    if history:
        return Trajectory(cfg.domain, times, coeffs, False, cfg.t_hist)
    return Trajectory(cfg.domain, times[cfg.n_hist :], coeffs[cfg.n_hist :], False, cfg.t_hist)


def duhamel_linear(omega, f, cfg: SolverConfig, full=False) -> Trajectory:
    """Solution of the linear equation with given ``omega`` and forcing ``f``.

    ``omega`` (scalar) and ``f`` (vector) are :class:`Trajectory` objects on
    ``cfg.times`` or :class:`PapSignal` objects sampled there.  Returns the
    trajectory on ``[t_start, t_end]`` (the full grid when ``full``).
    """
    w = _sampled(omega, cfg, vector=False)
    _check_mean_zero(cfg, w)
    f_div = divergence_coefficients(cfg.domain, _sampled(f, cfg, vector=True))
    return _window(cfg, _full_map(cfg, w, f_div), history=full)


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    margin: float
    passed: bool
    property: str = "linear-boundedness"

    def to_dict(self):
        return asdict(self)


def linear_bound_check(u: Trajectory, omega, f, ledger: ConstantsLedger, cfg: SolverConfig) -> BoundReport:
    """Check ``sup |u|_{p/2} <= ktilde (kgamma |omega|^2_{p/2} + |f|_{p/3})``."""
    w = _sampled(omega, cfg, vector=False)
    fc = _sampled(f, cfg, vector=True)
    d, p = cfg.domain, cfg.p
    w_sup = float(np.max(batch_norms(d, w, p / 2))) if w.size else 0.0
    f_sup = float(np.max(batch_norms(d, fc, p / 3, vector=True))) if fc.size else 0.0
    lhs = u.sup_norm(p / 2)
    rhs = ledger.ktilde * (ledger.kgamma * w_sup**2 + f_sup)
    return BoundReport(lhs=lhs, rhs=rhs, margin=rhs - lhs, passed=bool(lhs <= rhs))


# -- fixed point --------------------------------------------------------------


@dataclass
class PicardResult:
    trajectory: Trajectory
    full: Trajectory
    update_norms: list
    ratios: list
    residual: float
    forcing_norm: float
    iterations: int

    def log_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "update_norm", "ratio"])
            prev = None
            for i, u in enumerate(self.update_norms):
                r = u / prev if prev is not None and min(u, prev) > RATIO_FLOOR else float("nan")
                w.writerow([i + 1, repr(u), repr(r)])
                prev = u


def _sup(cfg, coeffs, p):
    return float(np.max(batch_norms(cfg.domain, coeffs, p))) if coeffs.size else 0.0


RATIO_FLOOR = 1e-14


def picard_solve(f, cfg: SolverConfig, ledger: ConstantsLedger, check_forcing=True) -> PicardResult:
    """Iterate the fixed-point map from zero until the sup-norm update is ``<= cfg.tol``.

    Raises :class:`ForcingTooLarge` when ``|f|_{inf, p/3} > ledger.f_max`` and
    :class:`NoConvergence` after ``cfg.max_iter`` sweeps.  Update ratios are
    logged only while both updates are above ``1e-14``; below that they are
    dominated by rounding.
    """
    fc = _sampled(f, cfg, vector=True)
    d, p = cfg.domain, cfg.p
    f_norm = float(np.max(batch_norms(d, fc, p / 3, vector=True)))
    if check_forcing and f_norm > ledger.f_max:
        raise ForcingTooLarge(f_norm, ledger.f_max)
    f_div = divergence_coefficients(d, fc)
    u = np.zeros((cfg.times.size,) + d.shape)
    updates, ratios = [], []
    for it in range(1, cfg.max_iter + 1):
        new = _full_map(cfg, u, f_div)
        upd = _sup(cfg, new - u, p / 2)
        if updates and updates[-1] > RATIO_FLOOR and upd > RATIO_FLOOR:
            ratios.append(upd / updates[-1])
        updates.append(upd)
        u = new
        if upd <= cfg.tol:
            break
    else:
        raise NoConvergence(
            f"no convergence after {cfg.max_iter} sweeps (last update {updates[-1]:.3g}); "
            "ledger constants may be too optimistic"
        )
    residual = _sup(cfg, _full_map(cfg, u, f_div) - u, p / 2)
    return PicardResult(
        trajectory=_window(cfg, u),
        full=_window(cfg, u, history=True),
        update_norms=updates,
        ratios=ratios,
        residual=residual,
        forcing_norm=f_norm,
        iterations=len(updates),
    )


def phi_map(omega, f, cfg: SolverConfig) -> Trajectory:
    """One application of the fixed-point map on the full grid."""
    return duhamel_linear(omega, f, cfg, full=True)


def contraction_probe(omega1, omega2, cfg: SolverConfig, rho: float) -> float:
    """``|Phi(w1) - Phi(w2)| / |w1 - w2|`` in the ``C_b(L^{p/2})`` norm.

    Both inputs must lie in the ball of radius ``rho``.  The forcing cancels
    in the difference and is omitted.  Returns 0 for identical inputs.
    """
    w1 = _sampled(omega1, cfg, vector=False)
    w2 = _sampled(omega2, cfg, vector=False)
    half = cfg.p / 2
    for w in (w1, w2):
        if _sup(cfg, w, half) > rho * (1 + 1e-9):
            raise ValueError(f"probe input lies outside the ball of radius {rho}")
    den = _sup(cfg, w1 - w2, half)
    if den == 0.0:
        return 0.0
    _check_mean_zero(cfg, w1)
    _check_mean_zero(cfg, w2)
    num = _sup(cfg, _full_map(cfg, w1, None) - _full_map(cfg, w2, None), half)
    return num / den


def random_ball_trajectory(cfg: SolverConfig, rho: float, random_state=None, radius_fraction=None) -> Trajectory:
    """Random mean-zero trajectory with sup norm ``radius_fraction * rho``.

    Two random fields are modulated by ``cos(nu t + phase)`` with random
    ``nu`` in ``[0.2, 2]``; ``radius_fraction`` defaults to a uniform draw in
    ``[0.2, 1]``.
    """
    rng = np.random.default_rng(random_state)
    t = cfg.times
    fields = [random_field(cfg.domain, rng).coefficients for _ in range(2)]
    nu = rng.uniform(0.2, 2.0, size=2)
    ph = rng.uniform(0, 2 * np.pi, size=2)
    c = sum(np.multiply.outer(np.cos(nu[i] * t + ph[i]), fields[i]) for i in range(2))
    frac = rng.uniform(0.2, 1.0) if radius_fraction is None else float(radius_fraction)
    c *= frac * rho / _sup(cfg, c, cfg.p / 2)
    return Trajectory(cfg.domain, t, c, False, cfg.t_hist)


# -- PAP preservation ---------------------------------------------------------


@dataclass
class PapReport:
    period: float
    eps_search: float
    eps_omega: float
    eps_f: float
    omega_sup: float
    solution_shift_sup: float
    shift_bound: float
    ap_pass: bool
    L_values: list
    means: list
    mean_ratios: list
    decay_pass: bool
    ktilde: float
    kgamma: float
    property: str = "pap-preservation"

    def to_dict(self):
        return asdict(self)


def _shift_sup_trajectory(traj: Trajectory, T_steps: int, p) -> float:
    if T_steps <= 0 or T_steps >= len(traj):
        raise ValueError("shift does not fit inside the trajectory window")
    diff = traj.coefficients[T_steps:] - traj.coefficients[:-T_steps]
    return float(np.max(batch_norms(traj.domain, diff, p, vector=traj.vector)))


def pap_preservation_test(
    f: PapSignal,
    cfg: SolverConfig,
    ledger: ConstantsLedger,
    omega: PapSignal | None = None,
    eps=0.5,
    search_window=None,
    L_values=(10, 20, 40, 80),
) -> PapReport:
    """Check that the linear solution operator maps PAP data to PAP solutions.

    Solves with the full data ``(omega, f)`` and with the AP parts only.
    (a) For the almost period ``T`` of ``f``'s AP part (rounded to the time
    grid), the shift-difference of the AP solution must not exceed
    ``ktilde (2 kgamma + 1) eps`` with ``eps`` the measured shift-difference
    of the data.  (b) Ergodic means of the residual (full minus AP solution)
    over ``[-L, L]`` must decrease monotonically in ``L``.
    """
    d, p = cfg.domain, cfg.p
    if omega is None:
        omega = PapSignal()
    omega_ap, f_ap = omega.ap_only(), f.ap_only()
    u_full = duhamel_linear(omega, f, cfg)
    u_ap = duhamel_linear(omega_ap, f_ap, cfg)

    if search_window is None:
        search_window = (0.25 * (cfg.t_end - cfg.t_start), 0.5 * (cfg.t_end - cfg.t_start))
    T = almost_period_search(f_ap, eps, search_window, p / 3) if f_ap.ap.terms else search_window[0]
    steps = max(1, int(round(T / cfg.dt)))
    T_grid = steps * cfg.dt
    eps_f = shift_sup(f_ap, T_grid, p / 3)
    eps_w = shift_sup(omega_ap, T_grid, p / 2) if omega_ap.ap.terms else 0.0
    w_sup = 0.0
    if omega_ap.ap.terms:
        w_sup = float(np.max(batch_norms(d, _sampled(omega_ap, cfg, vector=False), p / 2)))
    sol_shift = _shift_sup_trajectory(u_ap, steps, p / 2)
    bound = ledger.ktilde * (2 * ledger.kgamma + 1) * (eps_w + eps_f)

    residual = u_full - u_ap
    means = [ergodic_mean(residual, L, p / 2) for L in L_values]
    ratios = [means[i + 1] / means[i] if means[i] > 0 else 0.0 for i in range(len(means) - 1)]
    decay = all(means[i + 1] <= means[i] for i in range(len(means) - 1))
    return PapReport(
        period=T_grid,
        eps_search=float(eps),
        eps_omega=eps_w,
        eps_f=eps_f,
        omega_sup=w_sup,
        solution_shift_sup=sol_shift,
        shift_bound=bound,
        ap_pass=bool(sol_shift <= bound and w_sup <= 1.0),
        L_values=list(L_values),
        means=means,
        mean_ratios=ratios,
        decay_pass=bool(decay),
        ktilde=ledger.ktilde,
        kgamma=ledger.kgamma,
    )


class FixedPointSolver(BaseEstimator):
    """Estimator-style front end to :func:`picard_solve`.

    ``fit(forcing)`` fits the constants ledger (unless one is given), runs
    the Picard iteration and stores ``trajectory_``, ``result_`` and
    ``ledger_``.  ``predict(times)`` returns the solution coefficients at
    grid times.
    """

    def __init__(
        self,
        domain=None,
        p=3.5,
        gamma=0.0,
        dt=0.02,
        t_end=10.0,
        t_start=0.0,
        tol=1e-13,
        max_iter=60,
        ledger=None,
        n_trials=100,
        random_state=0,
    ):
        self.domain = domain
        self.p = p
        self.gamma = gamma
        self.dt = dt
        self.t_end = t_end
        self.t_start = t_start
        self.tol = tol
        self.max_iter = max_iter
        self.ledger = ledger
        self.n_trials = n_trials
        self.random_state = random_state

    def _config(self):
        domain = self.domain if self.domain is not None else BoxDomain.cube(2, np.pi, 32)
        return SolverConfig(
            domain, self.p, self.gamma, self.dt, None, self.t_end, self.t_start, self.tol, self.max_iter
        )

    def fit(self, forcing, y=None):
        self.config_ = self._config()
        if self.ledger is None:
            self.ledger_, _ = fit_ledger(self.config_, self.n_trials, self.random_state)
        else:
            self.ledger_ = self.ledger
        self.result_ = picard_solve(forcing, self.config_, self.ledger_)
        self.trajectory_ = self.result_.trajectory
        return self

    def predict(self, times):
        if not hasattr(self, "trajectory_"):
            raise AttributeError("FixedPointSolver is not fitted yet; call fit first")
        return np.stack([self.trajectory_.at(t).coefficients for t in np.atleast_1d(times)])
