"""Spectral laboratory for bounded mild solutions of parabolic-elliptic chemotaxis on Neumann boxes."""

from .domain import (
    BoxDomain,
    SpectralField,
    VectorSpectralField,
    first_eigenvalue,
    lp_norm,
    random_field,
    random_vector_field,
    to_coefficients,
    to_grid,
)
from .duhamel import (
    ConstantsLedger,
    FixedPointSolver,
    SolverConfig,
    contraction_probe,
    duhamel_linear,
    fit_ledger,
    gamma_fn,
    ktilde,
    linear_bound_check,
    pap_preservation_test,
    picard_solve,
)
from .estimates import EstimateFitter, EstimateReport, verify_dispersive, verify_lj_bound, verify_smoothing
from .exceptions import (
    AlmostPeriodNotFound,
    ForcingTooLarge,
    GridMismatch,
    InsufficientSamples,
    MeanNotZero,
    NoConvergence,
    NotInvertibleOnConstants,
)
from .hyperbolic import hyperbolic_rate_constants, hyperbolic_sigma
from .operators import div_heat, heat, kgamma, lj, resolvent
from .signals import (
    ApPart,
    ApTerm,
    Pap0Part,
    PapSignal,
    almost_period_search,
    ergodic_mean,
    pap0_residual,
    sample,
)
from .stability import DecayRateRegressor, decay_rate_fit, forward_solve, stability_experiment
from .trajectory import Trajectory

__all__ = [
    "AlmostPeriodNotFound",
    "ApPart",
    "ApTerm",
    "BoxDomain",
    "ConstantsLedger",
    "DecayRateRegressor",
    "EstimateFitter",
    "EstimateReport",
    "FixedPointSolver",
    "ForcingTooLarge",
    "GridMismatch",
    "InsufficientSamples",
    "MeanNotZero",
    "NoConvergence",
    "NotInvertibleOnConstants",
    "Pap0Part",
    "PapSignal",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "VectorSpectralField",
    "almost_period_search",
    "contraction_probe",
    "decay_rate_fit",
    "div_heat",
    "duhamel_linear",
    "ergodic_mean",
    "first_eigenvalue",
    "fit_ledger",
    "forward_solve",
    "gamma_fn",
    "heat",
    "hyperbolic_rate_constants",
    "hyperbolic_sigma",
    "kgamma",
    "ktilde",
    "linear_bound_check",
    "lj",
    "lp_norm",
    "pap0_residual",
    "pap_preservation_test",
    "picard_solve",
    "random_field",
    "random_vector_field",
    "resolvent",
    "sample",
    "stability_experiment",
    "to_coefficients",
    "to_grid",
    "verify_dispersive",
    "verify_lj_bound",
    "verify_smoothing",
]

__version__ = "0.1.0"
