"""Box domains with a Neumann cosine eigenbasis.

Scalar fields are stored as amplitudes in the tensor cosine basis
``prod_j cos(k_j pi x_j / L_j)``, ``0 <= k_j < modes``.  Vector fields store
component ``j`` in the mixed basis that is sine along axis ``j`` and cosine
along every other axis, so divergence and gradient are exact diagonal maps
between the two representations.

Two point sets are attached to a domain:

* the cell-centred *transform grid* (``quadrature_points`` points per axis),
  on which the discrete cosine/sine transforms are exact for band-limited
  fields, and
* a tensor Gauss-Legendre rule with the same number of points per axis, used
  for every Lp norm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np
from scipy import fft as sfft

__all__ = [
    "BoxDomain",
    "SpectralField",
    "VectorSpectralField",
    "first_eigenvalue",
    "to_coefficients",
    "to_grid",
    "lp_norm",
    "random_field",
    "random_vector_field",
    "synthesize",
    "analyze",
    "batch_norms",
    "coefficient_l2",
]


@dataclass(frozen=True)
class BoxDomain:
    """Tensor-product box ``[0, L_1] x ... x [0, L_n]`` with Neumann walls.

    Parameters
    ----------
    side_lengths : sequence of float
        Positive edge lengths, one per axis.
    modes : int
        Number of cosine modes kept per axis (indices ``0 .. modes - 1``).
    quadrature_points : int, optional
        Points per axis for both the transform grid and the Gauss-Legendre
        rule.  Must be at least ``2 * modes``; defaults to ``4 * modes``.
    """

    side_lengths: tuple[float, ...]
    modes: int = 32
    quadrature_points: int | None = None

    def __post_init__(self):
        lengths = tuple(float(s) for s in np.atleast_1d(self.side_lengths))
        if not lengths or any(not np.isfinite(s) or s <= 0 for s in lengths):
            raise ValueError(f"side lengths must be positive, got {self.side_lengths!r}")
        if int(self.modes) < 1:
            raise ValueError("modes must be >= 1")
        m = self.quadrature_points
        if m is None:
            m = 4 * int(self.modes)
        if int(m) < 2 * int(self.modes):
            raise ValueError(
                f"quadrature_points={m} must be at least 2 * modes = {2 * self.modes}"
            )
        object.__setattr__(self, "side_lengths", lengths)
        object.__setattr__(self, "modes", int(self.modes))
        object.__setattr__(self, "quadrature_points", int(m))

    @classmethod
    def cube(cls, dim=2, length=np.pi, modes=32, quadrature_points=None):
        return cls((float(length),) * dim, modes, quadrature_points)

    @property
    def dim(self) -> int:
        return len(self.side_lengths)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.modes,) * self.dim

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis ``k pi / L`` arrays, each broadcastable over ``shape``."""
        out = []
        for axis, length in enumerate(self.side_lengths):
            shape = [1] * self.dim
            shape[axis] = self.modes
            kappa = np.arange(self.modes) * np.pi / length
            out.append(kappa.reshape(shape))
        return tuple(out)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Neumann eigenvalues ``sum_j (k_j pi / L_j)**2`` over all multi-indices."""
        lam = np.zeros(self.shape)
        for kappa in self.wavenumbers:
            lam = lam + kappa**2
        return lam

    @cached_property
    def basis_weights(self) -> np.ndarray:
        """``int_Omega phi_k**2`` for the unnormalised cosine basis (Parseval weights)."""
        w = np.ones(self.shape)
        for axis, length in enumerate(self.side_lengths):
            shape = [1] * self.dim
            shape[axis] = self.modes
            wa = np.full(self.modes, length / 2.0)
            wa[0] = length
            w = w * wa.reshape(shape)
        return w

    def mixed_basis_weights(self, axis: int) -> np.ndarray:
        """Parseval weights for the basis that is sine along ``axis``."""
        w = self.basis_weights.copy()
        sl = [slice(None)] * self.dim
        sl[axis] = 0
        w[tuple(sl)] = 0.0
        return w

    @cached_property
    def _gauss(self):
        nodes, weights = [], []
        x, w = np.polynomial.legendre.leggauss(self.quadrature_points)
        for length in self.side_lengths:
            nodes.append(0.5 * length * (x + 1.0))
            weights.append(0.5 * length * w)
        return tuple(nodes), tuple(weights)

    @property
    def quadrature_nodes(self) -> tuple[np.ndarray, ...]:
        return self._gauss[0]

    @cached_property
    def quadrature_weights(self) -> np.ndarray:
        """Tensor Gauss-Legendre weights, shape ``(M,) * dim``."""
        w = np.ones((1,) * self.dim)
        for axis, wa in enumerate(self._gauss[1]):
            shape = [1] * self.dim
            shape[axis] = wa.size
            w = w * wa.reshape(shape)
        return w

    @cached_property
    def _quad_basis(self):
        cos_b, sin_b = [], []
        k = np.arange(self.modes)
        for x, length in zip(self.quadrature_nodes, self.side_lengths):
            arg = np.outer(x, k) * np.pi / length
            cos_b.append(np.cos(arg))
            sin_b.append(np.sin(arg))
        return tuple(cos_b), tuple(sin_b)

    def grid_axes(self) -> tuple[np.ndarray, ...]:
        """Cell-centred transform-grid coordinates per axis."""
        m = self.quadrature_points
        return tuple((np.arange(m) + 0.5) * length / m for length in self.side_lengths)

    def grid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.grid_axes(), indexing="ij"))

    def quadrature_grid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.quadrature_nodes, indexing="ij"))

    def evaluate(self, coefficients, kinds=None) -> np.ndarray:
        """Evaluate coefficient arrays at the Gauss-Legendre nodes.

        ``coefficients`` may carry arbitrary leading batch axes; the last
        ``dim`` axes are spectral.  ``kinds`` is a string of ``'c'``/``'s'``
        per axis (all cosine by default).
        """
        kinds = kinds or "c" * self.dim
        cos_b, sin_b = self._quad_basis
        out = np.asarray(coefficients, dtype=float)
        nd = out.ndim
        for axis, kind in enumerate(kinds):
            mat = cos_b[axis] if kind == "c" else sin_b[axis]
            ax = nd - self.dim + axis
            out = np.moveaxis(np.moveaxis(out, ax, -1) @ mat.T, -1, ax)
        return out

    def integrate(self, values) -> np.ndarray:
        """Gauss-Legendre integral over the last ``dim`` axes."""
        axes = tuple(range(-self.dim, 0))
        return np.sum(values * self.quadrature_weights, axis=axes)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "side_lengths": list(self.side_lengths),
            "modes": self.modes,
            "quadrature_points": self.quadrature_points,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoxDomain":
        lengths = d["side_lengths"]
        if "dim" in d and len(lengths) != int(d["dim"]):
            raise ValueError("dim does not match number of side lengths")
        return cls(tuple(lengths), int(d.get("modes", 32)), d.get("quadrature_points"))


def first_eigenvalue(domain: BoxDomain) -> float:
    """Smallest nonzero Neumann eigenvalue, ``min_j (pi / L_j)**2``."""
    return float(min((np.pi / length) ** 2 for length in domain.side_lengths))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Scalar field given by its cosine amplitudes on ``domain``."""

    domain: BoxDomain
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = _frozen(self.coefficients)
        if c.shape != self.domain.shape:
            raise ValueError(f"coefficient shape {c.shape} != {self.domain.shape}")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def mode(cls, domain, k, amplitude=1.0):
        """Single cosine mode ``amplitude * prod cos(k_j pi x_j / L_j)``."""
        c = np.zeros(domain.shape)
        c[tuple(k)] = amplitude
        return cls(domain, c)

    @property
    def mean(self) -> float:
        return float(self.coefficients[(0,) * self.domain.dim])

    def values(self) -> np.ndarray:
        """Values at the Gauss-Legendre nodes."""
        return self.domain.evaluate(self.coefficients)

    def norm(self, p=2.0) -> float:
        return lp_norm(self, p)

    def __add__(self, other):
        _check_same(self, other)
        return SpectralField(self.domain, self.coefficients + other.coefficients)

    def __sub__(self, other):
        _check_same(self, other)
        return SpectralField(self.domain, self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return SpectralField(self.domain, self.coefficients * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.domain, -self.coefficients)

    def to_dict(self) -> dict:
        d = self.domain.to_dict()
        d["coefficients"] = self.coefficients.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralField":
        return cls(BoxDomain.from_dict(d), np.asarray(d["coefficients"], dtype=float))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class VectorSpectralField:
    """Vector field; ``components[j]`` is sine along axis ``j``, cosine elsewhere."""

    domain: BoxDomain
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        n = self.domain.dim
        if c.shape != (n,) + self.domain.shape:
            raise ValueError(f"component shape {c.shape} != {(n,) + self.domain.shape}")
        for j in range(n):
            sl = [slice(None)] * n
            sl[j] = 0
            c[j][tuple(sl)] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @classmethod
    def zeros(cls, domain):
        return cls(domain, np.zeros((domain.dim,) + domain.shape))

    @classmethod
    def mode(cls, domain, component, k, amplitude=1.0):
        """Single mode in component ``component``; ``k[component]`` must be >= 1."""
        c = np.zeros((domain.dim,) + domain.shape)
        c[(component,) + tuple(k)] = amplitude
        return cls(domain, c)

    def values(self) -> np.ndarray:
        """Component values at the Gauss-Legendre nodes, shape ``(dim, M, ...)``."""
        return np.stack(
            [
                self.domain.evaluate(self.components[j], _mixed_kinds(self.domain.dim, j))
                for j in range(self.domain.dim)
            ]
        )

    def norm(self, p=2.0) -> float:
        return lp_norm(self, p)

    def __add__(self, other):
        _check_same(self, other)
        return VectorSpectralField(self.domain, self.components + other.components)

    def __sub__(self, other):
        _check_same(self, other)
        return VectorSpectralField(self.domain, self.components - other.components)

    def __mul__(self, scalar):
        return VectorSpectralField(self.domain, self.components * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return VectorSpectralField(self.domain, -self.components)

    def to_dict(self) -> dict:
        d = self.domain.to_dict()
        d["components"] = self.components.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VectorSpectralField":
        return cls(BoxDomain.from_dict(d), np.asarray(d["components"], dtype=float))


def _check_same(a, b):
    if type(a) is not type(b):
        raise TypeError(f"cannot combine {type(a).__name__} and {type(b).__name__}")
    if a.domain != b.domain:
        raise ValueError("fields live on different domains")


def _mixed_kinds(dim, axis):
    return "".join("s" if i == axis else "c" for i in range(dim))


# -- transforms on cell-centred grids -----------------------------------------


def _pad_axis(x, axis, size):
    pad = [(0, 0)] * x.ndim
    pad[axis] = (0, size - x.shape[axis])
    return np.pad(x, pad)


def synthesize(coefficients, kinds: str, points: int) -> np.ndarray:
    """Evaluate mode amplitudes on a cell-centred grid with ``points`` per axis.

    The last ``len(kinds)`` axes are spectral.  Exact for any number of
    modes up to ``points``.
    """
    x = np.asarray(coefficients, dtype=float)
    dim = len(kinds)
    for i, kind in enumerate(kinds):
        ax = x.ndim - dim + i
        x = _pad_axis(x, ax, points)
        if kind == "c":
            scale = np.full(points, 0.5)
            scale[0] = 1.0
            shape = [1] * x.ndim
            shape[ax] = points
            x = sfft.dct(x * scale.reshape(shape), type=3, axis=ax)
        else:
            # sine index k lives at array index k (index 0 is void); DST-III uses k-1
            x = np.roll(x, -1, axis=ax)
            x = sfft.dst(0.5 * x, type=3, axis=ax)
    return x


def analyze(values, kinds: str, modes: int) -> np.ndarray:
    """Inverse of :func:`synthesize`, truncated to ``modes`` per axis."""
    x = np.asarray(values, dtype=float)
    dim = len(kinds)
    for i, kind in enumerate(kinds):
        ax = x.ndim - dim + i
        points = x.shape[ax]
        if kind == "c":
            x = sfft.dct(x, type=2, axis=ax) / points
            sl = [slice(None)] * x.ndim
            sl[ax] = 0
            x[tuple(sl)] *= 0.5
        else:
            x = sfft.dst(x, type=2, axis=ax) / points
            x = np.roll(x, 1, axis=ax)
            sl = [slice(None)] * x.ndim
            sl[ax] = 0
            x[tuple(sl)] = 0.0
        x = np.take(x, np.arange(modes), axis=ax)
    return x


def to_grid(field) -> np.ndarray:
    """Values of a scalar field on the domain's cell-centred transform grid."""
    d = field.domain
    return synthesize(field.coefficients, "c" * d.dim, d.quadrature_points)


def to_coefficients(grid_values, domain: BoxDomain) -> SpectralField:
    """Cosine amplitudes from samples on the transform grid of ``domain``."""
    g = np.asarray(grid_values, dtype=float)
    expected = (domain.quadrature_points,) * domain.dim
    if g.shape != expected:
        raise ValueError(f"grid shape {g.shape} does not match domain grid {expected}")
    return SpectralField(domain, analyze(g, "c" * domain.dim, domain.modes))


# -- norms --------------------------------------------------------------------


def _lp_from_values(domain, values, p):
    """Lp norm of pointwise magnitudes ``values`` (batch axes allowed)."""
    a = np.abs(values)
    axes = tuple(range(-domain.dim, 0))
    if np.isinf(p):
        return np.max(a, axis=axes)
    scale = np.max(a, axis=axes, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    s = domain.integrate((a / safe) ** p)
    return np.squeeze(safe, axis=axes) * s ** (1.0 / p)


def magnitude_values(obj, batch_coefficients=None) -> np.ndarray:
    """Pointwise |u| (scalar) or Euclidean |F| (vector) at the Gauss nodes."""
    if isinstance(obj, SpectralField):
        return np.abs(obj.values())
    return np.sqrt(np.sum(obj.values() ** 2, axis=0))


def lp_norm(field, p=2.0) -> float:
    """Lp norm over the box via tensor Gauss-Legendre quadrature.

    Vector fields use the pointwise Euclidean length.  ``p = inf`` is the
    maximum over the quadrature nodes.
    """
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(_lp_from_values(field.domain, magnitude_values(field), p))


def batch_norms(domain: BoxDomain, coefficients, p, vector=False, chunk=256) -> np.ndarray:
    """Lp norms of a stack of coefficient arrays (leading axis is the batch).

    For ``vector=True`` each item has shape ``(dim,) + domain.shape``.
    """
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    coefficients = np.asarray(coefficients, dtype=float)
    out = np.empty(coefficients.shape[0])
    for start in range(0, coefficients.shape[0], chunk):
        block = coefficients[start : start + chunk]
        if vector:
            sq = 0.0
            for j in range(domain.dim):
                sq = sq + domain.evaluate(block[:, j], _mixed_kinds(domain.dim, j)) ** 2
            mag = np.sqrt(sq)
        else:
            mag = domain.evaluate(block)
        out[start : start + chunk] = _lp_from_values(domain, mag, p)
    return out


# -- random trial fields ------------------------------------------------------


def _rng(random_state):
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def random_field(domain: BoxDomain, random_state=None, mean_zero=True) -> SpectralField:
    """Gaussian field with amplitude variance ``1 / lambda_k``.

    The mean mode is zero when ``mean_zero``; otherwise it is standard normal.
    """
    rng = _rng(random_state)
    lam = domain.eigenvalues
    std = np.zeros(domain.shape)
    nz = lam > 0
    std[nz] = 1.0 / np.sqrt(lam[nz])
    c = rng.standard_normal(domain.shape) * std
    c[(0,) * domain.dim] = 0.0 if mean_zero else rng.standard_normal()
    return SpectralField(domain, c)


def random_vector_field(domain: BoxDomain, random_state=None) -> VectorSpectralField:
    rng = _rng(random_state)
    lam = domain.eigenvalues
    std = np.zeros(domain.shape)
    nz = lam > 0
    std[nz] = 1.0 / np.sqrt(lam[nz])
    c = rng.standard_normal((domain.dim,) + domain.shape) * std
    return VectorSpectralField(domain, c)


def coefficient_l2(field) -> float:
    """L2 norm from coefficients (Parseval), independent of quadrature."""
    d = field.domain
    if isinstance(field, SpectralField):
        return float(np.sqrt(np.sum(field.coefficients**2 * d.basis_weights)))
    total = 0.0
    for j in range(d.dim):
        total += np.sum(field.components[j] ** 2 * d.mixed_basis_weights(j))
    return float(np.sqrt(total))


def grid_to_csv(path, values):
    """Write grid values row-major: one line per first-axis index."""
    v = np.asarray(values, dtype=float)
    np.savetxt(path, v.reshape(v.shape[0], -1), delimiter=",", fmt="%.17g")


def grid_from_csv(path, domain: BoxDomain) -> np.ndarray:
    v = np.loadtxt(path, delimiter=",", ndmin=2)
    shape = (domain.quadrature_points,) * domain.dim
    if v.size != int(np.prod(shape)):
        raise ValueError(f"CSV holds {v.size} values, domain grid needs {np.prod(shape)}")
    return v.reshape(shape)


def field_mean_zero_tolerance(coefficients) -> float:
    return 1e-12 * max(1.0, float(np.max(np.abs(coefficients))))
