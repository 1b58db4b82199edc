"""Time-sampled fields on a uniform grid."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .domain import BoxDomain, SpectralField, VectorSpectralField, batch_norms
from .exceptions import GridMismatch

__all__ = ["Trajectory"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Scalar or vector field sampled at ``times``.

    ``coefficients`` has shape ``(len(times),) + domain.shape`` for scalar
    trajectories and ``(len(times), dim) + domain.shape`` for vector ones.
    ``history_length`` records how far before the first output time the
    underlying whole-line integral was truncated.
    """

    domain: BoxDomain
    times: np.ndarray
    coefficients: np.ndarray = field(repr=False)
    vector: bool = False
    history_length: float = 0.0

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        c = np.array(self.coefficients, dtype=float)
        item = ((self.domain.dim,) if self.vector else ()) + self.domain.shape
        if t.ndim != 1 or c.shape != (t.size,) + item:
            raise ValueError(f"coefficients {c.shape} do not match times {t.shape} x {item}")
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coefficients", c)

    def __len__(self):
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def shares_grid(self, other: "Trajectory", rtol=1e-12) -> bool:
        if len(self) != len(other):
            return False
        scale = max(1.0, float(np.max(np.abs(self.times)))) if len(self) else 1.0
        return bool(np.all(np.abs(self.times - other.times) <= rtol * scale))

    def check_grid(self, other: "Trajectory"):
        if not self.shares_grid(other):
            raise GridMismatch(
                f"time grids differ ({len(self)} vs {len(other)} samples)"
            )

    def norms(self, p) -> np.ndarray:
        """Lp norm at every sample time."""
        return batch_norms(self.domain, self.coefficients, p, vector=self.vector)

    def sup_norm(self, p) -> float:
        return float(np.max(self.norms(p))) if len(self) else 0.0

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} is not a grid node")
        return i

    def at(self, t: float):
        """Field at grid time ``t``."""
        c = self.coefficients[self.index(t)]
        return VectorSpectralField(self.domain, c) if self.vector else SpectralField(self.domain, c)

    def window(self, start: float, stop: float) -> "Trajectory":
        tol = 1e-9 * max(1.0, abs(start), abs(stop))
        keep = (self.times >= start - tol) & (self.times <= stop + tol)
        return Trajectory(self.domain, self.times[keep], self.coefficients[keep], self.vector, self.history_length)

    def _combine(self, other, sign):
        self.check_grid(other)
        if self.vector != other.vector or self.domain != other.domain:
            raise ValueError("trajectories are not compatible")
        return Trajectory(
            self.domain,
            self.times,
            self.coefficients + sign * other.coefficients,
            self.vector,
            max(self.history_length, other.history_length),
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return Trajectory(self.domain, self.times, self.coefficients * float(scalar), self.vector, self.history_length)

    __rmul__ = __mul__

    def to_csv(self, path):
        """One row per time: ``t`` then the flattened coefficients."""
        flat = self.coefficients.reshape(len(self), -1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"c{i}" for i in range(flat.shape[1])])
            for t, row in zip(self.times, flat):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, domain: BoxDomain, vector=False, history_length=0.0):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        item = ((domain.dim,) if vector else ()) + domain.shape
        return cls(domain, data[:, 0], data[:, 1:].reshape((data.shape[0],) + item), vector, history_length)
