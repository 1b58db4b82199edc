"""Exception types raised across the package."""


class NotInvertibleOnConstants(ValueError):
    """(-Laplacian + gamma) with gamma = 0 applied to a field with nonzero mean."""


class MeanNotZero(ValueError):
    """A field that must have zero spatial mean does not."""


class GridMismatch(ValueError):
    """Two time-sampled objects do not share a time grid."""


class ForcingTooLarge(ValueError):
    """The forcing norm exceeds the admissible bound for the fixed-point ball."""

    def __init__(self, norm, f_max):
        self.norm = norm
        self.f_max = f_max
        super().__init__(f"ForcingTooLarge: forcing norm {norm:.6g} exceeds f_max = {f_max:.6g}")


class NoConvergence(RuntimeError):
    """Picard iteration hit the iteration cap before reaching tolerance."""


class AlmostPeriodNotFound(LookupError):
    """No epsilon-almost period was found in the searched window."""


class InsufficientSamples(ValueError):
    """Too few usable samples for a decay-rate fit."""
