"""Exception types raised by the identification routines."""


class IdentificationError(ValueError):
    """Base class for numerical failures during identification."""


class UnstableModelError(IdentificationError):
    """The predictor matrix A_K has spectral radius at or above one."""

    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class SingularMatrixError(IdentificationError):
    """A normal-equation matrix is numerically singular."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DegenerateOrderError(IdentificationError):
    """Singular values give no usable gap at the requested model order."""


class NonFiniteError(IdentificationError):
    """An iterate or filter output contains NaN or inf."""
