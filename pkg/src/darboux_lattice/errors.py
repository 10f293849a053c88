"""Exception types shared across the package."""


class LatticeToolError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LatticeToolError, ValueError):
    """Invalid user-supplied parameter."""


class DimensionError(ParameterError):
    """Array length does not match the lattice."""


class LatticeError(ParameterError):
    """Lattice data are inconsistent or unusable for the requested operation."""


class SeedError(ParameterError):
    """Seed sequence fails validation or vanishes where it must not."""


class NumericalError(LatticeToolError, ArithmeticError):
    """An iterative method failed to converge or produced non-finite values."""


class SpectrumError(NumericalError):
    """Eigenvalue iteration did not converge."""


class InvalidProbeError(ParameterError):
    """Probe time is not usable for a time-of-flight comparison."""


class NoSolutionError(NumericalError):
    """Root search found no sign change."""


class RealizationError(ParameterError):
    """Lattice cannot be mapped onto a modulated waveguide array."""


class BoundaryContaminationWarning(UserWarning):
    """Wave packet reached the hard-wall edge of the window."""
