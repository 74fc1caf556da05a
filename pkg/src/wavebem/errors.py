"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation problems exit 2, numerical
failures exit 3 and verification tolerance breaches exit 4.
"""


class WaveBEMError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(WaveBEMError, ValueError):
    """Malformed input: scenario files, meshes, argument ranges."""

    exit_code = 2


class GeometryError(ValidationError):
    """Mesh is open, inverted, self-intersecting or otherwise unusable."""


class DegenerateSourceError(ValidationError):
    """Kernel evaluated at coincident source and field points."""


class NumericalError(WaveBEMError, ArithmeticError):
    """Solver breakdown: singular systems, missing history, non-finite values."""

    exit_code = 3


class FrontSingularityError(NumericalError):
    """Pointwise evaluation exactly on the light-cone front of the 2-D kernel."""


class HistoryUnderflowError(NumericalError):
    """A retarded time reaches back before the stored trace history."""


class ToleranceExceeded(WaveBEMError):
    """A verification residual exceeded its declared tolerance."""

    exit_code = 4
