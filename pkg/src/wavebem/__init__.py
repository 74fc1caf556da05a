"""Time-domain boundary integral methods for the scalar wave equation.

Modules
-------
kernels          fundamental solutions and their time antiderivatives
geometry         boundary meshes, distances and domain indicators
quadrature       singular, retarded and volume quadrature
representation   field evaluation from boundary and initial data
bie_solver       marching-on-in-time solvers and the 1-D endpoint solver
verification     Gauss identities, front jump checks, energy balances
oracle           closed-form reference solutions
cli              command-line front end (``wavebem``)
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateSourceError,
    FrontSingularityError,
    GeometryError,
    HistoryUnderflowError,
    NumericalError,
    ToleranceExceeded,
    ValidationError,
    WaveBEMError,
)

__all__ = [
    "__version__",
    "WaveBEMError",
    "ValidationError",
    "GeometryError",
    "DegenerateSourceError",
    "NumericalError",
    "FrontSingularityError",
    "HistoryUnderflowError",
    "ToleranceExceeded",
]
