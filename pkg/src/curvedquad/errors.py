"""Exception hierarchy shared by the pure-Python and compiled code paths."""


class CurvedQuadError(Exception):
    """Base class for all errors raised by :mod:`curvedquad`."""


class DegenerateElementError(CurvedQuadError, ValueError):
    """Element is collapsed: collinear corners, vanishing tangents or a
    folded projection."""


class NewtonConvergenceError(CurvedQuadError, ArithmeticError):
    """Newton inversion of the element map failed to converge."""

    def __init__(self, message, target=None, residual=None):
        super().__init__(message)
        self.target = target
        self.residual = residual


class RadialParityError(CurvedQuadError, ArithmeticError):
    """A ray produced an odd number of boundary crossings."""


class MeshFormatError(CurvedQuadError, ValueError):
    """Malformed or unsupported mesh file."""


class SolverError(CurvedQuadError, ArithmeticError):
    """Dense solve failed or the system is too badly conditioned."""
