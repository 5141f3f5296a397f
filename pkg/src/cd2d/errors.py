"""Exception types shared across the package."""


class CD2DError(Exception):
    """Base class for all package-specific errors."""


class MalformedSpec(CD2DError):
    """Problem data violates a structural requirement (epsilon range, d in (0,1))."""


class BadN(CD2DError):
    """Mesh parameter N is not a multiple of 8 or is too small."""


class GeometryError(CD2DError):
    """Layer pieces of the fitted mesh would overlap or collapse."""


class OnDiscontinuityWithoutSide(CD2DError):
    """Source evaluated on a discontinuity line without a one-sided selector."""


class OutOfDomain(CD2DError):
    """Point lies outside the closed unit square."""


class WrongKind(CD2DError):
    """Row assembly requested at a point of the wrong classification."""


class SingularStructure(CD2DError):
    """Assembled matrix has an empty row."""


class SingularMatrix(CD2DError):
    """Direct factorization broke down."""


class NonFiniteSolution(CD2DError):
    """Solve produced NaN or Inf entries."""


class DimensionMismatch(CD2DError):
    """Operands refer to different grid sizes."""


class MeshMismatch(CD2DError):
    """Fine mesh is not the exact bisection of the coarse mesh."""


class NonPositiveError(CD2DError):
    """Order estimate requires strictly positive error values."""
